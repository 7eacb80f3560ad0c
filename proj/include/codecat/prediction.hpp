#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace codecat {

struct Prediction {
    std::vector<double> probabilities;
    std::size_t predicted = 0;  // argmax, lowest index on ties

    static Prediction from_probabilities(std::vector<double> p) {
        Prediction out;
        out.predicted = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        out.probabilities = std::move(p);
        return out;
    }
};

}  // namespace codecat
