#pragma once

#include <stdexcept>
#include <string>

namespace codecat {

// All library failures surface as codecat::Error; the CLI turns them into a
// one-line diagnostic and a nonzero exit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace codecat
