#include "codecat/run_config.hpp"
#include "codecat/error.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace codecat {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) throw Error("config key '" + key + "': bad value '" + value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw Error("config key '" + key + "': expected true or false, got '" + value + "'");
}

std::string format_double(double v) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
    return std::string(buffer, ptr);
}

struct Field {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T>
Field size_field(std::string key, T RunConfig::*section, std::size_t T::*member) {
    return {key, [=](const RunConfig& c) { return std::to_string(c.*section.*member); },
            [=](RunConfig& c, const std::string& v) { c.*section.*member = parse_number<std::size_t>(key, v); }};
}

template <typename T>
Field seed_field(std::string key, T RunConfig::*section, std::uint64_t T::*member) {
    return {key, [=](const RunConfig& c) { return std::to_string(c.*section.*member); },
            [=](RunConfig& c, const std::string& v) { c.*section.*member = parse_number<std::uint64_t>(key, v); }};
}

template <typename T>
Field double_field(std::string key, T RunConfig::*section, double T::*member) {
    return {key, [=](const RunConfig& c) { return format_double(c.*section.*member); },
            [=](RunConfig& c, const std::string& v) { c.*section.*member = parse_number<double>(key, v); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> all = [] {
        using R = RunConfig;
        std::vector<Field> f;
        f.push_back(size_field("split.holdout_per_category", &R::split, &SplitConfig::holdout_per_category));
        f.push_back(size_field("split.per_category", &R::split, &SplitConfig::per_category));
        f.push_back(seed_field("split.seed", &R::split, &SplitConfig::seed));

        f.push_back(size_field("glove.window", &R::glove, &GloveConfig::window));
        f.push_back(size_field("glove.dims", &R::glove, &GloveConfig::dims));
        f.push_back(double_field("glove.x_max", &R::glove, &GloveConfig::x_max));
        f.push_back(double_field("glove.alpha", &R::glove, &GloveConfig::alpha));
        f.push_back(double_field("glove.learning_rate", &R::glove, &GloveConfig::learning_rate));
        f.push_back(size_field("glove.iterations", &R::glove, &GloveConfig::iterations));
        f.push_back(seed_field("glove.seed", &R::glove, &GloveConfig::seed));
        f.push_back({"glove.distance_weighting",
                     [](const R& c) { return std::string(c.glove.distance_weighting ? "true" : "false"); },
                     [](R& c, const std::string& v) {
                         c.glove.distance_weighting = parse_bool("glove.distance_weighting", v);
                     }});

        f.push_back(size_field("nn.seq_len", &R::nn, &ClassifierConfig::seq_len));
        f.push_back(size_field("nn.filters", &R::nn, &ClassifierConfig::filters));
        f.push_back(size_field("nn.kernel_size", &R::nn, &ClassifierConfig::kernel_size));
        f.push_back(size_field("nn.strides", &R::nn, &ClassifierConfig::strides));
        f.push_back(size_field("nn.pool_size", &R::nn, &ClassifierConfig::pool_size));
        f.push_back(size_field("nn.lstm_units", &R::nn, &ClassifierConfig::lstm_units));
        f.push_back(size_field("nn.hide_u", &R::nn, &ClassifierConfig::hide_u));
        f.push_back(double_field("nn.dropout_level", &R::nn, &ClassifierConfig::dropout_level));
        f.push_back(size_field("nn.epochs", &R::nn, &ClassifierConfig::epochs));
        f.push_back(size_field("nn.batch_size", &R::nn, &ClassifierConfig::batch_size));
        f.push_back(double_field("nn.learning_rate", &R::nn, &ClassifierConfig::learning_rate));
        f.push_back(double_field("nn.beta1", &R::nn, &ClassifierConfig::beta1));
        f.push_back(double_field("nn.beta2", &R::nn, &ClassifierConfig::beta2));
        f.push_back(double_field("nn.epsilon", &R::nn, &ClassifierConfig::epsilon));
        f.push_back(double_field("nn.validation_fraction", &R::nn, &ClassifierConfig::validation_fraction));
        f.push_back(seed_field("nn.seed", &R::nn, &ClassifierConfig::seed));

        f.push_back(size_field("lr.vocab_size", &R::lr, &BaselineConfig::vocab_size));
        f.push_back({"lr.l2_lambda", [](const R& c) { return format_double(c.lr.logreg.l2_lambda); },
                     [](R& c, const std::string& v) { c.lr.logreg.l2_lambda = parse_number<double>("lr.l2_lambda", v); }});
        f.push_back({"lr.learning_rate", [](const R& c) { return format_double(c.lr.logreg.learning_rate); },
                     [](R& c, const std::string& v) {
                         c.lr.logreg.learning_rate = parse_number<double>("lr.learning_rate", v);
                     }});
        f.push_back({"lr.epochs", [](const R& c) { return std::to_string(c.lr.logreg.epochs); },
                     [](R& c, const std::string& v) { c.lr.logreg.epochs = parse_number<std::size_t>("lr.epochs", v); }});
        f.push_back({"lr.batch_size", [](const R& c) { return std::to_string(c.lr.logreg.batch_size); },
                     [](R& c, const std::string& v) {
                         c.lr.logreg.batch_size = parse_number<std::size_t>("lr.batch_size", v);
                     }});
        f.push_back({"lr.seed", [](const R& c) { return std::to_string(c.lr.logreg.seed); },
                     [](R& c, const std::string& v) { c.lr.logreg.seed = parse_number<std::uint64_t>("lr.seed", v); }});

        f.push_back(size_field("synth.categories", &R::synth, &SynthConfig::categories));
        f.push_back(size_field("synth.projects_per_category", &R::synth, &SynthConfig::projects_per_category));
        f.push_back(size_field("synth.functions_per_project", &R::synth, &SynthConfig::functions_per_project));
        f.push_back(double_field("synth.noise", &R::synth, &SynthConfig::noise));
        f.push_back(double_field("synth.phrase_rate", &R::synth, &SynthConfig::phrase_rate));
        f.push_back(size_field("synth.code_terms", &R::synth, &SynthConfig::code_terms));
        f.push_back(size_field("synth.description_terms", &R::synth, &SynthConfig::description_terms));
        f.push_back(seed_field("synth.seed", &R::synth, &SynthConfig::seed));
        return f;
    }();
    return all;
}

}  // namespace

RunConfig RunConfig::parse(std::string_view text) {
    RunConfig config;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = std::min(text.find('\n', pos), text.size());
        std::string line = trim(text.substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line = trim(line.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        bool known = false;
        for (const auto& f : fields()) {
            if (f.key == key) {
                f.set(config, value);
                known = true;
                break;
            }
        }
        if (!known) throw Error("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    return config;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

std::string RunConfig::to_text() const {
    std::string out;
    for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
    return out;
}

nlohmann::ordered_json RunConfig::to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& f : fields()) j[f.key] = f.get(*this);
    return j;
}

void RunConfig::set_seed(std::uint64_t seed) {
    split.seed = seed;
    glove.seed = seed;
    nn.seed = seed;
    lr.logreg.seed = seed;
    synth.seed = seed;
}

}  // namespace codecat
