#include "codecat/checkpoint.hpp"
#include "codecat/error.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace codecat {

namespace {

constexpr char kMagic[8] = {'C', 'O', 'D', 'E', 'C', 'A', 'T', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t get_u64(const unsigned char* bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

std::size_t product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (const auto s : shape) n *= s;
    return n;
}

std::string hex64(std::uint64_t v) {
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(v));
    return buffer;
}

void check_kind(const Container& c, const char* kind) {
    if (!c.header.contains("kind") || c.header["kind"] != kind) {
        throw Error(std::string("checkpoint is not a '") + kind + "' model");
    }
}

std::vector<double> matrix_values(const RowMatrix& m) {
    return std::vector<double>(m.data(), m.data() + m.size());
}

}  // namespace

const NamedArray& Container::array(const std::string& name) const {
    for (const auto& a : arrays) {
        if (a.name == name) return a;
    }
    throw Error("checkpoint has no array '" + name + "'");
}

void write_container(std::ostream& out, const Container& container) {
    nlohmann::ordered_json header = container.header;
    auto& listing = header["arrays"];
    listing = nlohmann::ordered_json::array();
    for (const auto& a : container.arrays) {
        if (product(a.shape) != a.values.size()) throw Error("array '" + a.name + "' does not match its shape");
        listing.push_back({{"name", a.name}, {"shape", a.shape}});
    }
    const std::string text = header.dump();
    out.write(kMagic, sizeof kMagic);
    put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& a : container.arrays) {
        for (const double v : a.values) {
            std::uint64_t bits = 0;
            std::memcpy(&bits, &v, sizeof bits);
            put_u64(out, bits);
        }
    }
    if (!out) throw Error("failed writing checkpoint");
}

Container read_container(std::istream& in) {
    char magic[8];
    unsigned char len_bytes[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw Error("not a codecat checkpoint (bad magic)");
    if (!in.read(reinterpret_cast<char*>(len_bytes), 8)) throw Error("truncated checkpoint header");
    const std::uint64_t len = get_u64(len_bytes);
    if (len > (std::uint64_t{1} << 32)) throw Error("implausible checkpoint header length");
    std::string text(len, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw Error("truncated checkpoint header");

    Container c;
    try {
        c.header = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("bad checkpoint header: ") + e.what());
    }
    const auto listing = c.header.value("arrays", nlohmann::ordered_json::array());
    c.header.erase("arrays");
    for (const auto& entry : listing) {
        NamedArray a;
        a.name = entry.at("name").get<std::string>();
        a.shape = entry.at("shape").get<std::vector<std::size_t>>();
        const std::size_t n = product(a.shape);
        std::vector<unsigned char> raw(n * 8);
        if (n > 0 && !in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
            throw Error("truncated checkpoint array '" + a.name + "'");
        }
        a.values.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t bits = get_u64(raw.data() + 8 * i);
            std::memcpy(&a.values[i], &bits, sizeof bits);
        }
        c.arrays.push_back(std::move(a));
    }
    return c;
}

Container to_container(const NeuralCheckpoint& checkpoint) {
    const auto& model = checkpoint.model;
    Container c;
    c.header["kind"] = "nn";
    c.header["config"] = model.config.to_json();
    c.header["seed"] = model.config.seed;
    c.header["vocab_hash"] = hex64(checkpoint.vocab.hash());
    c.header["categories"] = checkpoint.categories;
    c.header["vocabulary"] = checkpoint.vocab.tokens();
    c.header["optimizer_steps"] = model.optimizer.steps;
    c.header["provenance"] = checkpoint.provenance;

    c.arrays.push_back({"embedding", {model.embedding.vocab_size(), model.embedding.dims()},
                        matrix_values(model.embedding.values)});
    const auto add_set = [&c](const std::string& prefix, const ModelParameters& p) {
        p.for_each([&](const char* name, const std::vector<double>& v) {
            c.arrays.push_back({prefix + name, {v.size()}, v});
        });
    };
    add_set("", model.params);
    add_set("adamax_m/", model.optimizer.first_moment);
    add_set("adamax_u/", model.optimizer.infinity_norm);
    return c;
}

NeuralCheckpoint neural_from_container(const Container& c) {
    check_kind(c, "nn");
    NeuralCheckpoint out;
    out.model.config = ClassifierConfig::from_json(c.header.at("config"));
    out.model.config.validate();
    out.vocab = Vocabulary::from_tokens(c.header.at("vocabulary").get<std::vector<std::string>>());
    if (hex64(out.vocab.hash()) != c.header.value("vocab_hash", std::string{})) {
        throw Error("checkpoint vocabulary does not match its recorded hash");
    }
    out.categories = c.header.at("categories").get<std::vector<std::string>>();
    out.provenance = c.header.value("provenance", nlohmann::ordered_json::object());
    out.model.optimizer.steps = c.header.value("optimizer_steps", std::uint64_t{0});

    const auto& emb = c.array("embedding");
    if (emb.shape.size() != 2) throw Error("embedding array must be two-dimensional");
    out.model.embedding.values = Eigen::Map<const RowMatrix>(emb.values.data(), static_cast<Eigen::Index>(emb.shape[0]),
                                                             static_cast<Eigen::Index>(emb.shape[1]));

    const auto expected = ModelParameters::zeros(out.model.config);
    const auto load_set = [&](const std::string& prefix, ModelParameters& p) {
        p = expected;
        p.for_each([&](const char* name, std::vector<double>& v) {
            const auto& a = c.array(prefix + name);
            if (a.values.size() != v.size()) throw Error("array '" + prefix + name + "' has the wrong size");
            v = a.values;
        });
    };
    load_set("", out.model.params);
    load_set("adamax_m/", out.model.optimizer.first_moment);
    load_set("adamax_u/", out.model.optimizer.infinity_norm);
    if (out.model.embedding.dims() != out.model.config.embed_dims ||
        out.model.embedding.vocab_size() != out.vocab.size()) {
        throw Error("checkpoint embedding does not match its config and vocabulary");
    }
    if (out.categories.size() != out.model.config.num_categories) {
        throw Error("checkpoint category list does not match num_categories");
    }
    return out;
}

Container to_container(const BaselineCheckpoint& checkpoint) {
    Container c;
    c.header["kind"] = "lr";
    c.header["categories"] = checkpoint.categories;
    c.header["bow_vocabulary"] = checkpoint.vocab.terms();
    c.header["provenance"] = checkpoint.provenance;
    c.arrays.push_back({"weights", {checkpoint.model.features, checkpoint.model.classes}, checkpoint.model.weights});
    c.arrays.push_back({"bias", {checkpoint.model.classes}, checkpoint.model.bias});
    return c;
}

BaselineCheckpoint baseline_from_container(const Container& c) {
    check_kind(c, "lr");
    BaselineCheckpoint out;
    out.categories = c.header.at("categories").get<std::vector<std::string>>();
    out.vocab = BowVocabulary(c.header.at("bow_vocabulary").get<std::vector<std::string>>());
    out.provenance = c.header.value("provenance", nlohmann::ordered_json::object());
    const auto& w = c.array("weights");
    const auto& b = c.array("bias");
    if (w.shape.size() != 2 || w.shape[0] != out.vocab.size() || w.shape[1] != out.categories.size() ||
        b.values.size() != out.categories.size()) {
        throw Error("baseline checkpoint arrays do not match its vocabulary and categories");
    }
    out.model = LinearModel{w.shape[0], w.shape[1], w.values, b.values};
    return out;
}

Prediction NeuralClassifier::predict(const std::vector<std::string>& tokens) const {
    const auto ids = encode_ids(tokens, checkpoint_.vocab, checkpoint_.model.config.seq_len);
    return forward(checkpoint_.model, ids);
}

Prediction BaselineClassifier::predict(const std::vector<std::string>& tokens) const {
    return predict_logreg(checkpoint_.model, build_bow_features(tokens, checkpoint_.vocab));
}

std::unique_ptr<FunctionClassifier> load_classifier(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model " + path.string());
    const Container c = read_container(in);
    const std::string kind = c.header.value("kind", std::string{});
    if (kind == "nn") return std::make_unique<NeuralClassifier>(neural_from_container(c));
    if (kind == "lr") return std::make_unique<BaselineClassifier>(baseline_from_container(c));
    throw Error("unknown model kind '" + kind + "' in " + path.string());
}

}  // namespace codecat
