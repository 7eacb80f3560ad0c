// codecat command-line front end: extract -> dataset -> embed -> train -> eval -> explain.

#include "codecat/checkpoint.hpp"
#include "codecat/corpus.hpp"
#include "codecat/error.hpp"
#include "codecat/evaluation.hpp"
#include "codecat/io.hpp"
#include "codecat/pipeline.hpp"
#include "codecat/run_config.hpp"
#include "codecat/synth.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <omp.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace codecat;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string config_path;
    bool json = false;
};

RunConfig resolve_config(const Globals& g) {
    RunConfig config = g.config_path.empty() ? RunConfig{} : RunConfig::load(g.config_path);
    if (g.seed) config.set_seed(*g.seed);
    return config;
}

std::vector<DatasetRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset " + path);
    return read_records(in);
}

void save_records(const std::string& path, const std::vector<DatasetRecord>& records) {
    write_file_atomic(path, [&](std::ostream& out) { write_records(out, records); });
}

// Text artifacts carry their provenance in a sidecar next to them.
void write_sidecar(const std::string& path, const std::string& command, const RunConfig& config,
                   const nlohmann::ordered_json& inputs) {
    write_file_atomic(path + ".runconfig", [&](std::ostream& out) {
        out << "# codecat " << command << "\n";
        for (const auto& [name, fingerprint] : inputs.items()) {
            out << "# input " << name << " " << fingerprint.get<std::string>() << "\n";
        }
        out << config.to_text();
    });
}

std::string fingerprint_file(const std::string& path) { return content_fingerprint(read_text_file(path)); }

nlohmann::ordered_json provenance(const std::string& command, const RunConfig& config,
                                  const nlohmann::ordered_json& inputs) {
    nlohmann::ordered_json p;
    p["command"] = command;
    p["inputs"] = inputs;
    p["run_config"] = config.to_text();
    return p;
}

void save_container(const std::string& path, const Container& c) {
    write_file_atomic(path, [&](std::ostream& out) { write_container(out, c); }, true);
}

NeuralCheckpoint load_neural(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model " + path);
    return neural_from_container(read_container(in));
}

// Embedding text files double as their own vocabulary.
std::pair<Vocabulary, EmbeddingMatrix> load_embedding_file(const std::string& path) {
    const std::string text = read_text_file(path);
    std::vector<std::string> tokens = {std::string(kPadToken), std::string(kUnknownToken)};
    std::size_t dims = 0;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        std::istringstream fields(line);
        std::string token, value;
        if (!(fields >> token)) continue;
        std::size_t n = 0;
        while (fields >> value) ++n;
        if (dims == 0) dims = n;
        tokens.push_back(token);
    }
    if (dims == 0) throw Error("embedding file " + path + " is empty");
    Vocabulary vocab = Vocabulary::from_tokens(tokens);
    std::istringstream in(text);
    return {vocab, load_embedding_text(in, vocab, dims)};
}

int cmd_extract(const Globals& g, const std::string& root, const std::string& labels, const std::string& out) {
    const RunConfig config = resolve_config(g);
    const auto result = load_repository(root, read_project_metadata(labels));
    for (const auto& w : result.warnings) std::cerr << "codecat: warning: " << w << "\n";
    const auto records = records_from_projects(result.projects);
    save_records(out, records);
    write_sidecar(out, "extract", config, {{"labels", fingerprint_file(labels)}});
    std::size_t functions = records.size();
    if (g.json) {
        std::cout << nlohmann::ordered_json{{"projects", result.projects.size()}, {"functions", functions}}.dump() << "\n";
    } else {
        std::cout << fmt::format("extracted {} functions from {} projects\n", functions, result.projects.size());
    }
    return 0;
}

int cmd_split(const Globals& g, const std::string& dataset, std::optional<std::size_t> holdout,
              std::optional<std::size_t> per_cat, const std::string& out_dir) {
    RunConfig config = resolve_config(g);
    if (holdout) config.split.holdout_per_category = *holdout;
    if (per_cat) config.split.per_category = *per_cat;
    const auto split = split_records(load_records(dataset), config.split);
    const fs::path dir(out_dir);
    const nlohmann::ordered_json inputs = {{"dataset", fingerprint_file(dataset)}};
    save_records((dir / "train.jsonl").string(), split.train);
    save_records((dir / "holdout.jsonl").string(), split.holdout);
    write_sidecar((dir / "train.jsonl").string(), "dataset split", config, inputs);
    write_sidecar((dir / "holdout.jsonl").string(), "dataset split", config, inputs);
    if (g.json) {
        std::cout << nlohmann::ordered_json{{"train", split.train.size()}, {"holdout", split.holdout.size()}}.dump()
                  << "\n";
    } else {
        std::cout << fmt::format("train {} functions, holdout {} functions\n", split.train.size(), split.holdout.size());
    }
    return 0;
}

int cmd_synth(const Globals& g, const std::string& out_dir) {
    const RunConfig config = resolve_config(g);
    const auto corpus = generate_corpus(config.synth);
    write_corpus(corpus, out_dir);
    write_sidecar((fs::path(out_dir) / "labels.jsonl").string(), "dataset synth", config, nlohmann::ordered_json::object());
    std::cout << fmt::format("wrote {} projects to {}\n", corpus.projects.size(), out_dir);
    return 0;
}

int cmd_embed_train(const Globals& g, const std::string& train, const std::string& strategy, const std::string& out) {
    const RunConfig config = resolve_config(g);
    const auto result = train_embedding(load_records(train), parse_strategy(strategy), config.glove);
    write_file_atomic(out, [&](std::ostream& o) { save_embedding_text(o, result.glove.embedding, result.vocab); });
    write_sidecar(out, "embed train --strategy " + strategy, config, {{"train", fingerprint_file(train)}});
    const double final_loss = result.glove.iteration_loss.empty() ? 0.0 : result.glove.iteration_loss.back();
    if (g.json) {
        std::cout << nlohmann::ordered_json{{"vocabulary", result.vocab.size()}, {"final_loss", final_loss}}.dump()
                  << "\n";
    } else {
        std::cout << fmt::format("vocabulary {} tokens, final loss {:.6f}\n", result.vocab.size(), final_loss);
    }
    return 0;
}

int cmd_embed_load(const Globals& g, const std::string& source, const std::string& train, std::size_t dims,
                   const std::string& out) {
    const RunConfig config = resolve_config(g);
    const Vocabulary vocab = training_vocabulary(load_records(train));
    std::ifstream in(source);
    if (!in) throw Error("cannot open " + source);
    const auto embedding = load_embedding_text(in, vocab, dims);
    write_file_atomic(out, [&](std::ostream& o) { save_embedding_text(o, embedding, vocab); });
    write_sidecar(out, "embed load", config, {{"source", fingerprint_file(source)}, {"train", fingerprint_file(train)}});
    std::cout << fmt::format("aligned {} tokens\n", vocab.size());
    return 0;
}

int cmd_embed_random(const Globals& g, const std::string& train, const std::string& out) {
    const RunConfig config = resolve_config(g);
    const Vocabulary vocab = training_vocabulary(load_records(train));
    const auto embedding = random_embedding(vocab.size(), config.glove.dims, config.glove.seed);
    write_file_atomic(out, [&](std::ostream& o) { save_embedding_text(o, embedding, vocab); });
    write_sidecar(out, "embed random", config, {{"train", fingerprint_file(train)}});
    std::cout << fmt::format("random embedding for {} tokens\n", vocab.size());
    return 0;
}

int cmd_neighbors(const Globals& g, const std::string& emb, const std::string& token, std::size_t k) {
    const auto [vocab, embedding] = load_embedding_file(emb);
    const auto neighbors = nearest_neighbors(embedding, vocab, token, k);
    if (g.json) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& n : neighbors) arr.push_back({{"token", n.token}, {"similarity", n.similarity}});
        std::cout << arr.dump() << "\n";
    } else {
        for (const auto& n : neighbors) std::cout << fmt::format("{:<24} {:.4f}\n", n.token, n.similarity);
    }
    return 0;
}

int cmd_train_nn(const Globals& g, const std::string& train, const std::string& emb, const std::string& out) {
    const RunConfig config = resolve_config(g);
    const auto records = load_records(train);
    const Vocabulary vocab = training_vocabulary(records);
    std::ifstream in(emb);
    if (!in) throw Error("cannot open embedding " + emb);
    const auto embedding = load_embedding_text(in, vocab, config.glove.dims);
    FitHistory history;
    auto checkpoint = train_neural(records, vocab, embedding, config.nn, &history);
    checkpoint.provenance = provenance("train nn", config,
                                       {{"train", fingerprint_file(train)}, {"embedding", fingerprint_file(emb)}});
    checkpoint.provenance["validation_accuracy"] = history.validation_accuracy;
    checkpoint.provenance["best_epoch"] = history.best_epoch;
    save_container(out, to_container(checkpoint));
    if (g.json) {
        std::cout << nlohmann::ordered_json{{"epoch_loss", history.epoch_loss},
                                            {"validation_accuracy", history.validation_accuracy},
                                            {"best_epoch", history.best_epoch}}
                         .dump()
                  << "\n";
    } else {
        for (std::size_t e = 0; e < history.epoch_loss.size(); ++e) {
            std::cout << fmt::format("epoch {}  loss {:.4f}  validation accuracy {:.4f}\n", e + 1,
                                     history.epoch_loss[e], history.validation_accuracy[e]);
        }
        std::cout << fmt::format("kept epoch {}\n", history.best_epoch + 1);
    }
    return 0;
}

int cmd_train_lr(const Globals& g, const std::string& train, const std::string& out) {
    const RunConfig config = resolve_config(g);
    auto checkpoint = train_baseline(load_records(train), config.lr);
    checkpoint.provenance = provenance("train lr", config, {{"train", fingerprint_file(train)}});
    save_container(out, to_container(checkpoint));
    std::cout << fmt::format("baseline over {} terms, {} categories\n", checkpoint.vocab.size(),
                             checkpoint.categories.size());
    return 0;
}

int cmd_eval(const Globals& g, const std::string& model_path, const std::string& holdout, const std::string& variant,
             const std::string& report_path, const std::string& verdicts_path) {
    const auto classifier = load_classifier(model_path);
    const auto evaluation = evaluate_project_level(*classifier, load_records(holdout), parse_variant(variant));
    if (!report_path.empty()) {
        write_file_atomic(report_path, [&](std::ostream& o) { o << evaluation.report.to_json().dump(2) << "\n"; });
    }
    if (!verdicts_path.empty()) {
        write_file_atomic(verdicts_path,
                          [&](std::ostream& o) { write_verdicts(o, evaluation, classifier->categories()); });
    }
    if (g.json) {
        std::cout << evaluation.report.to_json().dump() << "\n";
    } else {
        std::cout << evaluation.report.to_text();
    }
    return 0;
}

int cmd_explain(const Globals& g, const std::string& model_path, const std::string& target, const std::string& dataset,
                const std::string& variant, const std::string& out) {
    const auto slash = target.find('/');
    if (slash == std::string::npos) throw Error("expected <project>/<function>, got '" + target + "'");
    const std::string project = target.substr(0, slash);
    const std::string function = target.substr(slash + 1);
    const auto records = load_records(dataset);
    const auto it = std::find_if(records.begin(), records.end(), [&](const DatasetRecord& r) {
        return r.project == project && r.function == function;
    });
    if (it == records.end()) throw Error("function " + target + " not found in " + dataset);

    const auto checkpoint = load_neural(model_path);
    const auto tokens = it->representation(parse_variant(variant));
    const auto ids = encode_ids(tokens, checkpoint.vocab, checkpoint.model.config.seq_len);
    const RowMatrix act = conv_activations(checkpoint.model, ids);
    const std::size_t kernel = checkpoint.model.config.kernel_size;
    const std::size_t stride = checkpoint.model.config.strides;

    write_file_atomic(out, [&](std::ostream& o) {
        o << "window,tokens";
        for (Eigen::Index f = 0; f < act.cols(); ++f) o << ",f" << f;
        o << "\n";
        for (Eigen::Index r = 0; r < act.rows(); ++r) {
            std::string window;
            for (std::size_t k = 0; k < kernel; ++k) {
                const std::size_t pos = static_cast<std::size_t>(r) * stride + k;
                if (k) window += ' ';
                window += pos < tokens.size() ? tokens[pos] : std::string(kPadToken);
            }
            o << r << "," << window;
            for (Eigen::Index f = 0; f < act.cols(); ++f) o << "," << fmt::format("{}", act(r, f));
            o << "\n";
        }
    });
    const auto intensity = window_intensity(act);
    const auto top = static_cast<std::size_t>(std::max_element(intensity.begin(), intensity.end()) - intensity.begin());
    if (g.json) {
        std::cout << nlohmann::ordered_json{{"windows", act.rows()}, {"filters", act.cols()}, {"strongest_window", top}}
                         .dump()
                  << "\n";
    } else {
        std::cout << fmt::format("{} windows x {} filters, strongest window {}\n", act.rows(), act.cols(), top);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"codecat: categorize software projects from their functions"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Seed for every randomized stage");
    app.add_option("--threads", g.threads, "Worker threads (default: all)")->check(CLI::NonNegativeNumber);
    app.add_option("--config", g.config_path, "Run configuration file (key = value)");
    app.add_flag("--json", g.json, "Machine-readable output");

    std::function<int()> action;

    auto* extract = app.add_subcommand("extract", "Extract functions from a source tree into a dataset");
    std::string root, labels, out;
    extract->add_option("root", root, "Directory with one subdirectory per project")->required();
    extract->add_option("--labels", labels, "Project metadata JSON-lines")->required();
    extract->add_option("-o,--output", out, "Dataset JSON-lines")->required();
    extract->callback([&] { action = [&] { return cmd_extract(g, root, labels, out); }; });

    auto* dataset = app.add_subcommand("dataset", "Dataset operations");
    dataset->require_subcommand(1);
    auto* split = dataset->add_subcommand("split", "Holdout and undersample by category");
    std::string dataset_path, out_dir;
    std::optional<std::size_t> holdout_n, per_cat;
    split->add_option("dataset", dataset_path)->required();
    split->add_option("--holdout-per-cat", holdout_n, "Projects withheld per category");
    split->add_option("--per-cat", per_cat, "Training functions per category");
    split->add_option("-o,--output", out_dir, "Directory for train.jsonl and holdout.jsonl")->required();
    split->callback([&] { action = [&] { return cmd_split(g, dataset_path, holdout_n, per_cat, out_dir); }; });

    auto* synth = dataset->add_subcommand("synth", "Generate the synthetic labeled corpus");
    synth->add_option("-o,--output", out_dir, "Output directory")->required();
    synth->callback([&] { action = [&] { return cmd_synth(g, out_dir); }; });

    auto* embed = app.add_subcommand("embed", "Word embeddings");
    embed->require_subcommand(1);
    auto* embed_train = embed->add_subcommand("train", "Train a GloVe embedding on the training set");
    std::string train_path, strategy = "code-description";
    embed_train->add_option("train", train_path)->required();
    embed_train->add_option("--strategy", strategy)->check(CLI::IsMember({"code-only", "code-description"}));
    embed_train->add_option("-o,--output", out)->required();
    embed_train->callback([&] { action = [&] { return cmd_embed_train(g, train_path, strategy, out); }; });

    auto* embed_load = embed->add_subcommand("load", "Align an external GloVe text file to the training vocabulary");
    std::string source;
    std::size_t dims = 100;
    embed_load->add_option("source", source)->required();
    embed_load->add_option("--train", train_path, "Training dataset defining the vocabulary")->required();
    embed_load->add_option("--dims", dims);
    embed_load->add_option("-o,--output", out)->required();
    embed_load->callback([&] { action = [&] { return cmd_embed_load(g, source, train_path, dims, out); }; });

    auto* embed_random = embed->add_subcommand("random", "Random embedding over the training vocabulary");
    embed_random->add_option("--train", train_path)->required();
    embed_random->add_option("-o,--output", out)->required();
    embed_random->callback([&] { action = [&] { return cmd_embed_random(g, train_path, out); }; });

    auto* neighbors = embed->add_subcommand("neighbors", "Nearest neighbors of a token by cosine");
    std::string emb_path, token;
    std::size_t k = 10;
    neighbors->add_option("embedding", emb_path)->required();
    neighbors->add_option("token", token)->required();
    neighbors->add_option("-k", k);
    neighbors->callback([&] { action = [&] { return cmd_neighbors(g, emb_path, token, k); }; });

    auto* train = app.add_subcommand("train", "Train a classifier");
    train->require_subcommand(1);
    auto* train_nn = train->add_subcommand("nn", "Convolutional LSTM classifier");
    train_nn->add_option("train", train_path)->required();
    train_nn->add_option("--embedding", emb_path)->required();
    train_nn->add_option("-o,--output", out)->required();
    train_nn->callback([&] { action = [&] { return cmd_train_nn(g, train_path, emb_path, out); }; });

    auto* train_lr = train->add_subcommand("lr", "Bag-of-words logistic regression");
    train_lr->add_option("train", train_path)->required();
    train_lr->add_option("-o,--output", out)->required();
    train_lr->callback([&] { action = [&] { return cmd_train_lr(g, train_path, out); }; });

    auto* eval = app.add_subcommand("eval", "Project-level evaluation on a holdout set");
    std::string model_path, holdout_path, variant = "cd", report_path, verdicts_path;
    eval->add_option("model", model_path)->required();
    eval->add_option("holdout", holdout_path)->required();
    eval->add_option("--variant", variant)->check(CLI::IsMember({"co", "cd"}));
    eval->add_option("--report", report_path, "Write the JSON report here");
    eval->add_option("--verdicts", verdicts_path, "Write per-project verdicts (JSON-lines) here");
    eval->callback([&] {
        action = [&] { return cmd_eval(g, model_path, holdout_path, variant, report_path, verdicts_path); };
    });

    auto* explain = app.add_subcommand("explain", "Export convolution activations of one function as CSV");
    std::string target;
    explain->add_option("model", model_path)->required();
    explain->add_option("target", target, "<project>/<function>")->required();
    explain->add_option("--dataset", dataset_path, "Dataset holding the function")->required();
    explain->add_option("--variant", variant)->check(CLI::IsMember({"co", "cd"}));
    explain->add_option("-o,--output", out)->required();
    explain->callback([&] { action = [&] { return cmd_explain(g, model_path, target, dataset_path, variant, out); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (g.threads > 0) omp_set_num_threads(g.threads);
    try {
        return action();
    } catch (const std::exception& e) {
        std::cerr << "codecat: error: " << e.what() << "\n";
        return 1;
    }
}
