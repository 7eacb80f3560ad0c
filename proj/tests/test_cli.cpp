#include "codecat/io.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "codecat_test_cli";

struct Run {
    int status = 0;
    std::string out;
    std::string err;
};

Run cli(const std::string& args) {
    const auto out = kRoot / "stdout.txt";
    const auto err = kRoot / "stderr.txt";
    const std::string command =
        "\"" + std::string(CODECAT_CLI_PATH) + "\" " + args + " > \"" + out.string() + "\" 2> \"" + err.string() + "\"";
    const int raw = std::system(command.c_str());
    Run r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = codecat::read_text_file(out);
    r.err = codecat::read_text_file(err);
    return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// Builds a small corpus, dataset, split, embedding and both models under `dir`.
void build_pipeline(const fs::path& dir, const fs::path& config) {
    const std::string g = "--seed 5 --config " + q(config);
    const std::vector<std::string> steps = {
        g + " dataset synth -o " + q(dir / "corpus"),
        g + " extract " + q(dir / "corpus/src") + " --labels " + q(dir / "corpus/labels.jsonl") + " -o " +
            q(dir / "data.jsonl"),
        g + " dataset split " + q(dir / "data.jsonl") + " -o " + q(dir / "split"),
        g + " embed train " + q(dir / "split/train.jsonl") + " --strategy code-description -o " + q(dir / "cd.emb"),
        g + " train nn " + q(dir / "split/train.jsonl") + " --embedding " + q(dir / "cd.emb") + " -o " +
            q(dir / "nn.bin"),
        g + " train lr " + q(dir / "split/train.jsonl") + " -o " + q(dir / "lr.bin"),
    };
    for (const auto& step : steps) {
        const auto r = cli(step);
        ASSERT_EQ(r.status, 0) << step << "\n" << r.err;
    }
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        fs::remove_all(kRoot);
        fs::create_directories(kRoot);
        codecat::write_file_atomic(kRoot / "run.cfg", [](std::ostream& out) {
            out << "synth.projects_per_category = 6\n"
                   "synth.functions_per_project = 10\n"
                   "split.holdout_per_category = 2\n"
                   "split.per_category = 40\n"
                   "glove.dims = 16\n"
                   "glove.iterations = 5\n"
                   "nn.filters = 8\n"
                   "nn.lstm_units = 6\n"
                   "nn.hide_u = 8\n"
                   "nn.epochs = 1\n"
                   "nn.batch_size = 16\n"
                   "lr.epochs = 20\n";
        });
        build_pipeline(kRoot / "a", kRoot / "run.cfg");
    }
    static void TearDownTestSuite() { fs::remove_all(kRoot); }
};

}  // namespace

TEST_F(Cli, PipelineWritesArtifactsAndSidecars) {
    for (const char* a : {"data.jsonl", "split/train.jsonl", "split/holdout.jsonl", "cd.emb", "nn.bin", "lr.bin"}) {
        EXPECT_TRUE(fs::exists(kRoot / "a" / a)) << a;
    }
    const auto sidecar = codecat::read_text_file(kRoot / "a/split/train.jsonl.runconfig");
    EXPECT_NE(sidecar.find("split.per_category = 40"), std::string::npos);
    EXPECT_NE(sidecar.find("dataset split"), std::string::npos);
}

TEST_F(Cli, EvalPrintsReportOnBothVariants) {
    for (const char* variant : {"co", "cd"}) {
        const auto r = cli("eval " + q(kRoot / "a/lr.bin") + " " + q(kRoot / "a/split/holdout.jsonl") + " --variant " +
                           variant);
        ASSERT_EQ(r.status, 0) << r.err;
        EXPECT_NE(r.out.find("weighted avg"), std::string::npos) << r.out;
        EXPECT_NE(r.out.find("precision"), std::string::npos);
    }
    // The baseline separates this easy corpus perfectly at the project level.
    const auto r = cli("--json eval " + q(kRoot / "a/lr.bin") + " " + q(kRoot / "a/split/holdout.jsonl") +
                       " --variant cd --verdicts " + q(kRoot / "a/verdicts.jsonl"));
    ASSERT_EQ(r.status, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["weighted"]["f1"], 1.0);
    std::ifstream verdicts(kRoot / "a/verdicts.jsonl");
    std::size_t lines = 0;
    for (std::string line; std::getline(verdicts, line);) ++lines;
    EXPECT_EQ(lines, 6u);

    const auto nn = cli("eval " + q(kRoot / "a/nn.bin") + " " + q(kRoot / "a/split/holdout.jsonl"));
    EXPECT_EQ(nn.status, 0) << nn.err;
}

TEST_F(Cli, NeighborsAndExplain) {
    const auto r = cli("embed neighbors " + q(kRoot / "a/cd.emb") + " descrdelim -k 4");
    ASSERT_EQ(r.status, 0) << r.err;
    std::istringstream lines(r.out);
    std::size_t n = 0;
    for (std::string line; std::getline(lines, line);) n += line.empty() ? 0 : 1;
    EXPECT_EQ(n, 4u);

    std::ifstream holdout(kRoot / "a/split/holdout.jsonl");
    std::string first;
    std::getline(holdout, first);
    const auto record = nlohmann::json::parse(first);
    const std::string target = record["project"].get<std::string>() + "/" + record["function"].get<std::string>();
    const auto csv = kRoot / "a/heat.csv";
    const auto e = cli("explain " + q(kRoot / "a/nn.bin") + " " + target + " --dataset " +
                       q(kRoot / "a/split/holdout.jsonl") + " -o " + q(csv));
    ASSERT_EQ(e.status, 0) << e.err;
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header.rfind("window,tokens,f0", 0), 0u) << header;
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    EXPECT_EQ(rows, 58u);
}

TEST_F(Cli, ErrorsAreOneLineDiagnostics) {
    for (const std::string args : {"eval " + q(kRoot / "missing.bin") + " " + q(kRoot / "a/split/holdout.jsonl"),
                                   "embed neighbors " + q(kRoot / "a/cd.emb") + " no_such_token_here"}) {
        const auto r = cli(args);
        EXPECT_NE(r.status, 0) << args;
        EXPECT_EQ(r.err.rfind("codecat: error: ", 0), 0u) << r.err;
        EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
    }
    EXPECT_NE(cli("train").status, 0);
    EXPECT_NE(cli("--config " + q(kRoot / "missing.cfg") + " dataset synth -o " + q(kRoot / "x")).status, 0);
}

TEST_F(Cli, RerunElsewhereIsByteIdentical) {
    build_pipeline(kRoot / "b", kRoot / "run.cfg");
    for (const char* a : {"data.jsonl", "split/train.jsonl", "split/holdout.jsonl", "cd.emb", "nn.bin", "lr.bin",
                          "cd.emb.runconfig"}) {
        EXPECT_EQ(codecat::read_text_file(kRoot / "a" / a), codecat::read_text_file(kRoot / "b" / a)) << a;
    }
}
