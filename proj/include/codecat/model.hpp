#pragma once

#include "codecat/embedding.hpp"
#include "codecat/prediction.hpp"
#include "codecat/repr.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace codecat {

// Network: frozen embedding -> Conv1D(valid, ReLU) -> MaxPool1D -> LSTM (final
// state) -> Dense(ReLU) -> Dropout -> Dense(softmax).
struct ClassifierConfig {
    std::size_t seq_len = 60;
    std::size_t embed_dims = 100;
    std::size_t filters = 250;
    std::size_t kernel_size = 3;
    std::size_t strides = 1;
    std::size_t pool_size = 2;
    std::size_t lstm_units = 100;
    std::size_t hide_u = 512;
    double dropout_level = 0.5;
    std::size_t num_categories = 0;
    std::size_t epochs = 3;
    std::size_t batch_size = 128;
    double learning_rate = 0.002;  // Adamax
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double validation_fraction = 0.05;
    std::uint64_t seed = 1;

    void validate() const;
    std::size_t conv_steps() const { return (seq_len - kernel_size) / strides + 1; }
    std::size_t pooled_steps() const { return conv_steps() / pool_size; }

    nlohmann::ordered_json to_json() const;
    static ClassifierConfig from_json(const nlohmann::json& j);
    bool operator==(const ClassifierConfig&) const = default;
};

// Trainable parameters, all row-major with the "x * W + b" convention.
//   conv_w   (kernel_size * embed_dims) x filters
//   lstm_wx  filters x 4H, lstm_wh H x 4H, lstm_b 4H; gate blocks [i | f | g | o]
//   hidden_w lstm_units x hide_u, out_w hide_u x num_categories
struct ModelParameters {
    std::vector<double> conv_w, conv_b;
    std::vector<double> lstm_wx, lstm_wh, lstm_b;
    std::vector<double> hidden_w, hidden_b;
    std::vector<double> out_w, out_b;

    static ModelParameters zeros(const ClassifierConfig& c);

    template <typename Self, typename Fn>
    static void visit(Self& self, Fn&& fn) {
        fn("conv_w", self.conv_w);
        fn("conv_b", self.conv_b);
        fn("lstm_wx", self.lstm_wx);
        fn("lstm_wh", self.lstm_wh);
        fn("lstm_b", self.lstm_b);
        fn("hidden_w", self.hidden_w);
        fn("hidden_b", self.hidden_b);
        fn("out_w", self.out_w);
        fn("out_b", self.out_b);
    }
    template <typename Fn> void for_each(Fn&& fn) { visit(*this, std::forward<Fn>(fn)); }
    template <typename Fn> void for_each(Fn&& fn) const { visit(*this, std::forward<Fn>(fn)); }

    std::size_t count() const;
    void set_zero();
    void add(const ModelParameters& other);
    void scale(double factor);
    bool all_finite() const;
    bool operator==(const ModelParameters&) const = default;
};

struct AdamaxState {
    ModelParameters first_moment;
    ModelParameters infinity_norm;
    std::uint64_t steps = 0;

    bool operator==(const AdamaxState&) const = default;
};

struct ClassifierModel {
    ClassifierConfig config;
    EmbeddingMatrix embedding;  // frozen
    ModelParameters params;
    AdamaxState optimizer;
};

// Glorot-uniform weights, zero biases except the LSTM forget gate (1).
ClassifierModel init_model(const ClassifierConfig& config, EmbeddingMatrix embedding, std::uint64_t seed);

// Intermediate activations of one forward pass.
struct ForwardTrace {
    RowMatrix inputs;        // seq_len x embed_dims
    RowMatrix conv;          // conv_steps x filters, post-ReLU
    RowMatrix pooled;        // pooled_steps x filters
    std::vector<std::uint32_t> pool_argmax;  // row in `conv` that won, per pooled cell
    RowMatrix gate_i, gate_f, gate_g, gate_o;  // pooled_steps x H
    RowMatrix cell, hidden_state;              // pooled_steps x H
    Eigen::RowVectorXd dense_pre, dense_out;   // hide_u (dense_out after dropout)
    Eigen::RowVectorXd dropout_mask;           // 0 or 1/(1-p); ones at inference
    Eigen::RowVectorXd logits;
    std::vector<double> probabilities;
};

// Dropout is active only when `training` is true; the mask is drawn from
// `dropout_seed`, so a pass is a pure function of its arguments.
Prediction forward(const ClassifierModel& model, std::span<const TokenId> ids, bool training = false,
                   std::uint64_t dropout_seed = 0, ForwardTrace* trace = nullptr);

// Categorical cross-entropy of one sample and its gradient, accumulated
// (added) into `grad`. Returns the sample loss.
double accumulate_gradient(const ClassifierModel& model, std::span<const TokenId> ids, std::size_t label,
                           bool training, std::uint64_t dropout_seed, ModelParameters& grad);

struct TrainingExample {
    std::vector<TokenId> ids;
    std::size_t label = 0;
};

struct BatchGradient {
    ModelParameters gradient;  // mean over the batch
    double mean_loss = 0.0;
};

// Samples are grouped in fixed chunks of kGradientChunk, each chunk summed in
// sample order and the chunk sums added in chunk order. Chunks run in
// parallel, so the result is bit-identical for any thread count.
inline constexpr std::size_t kGradientChunk = 8;
BatchGradient batch_gradient(const ClassifierModel& model, std::span<const TrainingExample> batch, bool training,
                             std::uint64_t step_seed);
// Same decomposition on the calling thread only.
BatchGradient batch_gradient_serial(const ClassifierModel& model, std::span<const TrainingExample> batch,
                                    bool training, std::uint64_t step_seed);

// Dropout seed for sample `index` of a step.
std::uint64_t sample_dropout_seed(std::uint64_t step_seed, std::size_t index);

// One Adamax update; the embedding is untouched.
void apply_adamax(ClassifierModel& model, const ModelParameters& gradient);

// Backpropagates the batch and applies Adamax. Returns the mean batch loss.
double train_step(ClassifierModel& model, std::span<const TrainingExample> batch, std::uint64_t step_seed);

struct GradientCheckOptions {
    double step = 1e-5;
    // Relative errors use max(|analytic|, |numeric|, floor). Central
    // differences of an O(1) loss carry ~1e-11 of rounding noise, so smaller
    // gradients are compared against the floor instead.
    double floor = 1e-6;
    bool dropout = false;  // must stay off; rejected otherwise
};

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
};

// Central differences over every trainable parameter of `model`.
GradientCheckResult gradient_check(const ClassifierModel& model, std::span<const TokenId> ids, std::size_t label,
                                   const GradientCheckOptions& options = {});

// Post-ReLU convolution outputs: row r is the window starting at token r.
RowMatrix conv_activations(const ClassifierModel& model, std::span<const TokenId> ids);

double accuracy(const ClassifierModel& model, std::span<const TrainingExample> examples);

// Index of the first maximum.
std::size_t select_best_epoch(std::span<const double> validation_accuracy);

struct FitHistory {
    std::vector<double> epoch_loss;
    std::vector<double> validation_accuracy;
    std::size_t best_epoch = 0;  // zero-based
    std::vector<std::string> validation_projects;
};

struct FitResult {
    ClassifierModel model;
    FitHistory history;
};

// Trains `epochs` epochs on shuffled minibatches and returns the snapshot with
// the best validation accuracy.
FitResult fit_examples(ClassifierModel model, std::span<const TrainingExample> train,
                       std::span<const TrainingExample> validation);

// Full training procedure over dataset records: validation_fraction of the
// training projects (at least one) is held out, and every remaining function
// contributes both its co and its cd representation.
FitResult fit(ClassifierModel model, const std::vector<DatasetRecord>& train, const Vocabulary& vocab,
              const std::vector<std::string>& categories);

// Projects chosen for validation, deterministic in `seed`.
std::vector<std::string> choose_validation_projects(const std::vector<DatasetRecord>& train, double fraction,
                                                    std::uint64_t seed);

std::vector<TrainingExample> make_examples(const std::vector<DatasetRecord>& records, const Vocabulary& vocab,
                                           const std::vector<std::string>& categories, std::size_t seq_len,
                                           std::span<const Variant> variants);

std::size_t category_index(const std::vector<std::string>& categories, const std::string& category);

}  // namespace codecat
