#include "codecat/model.hpp"
#include "codecat/error.hpp"
#include "codecat/kernels.hpp"
#include "codecat/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace codecat {

namespace {

using ConstMap = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;
using ConstRowMap = Eigen::Map<const Eigen::RowVectorXd>;
using RowMap = Eigen::Map<Eigen::RowVectorXd>;

Eigen::Index idx(std::size_t v) {
    return static_cast<Eigen::Index>(v);
}

double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

void fill_glorot(std::vector<double>& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : w) v = rng.uniform(-limit, limit);
}

void run_forward(const ClassifierModel& model, std::span<const TokenId> ids, bool training, std::uint64_t dropout_seed,
                 ForwardTrace& tr) {
    const auto& cfg = model.config;
    const auto& p = model.params;
    if (ids.size() != cfg.seq_len) {
        throw Error("input has " + std::to_string(ids.size()) + " ids; model expects seq_len " +
                    std::to_string(cfg.seq_len));
    }
    const auto vocab_size = model.embedding.vocab_size();
    tr.inputs.resize(idx(cfg.seq_len), idx(cfg.embed_dims));
    for (std::size_t t = 0; t < ids.size(); ++t) {
        if (ids[t] >= vocab_size) throw Error("token id " + std::to_string(ids[t]) + " outside the embedding");
        tr.inputs.row(idx(t)) = model.embedding.values.row(ids[t]);
    }

    kernels::conv1d_relu(tr.inputs, p.conv_w, p.conv_b, cfg.kernel_size, cfg.strides, tr.conv);
    kernels::maxpool(tr.conv, cfg.pool_size, tr.pooled, tr.pool_argmax);

    const auto units = idx(cfg.lstm_units);
    const auto steps = tr.pooled.rows();
    const ConstMap wx(p.lstm_wx.data(), idx(cfg.filters), 4 * units);
    const ConstMap wh(p.lstm_wh.data(), units, 4 * units);
    const ConstRowMap b(p.lstm_b.data(), 4 * units);
    RowMatrix pre = tr.pooled * wx;
    pre.rowwise() += b;
    tr.gate_i.resize(steps, units);
    tr.gate_f.resize(steps, units);
    tr.gate_g.resize(steps, units);
    tr.gate_o.resize(steps, units);
    tr.cell.resize(steps, units);
    tr.hidden_state.resize(steps, units);
    Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(units);
    Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(units);
    Eigen::RowVectorXd z(4 * units);
    for (Eigen::Index t = 0; t < steps; ++t) {
        z.noalias() = pre.row(t) + h * wh;
        for (Eigen::Index u = 0; u < units; ++u) {
            const double gi = sigmoid(z(u));
            const double gf = sigmoid(z(units + u));
            const double gg = std::tanh(z(2 * units + u));
            const double go = sigmoid(z(3 * units + u));
            c(u) = gf * c(u) + gi * gg;
            h(u) = go * std::tanh(c(u));
            tr.gate_i(t, u) = gi;
            tr.gate_f(t, u) = gf;
            tr.gate_g(t, u) = gg;
            tr.gate_o(t, u) = go;
        }
        tr.cell.row(t) = c;
        tr.hidden_state.row(t) = h;
    }

    const auto hidden = idx(cfg.hide_u);
    const ConstMap hw(p.hidden_w.data(), units, hidden);
    tr.dense_pre = h * hw + ConstRowMap(p.hidden_b.data(), hidden);
    tr.dropout_mask = Eigen::RowVectorXd::Ones(hidden);
    if (training && cfg.dropout_level > 0.0) {
        Rng rng(dropout_seed);
        const double keep_scale = 1.0 / (1.0 - cfg.dropout_level);
        for (Eigen::Index d = 0; d < hidden; ++d) {
            tr.dropout_mask(d) = rng.uniform01() < cfg.dropout_level ? 0.0 : keep_scale;
        }
    }
    tr.dense_out = tr.dense_pre.cwiseMax(0.0).cwiseProduct(tr.dropout_mask);

    const auto classes = idx(cfg.num_categories);
    const ConstMap ow(p.out_w.data(), hidden, classes);
    tr.logits = tr.dense_out * ow + ConstRowMap(p.out_b.data(), classes);
    const double top = tr.logits.maxCoeff();
    tr.probabilities.resize(cfg.num_categories);
    double total = 0.0;
    for (Eigen::Index k = 0; k < classes; ++k) {
        tr.probabilities[static_cast<std::size_t>(k)] = std::exp(tr.logits(k) - top);
        total += tr.probabilities[static_cast<std::size_t>(k)];
    }
    for (auto& v : tr.probabilities) v /= total;
}

double cross_entropy(const Eigen::RowVectorXd& logits, std::size_t label) {
    const double top = logits.maxCoeff();
    const double lse = top + std::log((logits.array() - top).exp().sum());
    return lse - logits(idx(label));
}

void backward(const ClassifierModel& model, const ForwardTrace& tr, std::size_t label, ModelParameters& g) {
    const auto& cfg = model.config;
    const auto& p = model.params;
    const auto units = idx(cfg.lstm_units);
    const auto hidden = idx(cfg.hide_u);
    const auto classes = idx(cfg.num_categories);
    const auto steps = tr.pooled.rows();

    Eigen::RowVectorXd d_logits = ConstRowMap(tr.probabilities.data(), classes);
    d_logits(idx(label)) -= 1.0;

    Map(g.out_w.data(), hidden, classes).noalias() += tr.dense_out.transpose() * d_logits;
    RowMap(g.out_b.data(), classes) += d_logits;
    Eigen::RowVectorXd d_dense = d_logits * ConstMap(p.out_w.data(), hidden, classes).transpose();
    for (Eigen::Index d = 0; d < hidden; ++d) {
        d_dense(d) = tr.dense_pre(d) > 0.0 ? d_dense(d) * tr.dropout_mask(d) : 0.0;
    }

    const Eigen::RowVectorXd h_last = tr.hidden_state.row(steps - 1);
    Map(g.hidden_w.data(), units, hidden).noalias() += h_last.transpose() * d_dense;
    RowMap(g.hidden_b.data(), hidden) += d_dense;
    Eigen::RowVectorXd dh = d_dense * ConstMap(p.hidden_w.data(), units, hidden).transpose();

    const ConstMap wx(p.lstm_wx.data(), idx(cfg.filters), 4 * units);
    const ConstMap wh(p.lstm_wh.data(), units, 4 * units);
    Map gwh(g.lstm_wh.data(), units, 4 * units);
    RowMatrix dz(steps, 4 * units);
    Eigen::RowVectorXd dc = Eigen::RowVectorXd::Zero(units);
    for (Eigen::Index t = steps - 1; t >= 0; --t) {
        for (Eigen::Index u = 0; u < units; ++u) {
            const double gi = tr.gate_i(t, u);
            const double gf = tr.gate_f(t, u);
            const double gg = tr.gate_g(t, u);
            const double go = tr.gate_o(t, u);
            const double tc = std::tanh(tr.cell(t, u));
            const double c_prev = t > 0 ? tr.cell(t - 1, u) : 0.0;
            const double dcell = dc(u) + dh(u) * go * (1.0 - tc * tc);
            dz(t, u) = dcell * gg * gi * (1.0 - gi);
            dz(t, units + u) = dcell * c_prev * gf * (1.0 - gf);
            dz(t, 2 * units + u) = dcell * gi * (1.0 - gg * gg);
            dz(t, 3 * units + u) = dh(u) * tc * go * (1.0 - go);
            dc(u) = dcell * gf;
        }
        if (t > 0) {
            gwh.noalias() += tr.hidden_state.row(t - 1).transpose() * dz.row(t);
            dh.noalias() = dz.row(t) * wh.transpose();
        }
    }
    Map(g.lstm_wx.data(), idx(cfg.filters), 4 * units).noalias() += tr.pooled.transpose() * dz;
    RowMap(g.lstm_b.data(), 4 * units) += dz.colwise().sum();
    const RowMatrix d_pooled = dz * wx.transpose();

    RowMatrix d_conv = RowMatrix::Zero(tr.conv.rows(), tr.conv.cols());
    const auto filters = tr.conv.cols();
    for (Eigen::Index r = 0; r < d_pooled.rows(); ++r) {
        for (Eigen::Index f = 0; f < filters; ++f) {
            const auto src = tr.pool_argmax[static_cast<std::size_t>(r * filters + f)];
            if (tr.conv(src, f) > 0.0) d_conv(src, f) += d_pooled(r, f);
        }
    }
    kernels::conv1d_backward(tr.inputs, d_conv, cfg.kernel_size, cfg.strides, g.conv_w, g.conv_b);
}

}  // namespace

void ClassifierConfig::validate() const {
    if (seq_len < 1 || embed_dims < 1 || filters < 1 || kernel_size < 1 || strides < 1 || pool_size < 1 ||
        lstm_units < 1 || hide_u < 1 || num_categories < 1 || epochs < 1 || batch_size < 1) {
        throw Error("classifier sizes must all be at least 1");
    }
    if (seq_len < kernel_size) throw Error("seq_len must be at least kernel_size");
    if (conv_steps() < pool_size) throw Error("convolution output shorter than one pooling window");
    if (!(dropout_level >= 0.0 && dropout_level < 1.0)) throw Error("dropout_level must lie in [0, 1)");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw Error("validation_fraction must lie in [0, 1)");
    }
    if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
}

nlohmann::ordered_json ClassifierConfig::to_json() const {
    nlohmann::ordered_json j;
    j["seq_len"] = seq_len;
    j["embed_dims"] = embed_dims;
    j["filters"] = filters;
    j["kernel_size"] = kernel_size;
    j["strides"] = strides;
    j["pool_size"] = pool_size;
    j["lstm_units"] = lstm_units;
    j["hide_u"] = hide_u;
    j["dropout_level"] = dropout_level;
    j["num_categories"] = num_categories;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["optimizer"] = "adamax";
    j["learning_rate"] = learning_rate;
    j["beta1"] = beta1;
    j["beta2"] = beta2;
    j["epsilon"] = epsilon;
    j["validation_fraction"] = validation_fraction;
    j["seed"] = seed;
    return j;
}

ClassifierConfig ClassifierConfig::from_json(const nlohmann::json& j) {
    ClassifierConfig c;
    const auto get = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("seq_len", c.seq_len);
    get("embed_dims", c.embed_dims);
    get("filters", c.filters);
    get("kernel_size", c.kernel_size);
    get("strides", c.strides);
    get("pool_size", c.pool_size);
    get("lstm_units", c.lstm_units);
    get("hide_u", c.hide_u);
    get("dropout_level", c.dropout_level);
    get("num_categories", c.num_categories);
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("learning_rate", c.learning_rate);
    get("beta1", c.beta1);
    get("beta2", c.beta2);
    get("epsilon", c.epsilon);
    get("validation_fraction", c.validation_fraction);
    get("seed", c.seed);
    if (j.contains("optimizer") && j.at("optimizer") != "adamax") {
        throw Error("unsupported optimizer " + j.at("optimizer").dump());
    }
    return c;
}

ModelParameters ModelParameters::zeros(const ClassifierConfig& c) {
    ModelParameters p;
    const std::size_t gates = 4 * c.lstm_units;
    p.conv_w.assign(c.kernel_size * c.embed_dims * c.filters, 0.0);
    p.conv_b.assign(c.filters, 0.0);
    p.lstm_wx.assign(c.filters * gates, 0.0);
    p.lstm_wh.assign(c.lstm_units * gates, 0.0);
    p.lstm_b.assign(gates, 0.0);
    p.hidden_w.assign(c.lstm_units * c.hide_u, 0.0);
    p.hidden_b.assign(c.hide_u, 0.0);
    p.out_w.assign(c.hide_u * c.num_categories, 0.0);
    p.out_b.assign(c.num_categories, 0.0);
    return p;
}

std::size_t ModelParameters::count() const {
    std::size_t n = 0;
    for_each([&n](const char*, const std::vector<double>& v) { n += v.size(); });
    return n;
}

void ModelParameters::set_zero() {
    for_each([](const char*, std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); });
}

void ModelParameters::add(const ModelParameters& other) {
    std::vector<const std::vector<double>*> src;
    other.for_each([&src](const char*, const std::vector<double>& v) { src.push_back(&v); });
    std::size_t k = 0;
    for_each([&](const char*, std::vector<double>& v) {
        const auto& o = *src[k++];
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += o[i];
    });
}

void ModelParameters::scale(double factor) {
    for_each([factor](const char*, std::vector<double>& v) {
        for (auto& x : v) x *= factor;
    });
}

bool ModelParameters::all_finite() const {
    bool ok = true;
    for_each([&ok](const char*, const std::vector<double>& v) {
        ok = ok && std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    });
    return ok;
}

ClassifierModel init_model(const ClassifierConfig& config, EmbeddingMatrix embedding, std::uint64_t seed) {
    config.validate();
    if (embedding.dims() != config.embed_dims) {
        throw Error("embedding has " + std::to_string(embedding.dims()) + " dims; config expects " +
                    std::to_string(config.embed_dims));
    }
    if (embedding.vocab_size() < 2) throw Error("embedding must contain the reserved pad and unk rows");

    ClassifierModel model;
    model.config = config;
    model.embedding = std::move(embedding);
    model.params = ModelParameters::zeros(config);
    Rng rng(seed);
    auto& p = model.params;
    const std::size_t k = config.kernel_size;
    fill_glorot(p.conv_w, k * config.embed_dims, k * config.filters, rng);
    fill_glorot(p.lstm_wx, config.filters, 4 * config.lstm_units, rng);
    fill_glorot(p.lstm_wh, config.lstm_units, 4 * config.lstm_units, rng);
    std::fill(p.lstm_b.begin() + static_cast<std::ptrdiff_t>(config.lstm_units),
              p.lstm_b.begin() + static_cast<std::ptrdiff_t>(2 * config.lstm_units), 1.0);
    fill_glorot(p.hidden_w, config.lstm_units, config.hide_u, rng);
    fill_glorot(p.out_w, config.hide_u, config.num_categories, rng);
    model.optimizer.first_moment = ModelParameters::zeros(config);
    model.optimizer.infinity_norm = ModelParameters::zeros(config);
    return model;
}

Prediction forward(const ClassifierModel& model, std::span<const TokenId> ids, bool training,
                   std::uint64_t dropout_seed, ForwardTrace* trace) {
    ForwardTrace local;
    ForwardTrace& tr = trace != nullptr ? *trace : local;
    run_forward(model, ids, training, dropout_seed, tr);
    return Prediction::from_probabilities(tr.probabilities);
}

double accumulate_gradient(const ClassifierModel& model, std::span<const TokenId> ids, std::size_t label,
                           bool training, std::uint64_t dropout_seed, ModelParameters& grad) {
    if (label >= model.config.num_categories) throw Error("label outside the category range");
    ForwardTrace tr;
    run_forward(model, ids, training, dropout_seed, tr);
    backward(model, tr, label, grad);
    return cross_entropy(tr.logits, label);
}

std::uint64_t sample_dropout_seed(std::uint64_t step_seed, std::size_t index) {
    return mix_seed(step_seed, index);
}

namespace {

struct ChunkResult {
    ModelParameters gradient;
    double loss = 0.0;
};

ChunkResult run_chunk(const ClassifierModel& model, std::span<const TrainingExample> batch, std::size_t chunk,
                      bool training, std::uint64_t step_seed) {
    ChunkResult out{ModelParameters::zeros(model.config), 0.0};
    const std::size_t begin = chunk * kGradientChunk;
    const std::size_t end = std::min(batch.size(), begin + kGradientChunk);
    for (std::size_t i = begin; i < end; ++i) {
        out.loss += accumulate_gradient(model, batch[i].ids, batch[i].label, training,
                                        sample_dropout_seed(step_seed, i), out.gradient);
    }
    return out;
}

BatchGradient reduce_chunks(std::vector<ChunkResult>& chunks, std::size_t batch_size) {
    BatchGradient out{std::move(chunks.front().gradient), chunks.front().loss};
    for (std::size_t c = 1; c < chunks.size(); ++c) {
        out.gradient.add(chunks[c].gradient);
        out.mean_loss += chunks[c].loss;
    }
    const double inv = 1.0 / static_cast<double>(batch_size);
    out.gradient.scale(inv);
    out.mean_loss *= inv;
    return out;
}

}  // namespace

BatchGradient batch_gradient(const ClassifierModel& model, std::span<const TrainingExample> batch, bool training,
                             std::uint64_t step_seed) {
    if (batch.empty()) throw Error("empty training batch");
    const std::size_t chunks = (batch.size() + kGradientChunk - 1) / kGradientChunk;
    std::vector<ChunkResult> results(chunks);
    std::vector<std::string> errors(chunks);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
        try {
            results[static_cast<std::size_t>(c)] = run_chunk(model, batch, static_cast<std::size_t>(c), training, step_seed);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(c)] = e.what();
        }
    }
    for (const auto& e : errors) {
        if (!e.empty()) throw Error(e);
    }
    return reduce_chunks(results, batch.size());
}

BatchGradient batch_gradient_serial(const ClassifierModel& model, std::span<const TrainingExample> batch,
                                    bool training, std::uint64_t step_seed) {
    if (batch.empty()) throw Error("empty training batch");
    const std::size_t chunks = (batch.size() + kGradientChunk - 1) / kGradientChunk;
    std::vector<ChunkResult> results;
    results.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) results.push_back(run_chunk(model, batch, c, training, step_seed));
    return reduce_chunks(results, batch.size());
}

void apply_adamax(ClassifierModel& model, const ModelParameters& gradient) {
    auto& state = model.optimizer;
    const auto& cfg = model.config;
    state.steps += 1;
    const double lr_t = cfg.learning_rate / (1.0 - std::pow(cfg.beta1, static_cast<double>(state.steps)));

    std::vector<std::vector<double>*> params, moments, norms;
    std::vector<const std::vector<double>*> grads;
    model.params.for_each([&](const char*, std::vector<double>& v) { params.push_back(&v); });
    state.first_moment.for_each([&](const char*, std::vector<double>& v) { moments.push_back(&v); });
    state.infinity_norm.for_each([&](const char*, std::vector<double>& v) { norms.push_back(&v); });
    gradient.for_each([&](const char*, const std::vector<double>& v) { grads.push_back(&v); });
    for (std::size_t a = 0; a < params.size(); ++a) {
        auto& w = *params[a];
        auto& m = *moments[a];
        auto& u = *norms[a];
        const auto& g = *grads[a];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            u[i] = std::max(cfg.beta2 * u[i], std::abs(g[i]));
            w[i] -= lr_t * m[i] / (u[i] + cfg.epsilon);
        }
    }
}

double train_step(ClassifierModel& model, std::span<const TrainingExample> batch, std::uint64_t step_seed) {
    const BatchGradient g = batch_gradient(model, batch, true, step_seed);
    if (!std::isfinite(g.mean_loss)) throw Error("training diverged: non-finite loss");
    if (!g.gradient.all_finite()) throw Error("training diverged: non-finite gradient");
    apply_adamax(model, g.gradient);
    return g.mean_loss;
}

GradientCheckResult gradient_check(const ClassifierModel& model, std::span<const TokenId> ids, std::size_t label,
                                   const GradientCheckOptions& options) {
    if (options.dropout) throw Error("gradient check requires dropout to be off");
    ModelParameters analytic = ModelParameters::zeros(model.config);
    accumulate_gradient(model, ids, label, false, 0, analytic);

    ClassifierModel probe = model;
    const auto loss_at = [&]() {
        ForwardTrace tr;
        run_forward(probe, ids, false, 0, tr);
        return cross_entropy(tr.logits, label);
    };

    std::vector<std::pair<const char*, std::vector<double>*>> arrays;
    probe.params.for_each([&](const char* name, std::vector<double>& v) { arrays.emplace_back(name, &v); });
    std::vector<const std::vector<double>*> grads;
    analytic.for_each([&](const char*, const std::vector<double>& v) { grads.push_back(&v); });

    GradientCheckResult result;
    for (std::size_t a = 0; a < arrays.size(); ++a) {
        auto& values = *arrays[a].second;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + options.step;
            const double plus = loss_at();
            values[i] = saved - options.step;
            const double minus = loss_at();
            values[i] = saved;
            const double numeric = (plus - minus) / (2.0 * options.step);
            const double exact = (*grads[a])[i];
            const double denom = std::max({std::abs(exact), std::abs(numeric), options.floor});
            const double rel = std::abs(exact - numeric) / denom;
            ++result.checked;
            if (rel > result.max_relative_error) {
                result.max_relative_error = rel;
                result.worst_parameter = arrays[a].first;
                result.worst_index = i;
            }
        }
    }
    return result;
}

RowMatrix conv_activations(const ClassifierModel& model, std::span<const TokenId> ids) {
    ForwardTrace tr;
    run_forward(model, ids, false, 0, tr);
    return tr.conv;
}

double accuracy(const ClassifierModel& model, std::span<const TrainingExample> examples) {
    if (examples.empty()) return 0.0;
    long correct = 0;
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : correct)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(examples.size()); ++i) {
        const auto& ex = examples[static_cast<std::size_t>(i)];
        if (forward(model, ex.ids).predicted == ex.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(examples.size());
}

std::size_t select_best_epoch(std::span<const double> validation_accuracy) {
    if (validation_accuracy.empty()) throw Error("no epochs to select from");
    return static_cast<std::size_t>(std::max_element(validation_accuracy.begin(), validation_accuracy.end()) -
                                    validation_accuracy.begin());
}

FitResult fit_examples(ClassifierModel model, std::span<const TrainingExample> train,
                       std::span<const TrainingExample> validation) {
    const auto& cfg = model.config;
    if (train.empty()) throw Error("no training examples");
    if (validation.empty()) throw Error("no validation examples");

    FitResult result{model, {}};
    double best = -1.0;
    std::vector<std::size_t> order(train.size());
    std::uint64_t step = 0;
    std::vector<TrainingExample> batch;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffler(mix_seed(cfg.seed, 0x0e90c000ULL + epoch));
        shuffler.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);
            loss_sum += train_step(model, batch, mix_seed(cfg.seed, 0x57e90000ULL + step));
            ++step;
            ++batches;
        }
        result.history.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
        const double acc = accuracy(model, validation);
        result.history.validation_accuracy.push_back(acc);
        if (acc > best) {
            best = acc;
            result.model = model;
            result.history.best_epoch = epoch;
        }
    }
    return result;
}

std::size_t category_index(const std::vector<std::string>& categories, const std::string& category) {
    const auto it = std::find(categories.begin(), categories.end(), category);
    if (it == categories.end()) throw Error("category '" + category + "' is not in the model's category set");
    return static_cast<std::size_t>(it - categories.begin());
}

std::vector<TrainingExample> make_examples(const std::vector<DatasetRecord>& records, const Vocabulary& vocab,
                                           const std::vector<std::string>& categories, std::size_t seq_len,
                                           std::span<const Variant> variants) {
    std::vector<TrainingExample> out;
    out.reserve(records.size() * variants.size());
    for (const auto& r : records) {
        const std::size_t label = category_index(categories, r.category);
        for (const Variant v : variants) {
            const auto tokens = r.representation(v);
            out.push_back({encode_ids(tokens, vocab, seq_len), label});
        }
    }
    return out;
}

std::vector<std::string> choose_validation_projects(const std::vector<DatasetRecord>& train, double fraction,
                                                    std::uint64_t seed) {
    std::set<std::string> unique;
    for (const auto& r : train) unique.insert(r.project);
    std::vector<std::string> names(unique.begin(), unique.end());
    if (fraction <= 0.0 || names.empty()) return {};
    auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(names.size()) + 0.5));
    count = std::clamp<std::size_t>(count, 1, names.size());
    Rng rng(mix_seed(seed, 0x7a11da7eULL));
    rng.shuffle(std::span<std::string>(names));
    names.resize(count);
    std::sort(names.begin(), names.end());
    return names;
}

FitResult fit(ClassifierModel model, const std::vector<DatasetRecord>& train, const Vocabulary& vocab,
              const std::vector<std::string>& categories) {
    const auto& cfg = model.config;
    if (categories.size() != cfg.num_categories) throw Error("category list does not match num_categories");
    const auto held = choose_validation_projects(train, cfg.validation_fraction, cfg.seed);
    const std::set<std::string> held_set(held.begin(), held.end());

    std::vector<DatasetRecord> fit_records;
    std::vector<DatasetRecord> validation_records;
    for (const auto& r : train) (held_set.contains(r.project) ? validation_records : fit_records).push_back(r);

    std::vector<bool> present(categories.size(), false);
    for (const auto& r : fit_records) present[category_index(categories, r.category)] = true;
    for (std::size_t c = 0; c < categories.size(); ++c) {
        if (!present[c]) {
            throw Error("category '" + categories[c] + "' has no training functions after the validation split");
        }
    }

    constexpr Variant kBoth[] = {Variant::CodeOnly, Variant::CodeDescription};
    const auto train_examples = make_examples(fit_records, vocab, categories, cfg.seq_len, kBoth);
    const auto validation_examples = make_examples(validation_records, vocab, categories, cfg.seq_len, kBoth);
    FitResult result = fit_examples(std::move(model), train_examples, validation_examples);
    result.history.validation_projects = held;
    return result;
}

}  // namespace codecat
