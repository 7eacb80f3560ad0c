#include "codecat/pipeline.hpp"
#include "codecat/error.hpp"

#include <algorithm>
#include <set>

namespace codecat {

RecordSplit split_records(const std::vector<DatasetRecord>& records, const SplitConfig& config) {
    const auto groups = group_by_project(records);
    std::vector<ProjectSummary> summaries;
    summaries.reserve(groups.size());
    for (const auto& g : groups) summaries.push_back({g.project, g.category, g.records.size()});
    const auto selection = select_split(summaries, config.holdout_per_category, config.per_category, config.seed);

    RecordSplit out;
    for (const auto p : selection.holdout) {
        for (const auto* r : groups[p].records) out.holdout.push_back(*r);
    }
    for (const auto& [p, pos] : selection.train) out.train.push_back(*groups[p].records[pos]);
    return out;
}

std::vector<std::string> record_categories(const std::vector<DatasetRecord>& records) {
    std::set<std::string> seen;
    for (const auto& r : records) seen.insert(r.category);
    return {seen.begin(), seen.end()};
}

Vocabulary training_vocabulary(const std::vector<DatasetRecord>& train) {
    std::vector<std::vector<std::string>> streams;
    streams.reserve(2 * train.size());
    for (const auto& r : train) {
        streams.push_back(r.representation(Variant::CodeOnly));
        streams.push_back(r.representation(Variant::CodeDescription));
    }
    return build_vocabulary(streams);
}

TrainedEmbedding train_embedding(const std::vector<DatasetRecord>& train, EmbeddingStrategy strategy,
                                 const GloveConfig& config) {
    config.validate();
    TrainedEmbedding out;
    out.vocab = training_vocabulary(train);
    const auto sentences = encode_sentences(embedding_sentences(train, strategy), out.vocab);
    const auto table = build_cooccurrence(sentences, config);
    out.glove = train_glove(table, out.vocab.size(), config);
    return out;
}

NeuralCheckpoint train_neural(const std::vector<DatasetRecord>& train, const Vocabulary& vocab,
                              const EmbeddingMatrix& embedding, ClassifierConfig config, FitHistory* history) {
    if (embedding.vocab_size() != vocab.size()) throw Error("embedding rows do not match the vocabulary");
    const auto categories = record_categories(train);
    config.num_categories = categories.size();
    config.embed_dims = embedding.dims();
    config.validate();
    auto model = init_model(config, embedding, config.seed);
    auto result = fit(std::move(model), train, vocab, categories);
    if (history) *history = result.history;
    NeuralCheckpoint checkpoint;
    checkpoint.model = std::move(result.model);
    checkpoint.vocab = vocab;
    checkpoint.categories = categories;
    return checkpoint;
}

BaselineCheckpoint train_baseline(const std::vector<DatasetRecord>& train, const BaselineConfig& config) {
    const auto categories = record_categories(train);
    std::vector<std::vector<std::string>> docs;
    std::vector<std::size_t> labels;
    for (const auto& r : train) {
        const auto label = category_index(categories, r.category);
        for (const auto variant : {Variant::CodeOnly, Variant::CodeDescription}) {
            docs.push_back(r.representation(variant));
            labels.push_back(label);
        }
    }
    BaselineCheckpoint checkpoint;
    checkpoint.vocab = BowVocabulary::build(docs, config.vocab_size);
    checkpoint.categories = categories;
    std::vector<SparseCounts> features(docs.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(docs.size()); ++i) {
        features[static_cast<std::size_t>(i)] = build_bow_features(docs[static_cast<std::size_t>(i)], checkpoint.vocab);
    }
    checkpoint.model = train_logreg(features, labels, categories.size(), config.logreg);
    return checkpoint;
}

std::vector<double> window_intensity(const RowMatrix& activations) {
    std::vector<double> out(static_cast<std::size_t>(activations.rows()), 0.0);
    for (Eigen::Index r = 0; r < activations.rows(); ++r) {
        out[static_cast<std::size_t>(r)] = activations.row(r).sum();
    }
    return out;
}

}  // namespace codecat
