#pragma once

#include "codecat/checkpoint.hpp"
#include "codecat/embedding.hpp"
#include "codecat/repr.hpp"
#include "codecat/run_config.hpp"

#include <string>
#include <vector>

namespace codecat {

struct RecordSplit {
    std::vector<DatasetRecord> train;
    std::vector<DatasetRecord> holdout;
};

// make_splits over dataset records: holdout projects keep all their
// functions, the rest are undersampled to `per_category` functions.
RecordSplit split_records(const std::vector<DatasetRecord>& records, const SplitConfig& config);

// Sorted distinct categories of a record set.
std::vector<std::string> record_categories(const std::vector<DatasetRecord>& records);

// Shared vocabulary over the co and cd representations of the training set.
Vocabulary training_vocabulary(const std::vector<DatasetRecord>& train);

struct TrainedEmbedding {
    Vocabulary vocab;
    GloveResult glove;
};

TrainedEmbedding train_embedding(const std::vector<DatasetRecord>& train, EmbeddingStrategy strategy,
                                 const GloveConfig& config);

// Fits the classifier over `embedding` (rows aligned with `vocab`).
NeuralCheckpoint train_neural(const std::vector<DatasetRecord>& train, const Vocabulary& vocab,
                              const EmbeddingMatrix& embedding, ClassifierConfig config, FitHistory* history = nullptr);

// BoW vocabulary and logistic regression over the same co and cd
// representations the neural model sees.
BaselineCheckpoint train_baseline(const std::vector<DatasetRecord>& train, const BaselineConfig& config);

// Window scores for the heatmap: per convolution row, the summed activation
// of all filters.
std::vector<double> window_intensity(const RowMatrix& activations);

}  // namespace codecat
