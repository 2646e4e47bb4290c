#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kgc/crf.hpp"
#include "kgc/dataset.hpp"
#include "kgc/encoder.hpp"
#include "kgc/util.hpp"

namespace kgc {

/// Transition matrix indices of the virtual states for the B/I/O label set.
inline constexpr std::size_t kStartState = kNumTags;
inline constexpr std::size_t kEndState = kNumTags + 1;

struct CrfModel {
  std::string encoder_id;
  Matrix weights;      ///< d x 3 linear layer over encoder features
  Matrix transitions;  ///< 5 x 5 including start and end
  double dropout = 0.1;
  bool constrained = true;
  json manifest = json::object();

  static CrfModel zeros(std::size_t dimension, std::string encoder_id, bool constrained = true, double dropout = 0.1);
  std::size_t dimension() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Sets O->I and start->I to -inf.
void apply_bio_constraints(Matrix& transitions);

/// features (T x d) times weights. Throws DimensionMismatch on a d mismatch.
Matrix emissions(const Matrix& features, const CrfModel& model);
/// Training-time variant with inverted dropout on the features.
Matrix emissions(const Matrix& features, const CrfModel& model, Rng& dropout_rng);

std::vector<std::size_t> tag_indices(const std::vector<Tag>& tags);
std::vector<Tag> tags_of(const std::vector<std::size_t>& indices);

/// Standard CRF negative log-likelihood of a gold B/I/O sequence.
/// Throws InvalidGold when the sequence is not BIO-valid.
double nll_loss(const Matrix& emissions, const Matrix& transitions, const std::vector<Tag>& gold);

struct CrfGradient {
  Matrix weights;
  Matrix transitions;
};

struct TrainingExample {
  Matrix features;
  std::vector<Tag> gold;
};

/// Mean loss over the batch and its gradient (expected minus observed
/// sufficient statistics). Forbidden transitions get a zero gradient.
double loss_and_gradient(const CrfModel& model, const std::vector<TrainingExample>& batch, CrfGradient& gradient,
                         Rng* dropout_rng = nullptr);
CrfGradient gradient(const CrfModel& model, const std::vector<TrainingExample>& batch);

std::vector<Tag> predict(const CrfModel& model, const TokenEncoder& encoder, const std::vector<std::string>& tokens);

struct TrainConfig {
  std::size_t batch_size = 16;
  /// Starting rate of a fine-tuned transformer; use practical() for the
  /// linear + CRF model trained from scratch.
  double learning_rate = 5e-8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  double dropout = 0.1;
  bool constrained = true;

  static TrainConfig practical();
};

struct TrainResult {
  CrfModel model;
  /// Mean NLL over the full split after each epoch, dropout off.
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
};

/// Adam on the mean NLL with per-epoch seeded shuffling and no warmup.
TrainResult train(const std::vector<NerInstance>& training, const std::vector<NerInstance>& validation,
                  const TokenEncoder& encoder, const TrainConfig& config);

struct TagMetrics {
  double token_accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tokens = 0;
  std::size_t correct_tokens = 0;
  std::size_t predicted_entities = 0;
  std::size_t gold_entities = 0;
  std::size_t correct_entities = 0;
};

/// Token accuracy plus exact-span entity precision / recall / F1.
TagMetrics score_tags(const std::vector<std::vector<Tag>>& gold, const std::vector<std::vector<Tag>>& predicted);
TagMetrics evaluate(const CrfModel& model, const TokenEncoder& encoder, const std::vector<NerInstance>& dataset);

/// Seeded shuffle into k folds; the first n % k folds get one extra item.
std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t k, std::uint64_t seed);

struct KFoldResult {
  std::vector<TagMetrics> folds;
  TagMetrics mean;
  TagMetrics stddev;
};

KFoldResult kfold(const std::vector<NerInstance>& dataset, const TokenEncoder& encoder, const TrainConfig& config,
                  std::size_t k = 5, std::uint64_t seed = 0);
/// Mean and sample standard deviation of each metric across folds.
void summarize_folds(KFoldResult& result);

json to_json(const CrfModel& model);
CrfModel crf_from_json(const json& j);
void save_model(const std::filesystem::path& path, const CrfModel& model);
CrfModel load_model(const std::filesystem::path& path);
json to_json(const TagMetrics& metrics);

}  // namespace kgc
