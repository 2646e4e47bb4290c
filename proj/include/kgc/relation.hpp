#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "kgc/dataset.hpp"
#include "kgc/encoder.hpp"
#include "kgc/summary.hpp"

namespace kgc {

/// (query, support) -> similarity of the relations the two instances express.
/// Must be deterministic and return finite values.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual std::string id() const = 0;
  /// Cap on query + support tokens; longer pairs are cut from the right.
  virtual std::size_t max_tokens() const { return 128; }
  virtual double score(const RcInstance& query, const RcInstance& support) const = 0;
};

/// Cuts the longer of the two instances from the right, one token at a time,
/// until the pair fits. Entity spans are never cut. Returns true if anything
/// was removed.
bool truncate_pair(RcInstance& query, RcInstance& support, std::size_t max_tokens);

struct Prediction {
  std::size_t index = 0;
  std::string relation;
  double score = 0.0;
  std::vector<double> per_relation_scores;
  std::size_t truncated_pairs = 0;
};

/// Per-relation score is the mean pair score over that relation's support
/// instances; the prediction is the argmax, ties to the lowest index.
/// Throws IncompleteSupport on an empty group.
Prediction predict(const RcInstance& query, const std::vector<std::string>& relations,
                   const std::vector<std::vector<RcInstance>>& support, const PairScorer& scorer);

struct EpisodeEvaluation {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  Interval interval;
  std::size_t truncated_pairs = 0;
};

/// Episode i is drawn from an Rng seeded with derive_seed(seed, i).
EpisodeEvaluation evaluate_episodes(const PairScorer& scorer, const RelationPool& pool, std::size_t n_way,
                                    std::size_t k_shot, std::size_t q_query, std::size_t iterations,
                                    std::uint64_t seed);

using ScorerFactory = std::function<std::shared_ptr<const PairScorer>(const std::vector<RcInstance>& training)>;

struct FoldAccuracy {
  int fold = 0;
  RelationSplit relations;
  EpisodeEvaluation validation;
  EpisodeEvaluation test;
};

struct RotationResult {
  std::vector<FoldAccuracy> folds;
  Summary validation;
  Summary test;
};

struct RotationConfig {
  int folds = 5;
  std::size_t n_way = 5;
  std::size_t k_shot = 1;
  std::size_t q_query = 1;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  SplitCounts counts;
};

/// For each fold: rotate the relation order, build a scorer from the training
/// relations, evaluate episodes on validation and test relations.
RotationResult rotation_cv(const ScorerFactory& factory, const std::vector<RcInstance>& dataset,
                           const std::vector<std::string>& order, const RotationConfig& config);

/// Cosine similarity of hashed relation-context features: tokens between the
/// two entities and up to `window` tokens either side, tagged by region.
/// Entity surfaces are masked out entirely.
class ContextScorer : public PairScorer {
 public:
  explicit ContextScorer(std::shared_ptr<const EncoderProvider> provider, std::size_t window = 2);
  std::string id() const override;
  double score(const RcInstance& query, const RcInstance& support) const override;
  /// Space-joined feature tokens, exposed for inspection.
  std::string features(const RcInstance& instance) const;

 private:
  std::shared_ptr<const EncoderProvider> provider_;
  std::size_t window_;
};

/// Lookup of the lowercased text between the entities to a relation name.
/// Scores 1 when query and support resolve to the same relation, else 0.
class TableScorer : public PairScorer {
 public:
  TableScorer(std::string name, std::map<std::string, std::string> phrase_to_relation);
  /// JSON object {"phrase": "relation", ...}.
  static TableScorer load(const std::filesystem::path& path);
  std::string id() const override { return "table:" + name_; }
  double score(const RcInstance& query, const RcInstance& support) const override;
  std::string lookup(const RcInstance& instance) const;

 private:
  std::string name_;
  std::map<std::string, std::string> table_;
};

/// Child process speaking one JSON object per line on stdin/stdout:
/// request {"query": rc, "support": rc}, response a number or {"score": x}.
class ExternalScorer : public PairScorer {
 public:
  explicit ExternalScorer(std::string command);
  ~ExternalScorer() override;
  ExternalScorer(const ExternalScorer&) = delete;
  ExternalScorer& operator=(const ExternalScorer&) = delete;
  std::string id() const override { return "external:" + command_; }
  double score(const RcInstance& query, const RcInstance& support) const override;

 private:
  void start() const;
  void stop() const;
  std::string command_;
  mutable std::mutex mutex_;
  mutable int pid_ = -1;
  mutable int fd_ = -1;
  mutable std::string buffer_;
};

/// The text strictly between head and tail spans, space-joined.
std::string between_text(const RcInstance& instance);

/// "default", "table:<path>", "external:<command>".
std::shared_ptr<const PairScorer> make_scorer(std::string_view spec,
                                              std::shared_ptr<const EncoderProvider> provider = nullptr);

json to_json(const Prediction& prediction);
json to_json(const EpisodeEvaluation& evaluation);

}  // namespace kgc
