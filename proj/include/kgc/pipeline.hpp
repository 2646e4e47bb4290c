#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgc/corpus.hpp"
#include "kgc/dataset.hpp"
#include "kgc/relation.hpp"
#include "kgc/tagger.hpp"

namespace kgc {

class GraphStore;

struct Provenance {
  std::string abstract_id;
  std::size_t sentence_index = 0;
  std::string title;
  std::string journal;
  int year = 0;
  auto operator<=>(const Provenance&) const = default;
};

struct EntityMention {
  std::string text;
  TokenSpan span;
  bool operator==(const EntityMention&) const = default;
};

struct ExtractedTriple {
  EntityMention head;
  std::string relation;
  EntityMention tail;
  double score = 0.0;
  Provenance provenance;
  std::size_t pair_index = 0;

  /// abstract_id#sentence#pair
  std::string id() const;
  bool operator==(const ExtractedTriple&) const = default;
};

/// Case-fold (ASCII), collapse whitespace runs, trim.
std::string canonicalize_entity(std::string_view surface);

enum class PairMode { Forward, Both };
PairMode pair_mode_from_string(std::string_view s);

struct PairList {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  /// Pairs dropped by the per-sentence cap.
  std::size_t dropped = 0;
};

/// Index pairs over n entities in textual order. Forward: i < j, C(n,2)
/// pairs. Both: every ordered i != j. At most `cap` pairs are kept.
PairList enumerate_pairs(std::size_t n_entities, PairMode mode = PairMode::Forward,
                         std::size_t cap = std::numeric_limits<std::size_t>::max());

/// K support instances per schema relation, drawn once per run.
struct SupportBank {
  std::vector<std::string> relations;
  std::vector<std::vector<RcInstance>> support;

  /// Relation r draws K instances from its pool with an Rng seeded by
  /// derive_seed(seed, fnv1a64(r)). Throws IncompleteSupport when a relation
  /// has fewer than K.
  static SupportBank draw(const std::vector<std::string>& relations, const RelationPool& pool, std::size_t k,
                          std::uint64_t seed);
};

struct ExtractionConfig {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  PairMode mode = PairMode::Forward;
  std::size_t max_pairs_per_sentence = 1000;
};

struct SentenceExtraction {
  std::vector<EntityMention> entities;
  std::vector<ExtractedTriple> triples;
  std::size_t dropped_pairs = 0;
  std::size_t truncated_pairs = 0;
};

/// Viterbi-tag the sentence, enumerate entity pairs and classify each against
/// the support bank. Provenance is filled from `abstract` when given.
SentenceExtraction extract_sentence(const SentenceRecord& sentence, const CrfModel& model, const TokenEncoder& encoder,
                                    const PairScorer& scorer, const SupportBank& bank, const ExtractionConfig& config,
                                    const AbstractRecord* abstract = nullptr);

/// Triples with score >= theta, order preserved.
std::vector<ExtractedTriple> filter_threshold(const std::vector<ExtractedTriple>& triples, double theta);

struct HistogramPoint {
  double threshold = 0.0;
  std::size_t count = 0;
};

/// Thresholds from floor(min / w) * w upward in steps of w until one exceeds
/// the max score; count is the number of triples scoring >= threshold.
std::vector<HistogramPoint> score_histogram(const std::vector<double>& scores, double bin_width);
std::string histogram_csv(const std::vector<HistogramPoint>& points);

/// Smallest observed score whose surviving labeled samples reach the target
/// precision, or nullopt when no threshold does.
std::optional<double> choose_threshold(const std::vector<std::pair<double, bool>>& labeled, double target_precision);

struct RelationStats {
  std::size_t triples = 0;
  std::size_t entities = 0;
};

struct PipelineStats {
  std::size_t abstracts = 0;
  std::size_t sentences = 0;
  std::size_t entity_mentions = 0;
  std::size_t distinct_entities = 0;
  std::size_t candidate_pairs = 0;
  std::size_t dropped_pairs = 0;
  std::size_t truncated_pairs = 0;
  std::size_t high_quality = 0;
  /// Distinct canonical entities appearing in high-quality triples.
  std::size_t high_quality_entities = 0;
  std::map<std::string, RelationStats> per_relation;
};

struct PipelineConfig {
  ExtractionConfig extraction;
  /// Required; see choose_threshold.
  std::optional<double> theta;
  AbbreviationList abbreviations = AbbreviationList::defaults();
  /// When set, one line per finished abstract is appended here and a rerun
  /// with the same manifest resumes after the last finished abstract.
  std::optional<std::filesystem::path> checkpoint;
};

struct PipelineModels {
  const CrfModel* tagger = nullptr;
  const TokenEncoder* encoder = nullptr;
  const PairScorer* scorer = nullptr;
  const SupportBank* bank = nullptr;
};

struct PipelineResult {
  /// Every classified pair, in (abstract, sentence, pair) order.
  std::vector<ExtractedTriple> candidates;
  /// candidates filtered at theta.
  std::vector<ExtractedTriple> triples;
  PipelineStats stats;
  json manifest;
};

/// Runs extraction over the corpus in order, thresholds, and upserts the
/// surviving triples into `store` when one is given.
PipelineResult run_pipeline(const std::vector<AbstractRecord>& corpus, const PipelineModels& models,
                            const PipelineConfig& config, GraphStore* store = nullptr);

json to_json(const ExtractedTriple& triple);
ExtractedTriple triple_from_json(const json& j);
json to_json(const PipelineStats& stats);
std::string triples_jsonl(const std::vector<ExtractedTriple>& triples);
void save_triples(const std::filesystem::path& path, const std::vector<ExtractedTriple>& triples);
std::vector<ExtractedTriple> load_triples(const std::filesystem::path& path);

// Human validation of extracted triples.

struct ValidationSample {
  std::vector<ExtractedTriple> triples;
  /// relation -> available count, for relations below per_relation.
  std::map<std::string, std::size_t> shortfalls;
};

/// Seeded uniform sample of up to per_relation triples per relation.
ValidationSample sample_validation(const std::vector<ExtractedTriple>& triples, std::size_t per_relation = 100,
                                   std::uint64_t seed = 0);

struct ValidationRecord {
  std::string triple_id;
  std::string relation;
  bool vote_a = false;
  bool vote_b = false;
  std::optional<bool> adjudication;

  bool agreed() const { return vote_a == vote_b; }
  /// Common vote, or the adjudication. Throws MissingAdjudication or
  /// InvariantViolation when the record is inconsistent.
  bool verdict() const;
};

struct BucketAccuracy {
  std::size_t total = 0;
  std::size_t correct = 0;
  /// Percent, half-up at 2 decimals.
  double percent = 0.0;
};

struct AdjudicationReport {
  BucketAccuracy agreed;
  BucketAccuracy disagreed;
  BucketAccuracy total;
};

AdjudicationReport adjudicate(const std::vector<ValidationRecord>& records);
std::map<std::string, BucketAccuracy> per_relation_accuracy(const std::vector<ValidationRecord>& records);

json to_json(const ValidationRecord& record);
ValidationRecord validation_record_from_json(const json& j);
std::vector<ValidationRecord> load_validation_records(const std::filesystem::path& path);
json to_json(const BucketAccuracy& bucket);
json to_json(const AdjudicationReport& report);

}  // namespace kgc
