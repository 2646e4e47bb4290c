#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgc/corpus.hpp"
#include "kgc/util.hpp"

namespace kgc {

enum class Tag : std::uint8_t { B = 0, I = 1, O = 2 };
inline constexpr std::size_t kNumTags = 3;

char tag_char(Tag tag);
Tag tag_from_string(std::string_view s);

/// No I at position 0 and no I directly after O.
bool is_valid_bio(const std::vector<Tag>& tags);
/// Maximal B I* runs. A stray I (after O or at the start) opens an entity.
std::vector<TokenSpan> bio_entities(const std::vector<Tag>& tags);
std::vector<Tag> tags_from_spans(std::size_t length, const std::vector<TokenSpan>& spans);

struct NerInstance {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<Tag> labels;
  std::optional<TokenSpan> head;
  std::optional<TokenSpan> tail;
};

struct RcInstance {
  std::string id;
  std::vector<std::string> tokens;
  TokenSpan head;
  TokenSpan tail;
  std::string relation;
};

/// Throws InvariantViolation when an instance breaks its type invariants.
void validate(const NerInstance& instance);
void validate(const RcInstance& instance);

struct BratDocument {
  std::vector<NerInstance> ner;
  std::vector<RcInstance> rc;
};

/// brat standoff: T lines give entity offsets and surfaces, R lines give
/// relations between two T ids. One NerInstance per sentence holding an
/// entity, one RcInstance per R line.
BratDocument import_brat(std::string_view text, std::string_view ann, std::string_view doc_id);
BratDocument import_brat_files(const std::filesystem::path& txt, const std::filesystem::path& ann);
/// Every <name>.ann under ann_dir paired with <name>.txt under txt_dir, in name order.
BratDocument import_brat_dir(const std::filesystem::path& txt_dir, const std::filesystem::path& ann_dir);

struct LintWarning {
  std::string instance_id;
  TokenSpan span;
  std::string kind;  // "coordinate-entity" or "entity-length"
  std::string message;
};

/// Flags entity spans holding a coordinating conjunction or comma, and spans
/// longer than max_entity_tokens. Never modifies the data.
std::vector<LintWarning> lint_annotations(const std::vector<NerInstance>& ner, const std::vector<RcInstance>& rc,
                                          std::size_t max_entity_tokens = 8);

struct RelationSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

struct SplitCounts {
  std::size_t train = 18;
  std::size_t validation = 5;
  std::size_t test = 6;
  std::size_t total() const { return train + validation + test; }
};

struct RcSplit {
  /// Shuffled relation order the partitions were cut from.
  std::vector<std::string> order;
  RelationSplit relations;
  std::vector<RcInstance> train;
  std::vector<RcInstance> validation;
  std::vector<RcInstance> test;
};

/// Relation-level split: shuffle relation names (seeded), cut train /
/// validation / test by `counts`; every instance follows its relation.
/// per_relation, when set, is the exact instance count each relation must have.
RcSplit split_rc(const std::vector<RcInstance>& instances, std::uint64_t seed, SplitCounts counts = {},
                 std::optional<std::size_t> per_relation = 50);

struct NerSplit {
  std::vector<NerInstance> train;
  std::vector<NerInstance> validation;
  std::vector<NerInstance> test;
};

NerSplit split_ner(const std::vector<NerInstance>& instances, std::uint64_t seed, double train_ratio = 0.8,
                   std::optional<std::size_t> expected_size = 2000);

/// Fold f (1-based, 1..5) right-rotates the relation order by 4*(f-1)
/// positions, then cuts it by `counts`.
RelationSplit rotate_folds(const std::vector<std::string>& order, int fold, SplitCounts counts = {});

using RelationPool = std::map<std::string, std::vector<RcInstance>>;
RelationPool group_by_relation(const std::vector<RcInstance>& instances);

struct Episode {
  std::size_t n_way = 0;
  std::size_t k_shot = 0;
  std::size_t q_query = 0;
  std::vector<std::string> relations;
  std::vector<std::vector<RcInstance>> support;  // [n_way][k_shot]
  std::vector<std::vector<RcInstance>> queries;  // [n_way][q_query]
};

/// N relations without replacement among those holding at least K+Q
/// instances, then K support and Q disjoint query instances per relation.
Episode sample_episode(const RelationPool& pool, std::size_t n_way, std::size_t k_shot, std::size_t q_query, Rng& rng);
Episode sample_episode(const RelationPool& pool, std::size_t n_way, std::size_t k_shot, std::size_t q_query,
                       std::uint64_t seed);

struct AnnotationDiff {
  std::vector<std::string> added;
  std::vector<std::string> removed;
  std::vector<std::string> changed;
};

/// Second-pass review report keyed by instance id.
AnnotationDiff diff_annotations(const std::vector<RcInstance>& before, const std::vector<RcInstance>& after);

json to_json(const NerInstance& instance);
NerInstance ner_from_json(const json& j);
json to_json(const RcInstance& instance);
RcInstance rc_from_json(const json& j);

std::vector<NerInstance> load_ner(const std::filesystem::path& path);
std::vector<RcInstance> load_rc(const std::filesystem::path& path);
void save_ner(const std::filesystem::path& path, const std::vector<NerInstance>& instances);
void save_rc(const std::filesystem::path& path, const std::vector<RcInstance>& instances);

}  // namespace kgc
