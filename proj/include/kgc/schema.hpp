#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kgc/encoder.hpp"
#include "kgc/kmeans.hpp"
#include "kgc/oie.hpp"
#include "kgc/util.hpp"

namespace kgc {

struct RelationTriple {
  std::string head;
  std::string relation;
  std::string tail;
  std::string text() const { return head + " " + relation + " " + tail; }
  auto operator<=>(const RelationTriple&) const = default;
};

struct SchemaRelation {
  std::size_t id = 0;
  /// Relation phrase of the triple nearest to the cluster centroid.
  std::string name;
  /// Distinct relation phrases of the member triples, first-seen order.
  std::vector<std::string> members;
  /// Texts of the member triples nearest to the centroid.
  std::vector<std::string> exemplars;
  /// Indices into InducedSchema::distinct.
  std::vector<std::size_t> triples;
};

struct EntityCluster {
  std::string representative;
  std::vector<std::string> members;
};

enum class TripleEmbedding { WholeText, ComponentMean };

struct SchemaOptions {
  std::size_t k_entities = 56;
  std::size_t k_relations = 29;
  std::uint64_t seed = 0;
  std::size_t restarts = 10;
  std::size_t max_iter = 300;
  double tol = 1e-9;
  std::size_t exemplars = 3;
  TripleEmbedding triple_embedding = TripleEmbedding::WholeText;
};

struct InducedSchema {
  std::vector<SchemaRelation> relations;
  std::vector<EntityCluster> entity_clusters;
  /// One rewritten triple per input candidate, in input order.
  std::vector<RelationTriple> rewritten;
  /// Deduplicated rewritten triples, first-seen order.
  std::vector<RelationTriple> distinct;
  /// Relation id of each distinct triple.
  std::vector<std::size_t> relation_of;
  double entity_objective = 0.0;
  double relation_objective = 0.0;
  std::size_t truncated = 0;
  json manifest;
};

/// Entity dedup -> embed -> cluster -> rewrite with representatives ->
/// triple dedup -> embed -> cluster; each relation cluster is named by the
/// relation phrase of its representative triple.
InducedSchema induce_schema(const std::vector<CandidateTriple>& triples, const EncoderProvider& provider,
                            const SchemaOptions& options);

json to_json(const InducedSchema& schema);

/// Relation names in id order from a schema.json file.
std::vector<std::string> load_schema_relations(const std::filesystem::path& path);

/// Stable fingerprint of an ordered relation list.
std::string schema_hash(const std::vector<std::string>& relations);

}  // namespace kgc
