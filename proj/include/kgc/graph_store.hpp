#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "kgc/pipeline.hpp"

namespace kgc {

using NodeId = std::uint64_t;
using EdgeId = std::uint64_t;

struct EntityNode {
  NodeId id = 0;
  std::string canonical;
  /// Distinct raw surfaces, first-seen order.
  std::vector<std::string> aliases;
  std::size_t mention_count = 0;
  /// Distinct non-empty source titles, first-seen order.
  std::vector<std::string> paper_titles;
};

/// One supporting sentence for an edge.
struct Evidence {
  Provenance provenance;
  std::string head_surface;
  std::string tail_surface;
  double score = 0.0;
};

struct RelationEdge {
  EdgeId id = 0;
  NodeId head = 0;
  std::string relation;
  NodeId tail = 0;
  /// Max over evidence scores.
  double score = 0.0;
  std::vector<Evidence> evidence;
};

struct UpsertResult {
  NodeId head = 0;
  NodeId tail = 0;
  EdgeId edge = 0;
  /// False when the (head, relation, tail, sentence) entry already existed.
  bool added_evidence = false;
};

enum class MatchTier { Exact = 0, Prefix = 1, Substring = 2 };
std::string_view to_string(MatchTier tier);

struct SearchHit {
  NodeId id = 0;
  MatchTier tier = MatchTier::Exact;
};

struct Neighborhood {
  NodeId center = 0;
  std::vector<NodeId> nodes;  ///< center first, then endpoints in edge order
  std::vector<EdgeId> edges;
  std::size_t total_edges = 0;  ///< before the limit
};

struct NodeDetails {
  NodeId id = 0;
  std::size_t degree = 0;
};

struct GraphStats {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t evidence = 0;
  std::map<std::string, std::size_t> edges_per_relation;
};

/// Entity/relation graph with provenance. Entities merge on exact canonical
/// form. On disk a store is a directory of append-only nodes.jsonl and
/// edges.jsonl; the in-memory index is rebuilt by replaying them.
class GraphStore {
 public:
  /// Writable in-memory store.
  GraphStore();
  ~GraphStore();
  GraphStore(GraphStore&&) noexcept;
  GraphStore& operator=(GraphStore&&) noexcept;
  GraphStore(const GraphStore&) = delete;
  GraphStore& operator=(const GraphStore&) = delete;

  /// Opens (creating if needed) a store directory. Writable stores hold an
  /// exclusive lock on <dir>/LOCK until closed; a second writer gets IoError.
  static GraphStore open(const std::filesystem::path& dir, bool writable);

  UpsertResult upsert(const ExtractedTriple& triple);
  /// Flushes and releases the lock. Further upserts throw StoreClosed.
  void close();
  bool writable() const { return open_ && writable_; }

  std::vector<SearchHit> search(std::string_view query, std::size_t limit) const;
  Neighborhood neighbors(NodeId id, std::size_t limit, std::optional<std::string> relation = std::nullopt) const;
  NodeDetails node_details(NodeId id) const;
  GraphStats stats() const;

  const EntityNode& node(NodeId id) const;
  const RelationEdge& edge(EdgeId id) const;
  std::optional<NodeId> find(std::string_view surface) const;
  const std::vector<EntityNode>& nodes() const { return nodes_; }
  const std::vector<RelationEdge>& edges() const { return edges_; }

  json export_json() const;
  void export_to(const std::filesystem::path& path) const;
  /// Replays every evidence entry of an export through upsert.
  void import_json(const json& exported);
  void import_from(const std::filesystem::path& path);

 private:
  struct Locked;
  NodeId intern(const std::string& surface, bool& created);
  UpsertResult apply(const std::string& head_surface, const std::string& relation, const std::string& tail_surface,
                     const Evidence& evidence, bool persist);
  void replay(const std::filesystem::path& dir);
  bool has_node(NodeId id) const { return id >= 1 && id <= nodes_.size(); }

  std::vector<EntityNode> nodes_;
  std::vector<RelationEdge> edges_;
  std::vector<std::vector<EdgeId>> incident_;
  std::unordered_map<std::string, NodeId> by_canonical_;
  std::map<std::tuple<NodeId, std::string, NodeId>, EdgeId> by_key_;
  bool open_ = true;
  bool writable_ = true;
  std::unique_ptr<Locked> disk_;
};

json node_json(const EntityNode& node);
json edge_json(const RelationEdge& edge, bool with_evidence);
json search_json(const GraphStore& store, std::string_view query, std::size_t limit);
json neighbors_json(const GraphStore& store, const Neighborhood& hood);
json details_json(const GraphStore& store, const NodeDetails& details);
json stats_json(const GraphStats& stats);

}  // namespace kgc
