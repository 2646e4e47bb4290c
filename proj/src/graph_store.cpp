#include "kgc/graph_store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "kgc/error.hpp"

namespace kgc {

namespace fs = std::filesystem;

struct GraphStore::Locked {
  fs::path dir;
  int lock_fd = -1;
  std::ofstream nodes;
  std::ofstream edges;

  ~Locked() {
    if (lock_fd >= 0) {
      flock(lock_fd, LOCK_UN);
      ::close(lock_fd);
    }
  }
};

namespace {

json provenance_json(const Provenance& p) {
  return {{"abstract_id", p.abstract_id},
          {"sentence_index", p.sentence_index},
          {"title", p.title},
          {"journal", p.journal},
          {"year", p.year}};
}

Provenance provenance_from_json(const json& j) {
  Provenance p;
  p.abstract_id = j.at("abstract_id").get<std::string>();
  p.sentence_index = j.at("sentence_index").get<std::size_t>();
  p.title = j.value("title", "");
  p.journal = j.value("journal", "");
  p.year = j.value("year", 0);
  return p;
}

json evidence_json(const Evidence& e) {
  return {{"provenance", provenance_json(e.provenance)},
          {"head_surface", e.head_surface},
          {"tail_surface", e.tail_surface},
          {"score", e.score}};
}

Evidence evidence_from_json(const json& j) {
  Evidence e;
  e.provenance = provenance_from_json(j.at("provenance"));
  e.head_surface = j.at("head_surface").get<std::string>();
  e.tail_surface = j.at("tail_surface").get<std::string>();
  e.score = j.at("score").get<double>();
  return e;
}

template <class T>
void push_unique(std::vector<T>& v, const T& x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

}  // namespace

std::string_view to_string(MatchTier tier) {
  switch (tier) {
    case MatchTier::Exact: return "exact";
    case MatchTier::Prefix: return "prefix";
    case MatchTier::Substring: return "substring";
  }
  return "substring";
}

GraphStore::GraphStore() = default;
GraphStore::~GraphStore() = default;
GraphStore::GraphStore(GraphStore&&) noexcept = default;
GraphStore& GraphStore::operator=(GraphStore&&) noexcept = default;

GraphStore GraphStore::open(const fs::path& dir, bool writable) {
  GraphStore store;
  store.writable_ = writable;
  if (writable) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create store " + dir.string() + ": " + ec.message());
    auto disk = std::make_unique<Locked>();
    disk->dir = dir;
    disk->lock_fd = ::open((dir / "LOCK").c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (disk->lock_fd < 0) fail(ErrorCode::IoError, "cannot open lock file: " + std::string(std::strerror(errno)));
    if (flock(disk->lock_fd, LOCK_EX | LOCK_NB) != 0) {
      fail(ErrorCode::IoError, "store " + dir.string() + " is locked by another writer");
    }
    store.replay(dir);
    disk->nodes.open(dir / "nodes.jsonl", std::ios::app | std::ios::binary);
    disk->edges.open(dir / "edges.jsonl", std::ios::app | std::ios::binary);
    if (!disk->nodes || !disk->edges) fail(ErrorCode::IoError, "cannot open segments in " + dir.string());
    store.disk_ = std::move(disk);
  } else {
    if (!fs::is_directory(dir)) fail(ErrorCode::IoError, "no store at " + dir.string());
    store.replay(dir);
  }
  return store;
}

void GraphStore::replay(const fs::path& dir) {
  std::vector<std::pair<NodeId, std::string>> declared;
  if (fs::exists(dir / "nodes.jsonl")) {
    for_each_jsonl(dir / "nodes.jsonl", [&](std::size_t, const json& j) {
      declared.emplace_back(j.at("id").get<NodeId>(), j.at("canonical").get<std::string>());
    });
  }
  if (fs::exists(dir / "edges.jsonl")) {
    for_each_jsonl(dir / "edges.jsonl", [&](std::size_t line, const json& j) {
      const auto r = apply(j.at("head_surface").get<std::string>(), j.at("relation").get<std::string>(),
                           j.at("tail_surface").get<std::string>(), evidence_from_json(j), false);
      if (r.edge != j.at("edge").get<EdgeId>() || r.head != j.at("head").get<NodeId>() ||
          r.tail != j.at("tail").get<NodeId>()) {
        fail(ErrorCode::InvariantViolation, "edges.jsonl:" + std::to_string(line) + ": ids disagree on replay");
      }
    });
  }
  if (declared.size() != nodes_.size()) fail(ErrorCode::InvariantViolation, "nodes.jsonl disagrees with edges.jsonl");
  for (const auto& [id, canonical] : declared) {
    if (!has_node(id) || nodes_[id - 1].canonical != canonical) {
      fail(ErrorCode::InvariantViolation, "nodes.jsonl entry " + std::to_string(id) + " disagrees on replay");
    }
  }
}

NodeId GraphStore::intern(const std::string& surface, bool& created) {
  const std::string canonical = canonicalize_entity(surface);
  if (canonical.empty()) fail(ErrorCode::InvalidArgument, "empty entity surface");
  const auto it = by_canonical_.find(canonical);
  if (it != by_canonical_.end()) {
    created = false;
    return it->second;
  }
  EntityNode n;
  n.id = nodes_.size() + 1;
  n.canonical = canonical;
  nodes_.push_back(std::move(n));
  incident_.emplace_back();
  by_canonical_.emplace(canonical, nodes_.back().id);
  created = true;
  return nodes_.back().id;
}

UpsertResult GraphStore::apply(const std::string& head_surface, const std::string& relation,
                               const std::string& tail_surface, const Evidence& evidence, bool persist) {
  if (relation.empty()) fail(ErrorCode::InvalidArgument, "empty relation");
  UpsertResult r;
  bool head_new = false, tail_new = false;
  r.head = intern(head_surface, head_new);
  r.tail = intern(tail_surface, tail_new);
  if (persist && disk_) {
    if (head_new) disk_->nodes << json{{"id", r.head}, {"canonical", nodes_[r.head - 1].canonical}}.dump() << '\n';
    if (tail_new && r.tail != r.head) disk_->nodes << json{{"id", r.tail}, {"canonical", nodes_[r.tail - 1].canonical}}.dump() << '\n';
  }
  const auto key = std::make_tuple(r.head, relation, r.tail);
  auto it = by_key_.find(key);
  if (it == by_key_.end()) {
    RelationEdge e;
    e.id = edges_.size() + 1;
    e.head = r.head;
    e.relation = relation;
    e.tail = r.tail;
    e.score = evidence.score;
    edges_.push_back(std::move(e));
    incident_[r.head - 1].push_back(edges_.back().id);
    if (r.tail != r.head) incident_[r.tail - 1].push_back(edges_.back().id);
    it = by_key_.emplace(key, edges_.back().id).first;
  }
  r.edge = it->second;
  RelationEdge& edge = edges_[r.edge - 1];
  const auto& p = evidence.provenance;
  const bool dup = std::any_of(edge.evidence.begin(), edge.evidence.end(), [&](const Evidence& ev) {
    return ev.provenance.abstract_id == p.abstract_id && ev.provenance.sentence_index == p.sentence_index;
  });
  if (dup) return r;
  r.added_evidence = true;
  edge.evidence.push_back(evidence);
  edge.score = std::max(edge.score, evidence.score);
  for (auto [id, surface] : {std::pair{r.head, &evidence.head_surface}, std::pair{r.tail, &evidence.tail_surface}}) {
    EntityNode& n = nodes_[id - 1];
    ++n.mention_count;
    push_unique(n.aliases, *surface);
    if (!p.title.empty()) push_unique(n.paper_titles, p.title);
  }
  if (persist && disk_) {
    json line = evidence_json(evidence);
    line["edge"] = r.edge;
    line["head"] = r.head;
    line["relation"] = relation;
    line["tail"] = r.tail;
    disk_->edges << line.dump() << '\n';
  }
  return r;
}

UpsertResult GraphStore::upsert(const ExtractedTriple& t) {
  if (!open_) fail(ErrorCode::StoreClosed, "store is closed");
  if (!writable_) fail(ErrorCode::StoreClosed, "store is open read-only");
  Evidence ev;
  ev.provenance = t.provenance;
  ev.head_surface = t.head.text;
  ev.tail_surface = t.tail.text;
  ev.score = t.score;
  return apply(t.head.text, t.relation, t.tail.text, ev, true);
}

void GraphStore::close() {
  if (disk_) {
    disk_->nodes.flush();
    disk_->edges.flush();
    const bool ok = disk_->nodes.good() && disk_->edges.good();
    disk_.reset();
    if (!ok) fail(ErrorCode::IoError, "failed to flush store segments");
  }
  open_ = false;
}

const EntityNode& GraphStore::node(NodeId id) const {
  if (!has_node(id)) fail(ErrorCode::NotFound, "no node " + std::to_string(id));
  return nodes_[id - 1];
}

const RelationEdge& GraphStore::edge(EdgeId id) const {
  if (id < 1 || id > edges_.size()) fail(ErrorCode::NotFound, "no edge " + std::to_string(id));
  return edges_[id - 1];
}

std::optional<NodeId> GraphStore::find(std::string_view surface) const {
  const auto it = by_canonical_.find(canonicalize_entity(surface));
  if (it == by_canonical_.end()) return std::nullopt;
  return it->second;
}

std::vector<SearchHit> GraphStore::search(std::string_view query, std::size_t limit) const {
  const std::string q = canonicalize_entity(query);
  std::vector<SearchHit> hits;
  if (q.empty() || limit == 0) return hits;
  for (const auto& n : nodes_) {
    if (n.canonical == q) hits.push_back({n.id, MatchTier::Exact});
    else if (n.canonical.starts_with(q)) hits.push_back({n.id, MatchTier::Prefix});
    else if (n.canonical.find(q) != std::string::npos) hits.push_back({n.id, MatchTier::Substring});
  }
  const auto less = [&](const SearchHit& a, const SearchHit& b) {
    const auto& na = nodes_[a.id - 1];
    const auto& nb = nodes_[b.id - 1];
    if (a.tier != b.tier) return a.tier < b.tier;
    if (na.mention_count != nb.mention_count) return na.mention_count > nb.mention_count;
    return na.canonical < nb.canonical;
  };
  if (hits.size() > limit) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(limit), hits.end(), less);
    hits.resize(limit);
  } else {
    std::sort(hits.begin(), hits.end(), less);
  }
  return hits;
}

Neighborhood GraphStore::neighbors(NodeId id, std::size_t limit, std::optional<std::string> relation) const {
  if (!has_node(id)) fail(ErrorCode::NotFound, "no node " + std::to_string(id));
  Neighborhood h;
  h.center = id;
  for (EdgeId e : incident_[id - 1]) {
    if (relation && edges_[e - 1].relation != *relation) continue;
    h.edges.push_back(e);
  }
  h.total_edges = h.edges.size();
  std::sort(h.edges.begin(), h.edges.end(), [&](EdgeId a, EdgeId b) {
    const double sa = edges_[a - 1].score, sb = edges_[b - 1].score;
    if (sa != sb) return sa > sb;
    return a < b;
  });
  if (h.edges.size() > limit) h.edges.resize(limit);
  h.nodes.push_back(id);
  for (EdgeId e : h.edges) {
    push_unique(h.nodes, edges_[e - 1].head);
    push_unique(h.nodes, edges_[e - 1].tail);
  }
  return h;
}

NodeDetails GraphStore::node_details(NodeId id) const {
  if (!has_node(id)) fail(ErrorCode::NotFound, "no node " + std::to_string(id));
  return {id, incident_[id - 1].size()};
}

GraphStats GraphStore::stats() const {
  GraphStats s;
  s.nodes = nodes_.size();
  s.edges = edges_.size();
  for (const auto& e : edges_) {
    s.evidence += e.evidence.size();
    ++s.edges_per_relation[e.relation];
  }
  return s;
}

json GraphStore::export_json() const {
  json nodes = json::array();
  for (const auto& n : nodes_) nodes.push_back(node_json(n));
  json edges = json::array();
  for (const auto& e : edges_) edges.push_back(edge_json(e, true));
  return {{"format", "kgc-graph"}, {"version", 1}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

void GraphStore::export_to(const fs::path& path) const { write_file(path, export_json().dump() + "\n"); }

void GraphStore::import_json(const json& exported) {
  if (!open_) fail(ErrorCode::StoreClosed, "store is closed");
  if (!writable_) fail(ErrorCode::StoreClosed, "store is open read-only");
  try {
    if (exported.at("format") != "kgc-graph") fail(ErrorCode::ParseError, "not a graph export");
    for (const auto& e : exported.at("edges")) {
      const std::string relation = e.at("relation").get<std::string>();
      for (const auto& evj : e.at("evidence")) {
        const Evidence ev = evidence_from_json(evj);
        apply(ev.head_surface, relation, ev.tail_surface, ev, true);
      }
    }
  } catch (const json::exception& ex) {
    fail(ErrorCode::ParseError, std::string("bad graph export: ") + ex.what());
  }
}

void GraphStore::import_from(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  import_json(j);
}

json node_json(const EntityNode& n) {
  return {{"id", n.id},
          {"canonical", n.canonical},
          {"aliases", n.aliases},
          {"mention_count", n.mention_count},
          {"paper_titles", n.paper_titles}};
}

json edge_json(const RelationEdge& e, bool with_evidence) {
  json j = {{"id", e.id},     {"head", e.head},   {"relation", e.relation},
            {"tail", e.tail}, {"score", e.score}, {"evidence_count", e.evidence.size()}};
  if (with_evidence) {
    json ev = json::array();
    for (const auto& x : e.evidence) ev.push_back(evidence_json(x));
    j["evidence"] = std::move(ev);
  }
  return j;
}

json search_json(const GraphStore& store, std::string_view query, std::size_t limit) {
  json results = json::array();
  for (const auto& hit : store.search(query, limit)) {
    const auto& n = store.node(hit.id);
    results.push_back({{"id", n.id},
                       {"canonical", n.canonical},
                       {"mention_count", n.mention_count},
                       {"match", std::string(to_string(hit.tier))}});
  }
  return {{"query", std::string(query)}, {"results", std::move(results)}};
}

json neighbors_json(const GraphStore& store, const Neighborhood& h) {
  json nodes = json::array();
  for (NodeId id : h.nodes) nodes.push_back(node_json(store.node(id)));
  json edges = json::array();
  for (EdgeId id : h.edges) edges.push_back(edge_json(store.edge(id), true));
  return {{"center", h.center}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"total_edges", h.total_edges}};
}

json details_json(const GraphStore& store, const NodeDetails& d) {
  json j = node_json(store.node(d.id));
  j["degree"] = d.degree;
  return j;
}

json stats_json(const GraphStats& s) {
  return {{"nodes", s.nodes}, {"edges", s.edges}, {"evidence", s.evidence}, {"edges_per_relation", s.edges_per_relation}};
}

}  // namespace kgc
