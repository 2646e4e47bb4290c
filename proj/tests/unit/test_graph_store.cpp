#include <doctest.h>

#include <filesystem>
#include <set>

#include "fixtures.hpp"
#include "kgc/error.hpp"
#include "kgc/graph_store.hpp"
#include "oracles.hpp"

using namespace kgc;

namespace {

ExtractedTriple triple(const std::string& h, const std::string& r, const std::string& t, double score = 1.0,
                       const std::string& abstract = "A1", std::size_t sentence = 0, const std::string& title = "Paper A1") {
  ExtractedTriple x;
  x.head.text = h;
  x.relation = r;
  x.tail.text = t;
  x.score = score;
  x.provenance = {abstract, sentence, title, "J", 2020};
  return x;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("surfaces merge on canonical form") {
  GraphStore g;
  const auto a = g.upsert(triple("Cements", "made_from", "clinker"));
  const auto b = g.upsert(triple("cements ", "include", "gypsum", 1.0, "A2"));
  CHECK(a.head == b.head);
  CHECK(g.node(a.head).canonical == "cements");
  CHECK(g.node(a.head).aliases == std::vector<std::string>{"Cements", "cements "});
  CHECK(g.node(a.head).mention_count == 2);
  CHECK(g.find("CEMENTS") == a.head);
  CHECK(!g.find("nothing"));
  CHECK(a.head == 1);
}

TEST_CASE("the same triple from two sentences is one edge with two evidence entries") {
  GraphStore g;
  const auto a = g.upsert(triple("slag", "improve", "durability", 0.8, "A1", 0));
  const auto b = g.upsert(triple("Slag", "improve", "durability", 0.9, "A1", 3));
  const auto c = g.upsert(triple("slag", "improve", "durability", 0.7, "A1", 3));
  CHECK(a.edge == b.edge);
  CHECK(b.added_evidence);
  CHECK(!c.added_evidence);
  CHECK(g.edge(a.edge).evidence.size() == 2);
  CHECK(g.edge(a.edge).score == 0.9);
  CHECK(g.stats().edges == 1);
  CHECK(g.stats().evidence == 2);
  g.upsert(triple("slag", "reduce", "durability"));
  CHECK(g.stats().edges == 2);
  CHECK(g.stats().edges_per_relation.at("reduce") == 1);
}

TEST_CASE("closed and read-only stores reject writes") {
  GraphStore g;
  g.close();
  CHECK(code_of([&] { g.upsert(triple("a", "r", "b")); }) == ErrorCode::StoreClosed);

  const auto dir = fresh_dir("kgc_test_store_ro");
  {
    auto w = GraphStore::open(dir, true);
    w.upsert(triple("a", "r", "b"));
    CHECK(code_of([&] { GraphStore::open(dir, true); }) == ErrorCode::IoError);
    w.close();
  }
  auto r = GraphStore::open(dir, false);
  CHECK(!r.writable());
  CHECK(r.stats().edges == 1);
  CHECK(code_of([&] { r.upsert(triple("a", "r", "c")); }) == ErrorCode::StoreClosed);
}

TEST_CASE("persisted store replays to the same graph and keeps ids across appends") {
  const auto dir = fresh_dir("kgc_test_store_replay");
  const auto triples = fixture::random_triples(500, 80, 5, 21);
  json before;
  NodeId first_id = 0;
  {
    auto w = GraphStore::open(dir, true);
    for (std::size_t i = 0; i < 250; ++i) w.upsert(triples[i]);
    first_id = *w.find(triples[0].head.text);
    w.close();
  }
  {
    auto w = GraphStore::open(dir, true);
    CHECK(*w.find(triples[0].head.text) == first_id);
    for (std::size_t i = 250; i < triples.size(); ++i) w.upsert(triples[i]);
    before = oracle::graph_signature(w);
    w.close();
  }
  GraphStore memory;
  for (const auto& t : triples) memory.upsert(t);
  const auto reopened = GraphStore::open(dir, false);
  CHECK(oracle::graph_signature(reopened) == before);
  CHECK(oracle::graph_signature(memory) == before);
  CHECK(reopened.export_json() == memory.export_json());
}

TEST_CASE("export then import is isomorphic") {
  GraphStore g;
  for (const auto& t : fixture::random_triples(10000, 1500, 12, 3)) g.upsert(t);
  const auto path = std::filesystem::temp_directory_path() / "kgc_test_export.json";
  g.export_to(path);
  GraphStore h;
  h.import_from(path);
  CHECK(oracle::graph_signature(h) == oracle::graph_signature(g));
  CHECK(h.stats().evidence == g.stats().evidence);
  const auto exported = g.export_json();
  CHECK(exported["format"] == "kgc-graph");
  CHECK(exported["version"] == 1);
}

TEST_CASE("search tiers and ordering") {
  GraphStore g;
  g.upsert(triple("cements", "include", "portland cement"));
  g.upsert(triple("cement paste", "include", "cements"));
  g.upsert(triple("blended cement", "include", "slag"));
  const auto hits = g.search("Cements", 10);
  REQUIRE(!hits.empty());
  CHECK(g.node(hits[0].id).canonical == "cements");
  CHECK(hits[0].tier == MatchTier::Exact);
  const auto cement = g.search("cement", 10);
  REQUIRE(cement.size() == 4);
  CHECK(cement[0].tier == MatchTier::Prefix);
  CHECK(g.node(cement[0].id).canonical == "cements");  // higher mention count
  CHECK(cement[3].tier == MatchTier::Substring);
  CHECK(g.search("", 10).empty());
  CHECK(g.search("   ", 10).empty());
  CHECK(g.search("cement", 2).size() == 2);
  CHECK(to_string(MatchTier::Prefix) == "prefix");
}

TEST_CASE("search agrees with a brute-force ranking") {
  GraphStore g;
  for (const auto& t : fixture::random_triples(3000, 1000, 4, 8)) g.upsert(t);
  REQUIRE(g.stats().nodes >= 900);
  Rng rng(2);
  std::vector<std::string> queries = {"entity", "Entity 1", "entity 12", "y 9", "1", "7 ", "nothing", "ENTITY 999"};
  for (int i = 0; i < 50; ++i) queries.push_back(std::to_string(rng.uniform_index(1000)));
  for (const auto& q : queries) {
    for (std::size_t limit : {1, 5, 25, 2000}) {
      std::vector<NodeId> got;
      for (const auto& h : g.search(q, limit)) got.push_back(h.id);
      REQUIRE(got == oracle::search(g, q, limit));
    }
  }
}

TEST_CASE("neighborhoods") {
  GraphStore g;
  const auto iso = g.upsert(triple("hub", "r", "spoke0", 0.1)).head;
  for (int i = 1; i <= 4; ++i) g.upsert(triple("hub", "r", "spoke" + std::to_string(i), 0.1 * (i + 1)));
  g.upsert(triple("loner a", "s", "loner b"));
  const auto star = g.neighbors(iso, 100);
  CHECK(star.center == iso);
  CHECK(star.edges.size() == 5);
  CHECK(star.nodes.size() == 6);
  CHECK(star.nodes.front() == iso);
  const auto top = g.neighbors(iso, 3);
  REQUIRE(top.edges.size() == 3);
  CHECK(top.total_edges == 5);
  CHECK(g.edge(top.edges[0]).score == doctest::Approx(0.5));
  CHECK(g.edge(top.edges[2]).score == doctest::Approx(0.3));
  CHECK(g.neighbors(iso, 10, std::string("s")).edges.empty());
  const auto spoke = *g.find("spoke2");
  CHECK(g.neighbors(spoke, 10).edges.size() == 1);
  CHECK(code_of([&] { g.neighbors(999, 10); }) == ErrorCode::NotFound);
  CHECK(code_of([&] { g.node_details(0); }) == ErrorCode::NotFound);

  GraphStore lonely;
  lonely.upsert(triple("x", "r", "y"));
  lonely.upsert(triple("z", "r", "y"));
  // both edges are incident to y; x has one
  CHECK(lonely.neighbors(*lonely.find("x"), 10).nodes.size() == 2);
}

TEST_CASE("ties in neighbor order go to the lower edge id") {
  GraphStore g;
  for (int i = 0; i < 5; ++i) g.upsert(triple("c", "r", "n" + std::to_string(i), 1.0));
  const auto hood = g.neighbors(*g.find("c"), 10);
  for (std::size_t i = 1; i < hood.edges.size(); ++i) CHECK(hood.edges[i - 1] < hood.edges[i]);
}

TEST_CASE("node details") {
  GraphStore g;
  g.upsert(triple("Clinker", "made_from", "limestone", 1.0, "A1", 0, "First paper"));
  g.upsert(triple("clinker", "include", "belite", 1.0, "A2", 1, "Second paper"));
  g.upsert(triple("clinker", "include", "belite", 1.0, "A2", 2, "Second paper"));
  const auto id = *g.find("clinker");
  const auto d = g.node_details(id);
  CHECK(d.degree == 2);
  CHECK(g.node(id).paper_titles == std::vector<std::string>{"First paper", "Second paper"});
  CHECK(g.node(id).aliases.size() == 2);
  CHECK(g.node(id).mention_count == 3);
  const auto j = details_json(g, d);
  CHECK(j["degree"] == 2);
  CHECK(j["paper_titles"].size() == 2);

  for (const auto& t : fixture::random_triples(400, 60, 3, 5)) g.upsert(t);
  for (const auto& n : g.nodes()) CHECK(g.node_details(n.id).degree == g.neighbors(n.id, 1000000).total_edges);
}
