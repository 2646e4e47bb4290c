#include <doctest.h>

#include "fixtures.hpp"
#include "kgc/error.hpp"
#include "kgc/graph_service.hpp"
#include "oracles.hpp"

#include <httplib.h>

using namespace kgc;

namespace {

using Params = std::multimap<std::string, std::string>;

const json& api_schema() {
  static const json schema = json::parse(read_file(KGC_SCHEMA_FILE));
  return schema;
}

void check_valid(const json& body, const std::string& def) {
  const auto errors = oracle::validate(body, api_schema()["$defs"][def], api_schema());
  INFO(def << ": " << (errors.empty() ? "" : errors.front()));
  CHECK(errors.empty());
}

std::shared_ptr<GraphStore> fixture_store() {
  auto g = std::make_shared<GraphStore>();
  ExtractedTriple t;
  t.head.text = "Cements";
  t.relation = "made_from";
  t.tail.text = "clinker";
  t.score = 8.6;
  t.provenance = {"W1", 0, "Cement chemistry", "Cement Research", 2019};
  g->upsert(t);
  t.tail.text = "gypsum";
  t.relation = "include";
  g->upsert(t);
  for (const auto& x : fixture::random_triples(300, 60, 4, 77)) g->upsert(x);
  return g;
}

}  // namespace

TEST_CASE("in-process routes and schema conformance") {
  const auto g = fixture_store();
  const auto health = handle_api(*g, "/api/health", {});
  CHECK(health.status == 200);
  CHECK(health.body == json{{"status", "ok"}});
  check_valid(health.body, "health");

  const auto stats = handle_api(*g, "/api/stats", {});
  check_valid(stats.body, "stats");
  CHECK(stats.body["nodes"] == g->stats().nodes);

  const auto search = handle_api(*g, "/api/search", {{"q", "cements"}});
  CHECK(search.status == 200);
  check_valid(search.body, "search");
  CHECK(search.body["results"][0]["canonical"] == "cements");
  CHECK(search.body == search_json(*g, "cements", 25));

  const auto id = *g->find("cements");
  const auto node = handle_api(*g, "/api/nodes/" + std::to_string(id), {});
  check_valid(node.body, "node_details");
  CHECK(node.body["paper_titles"] == json{"Cement chemistry"});

  const auto hood = handle_api(*g, "/api/nodes/" + std::to_string(id) + "/neighbors", {{"limit", "1"}});
  check_valid(hood.body, "neighbors");
  CHECK(hood.body["edges"].size() == 1);
  CHECK(hood.body["edges"][0]["score"] == 8.6);
  const auto filtered = handle_api(*g, "/api/nodes/" + std::to_string(id) + "/neighbors", {{"relation", "include"}});
  REQUIRE(filtered.body["edges"].size() == 1);
  CHECK(filtered.body["edges"][0]["relation"] == "include");

  for (NodeId n = 1; n <= g->nodes().size(); n += 7) {
    check_valid(handle_api(*g, "/api/nodes/" + std::to_string(n), {}).body, "node_details");
    check_valid(handle_api(*g, "/api/nodes/" + std::to_string(n) + "/neighbors", {}).body, "neighbors");
  }
  for (const char* q : {"entity", "Entity 3", "", "zzz"}) check_valid(handle_api(*g, "/api/search", {{"q", q}}).body, "search");
}

TEST_CASE("error responses") {
  const auto g = fixture_store();
  const auto missing = handle_api(*g, "/api/nodes/999999", {});
  CHECK(missing.status == 404);
  CHECK(missing.body["error"] == "NotFound");
  check_valid(missing.body, "error");
  CHECK(handle_api(*g, "/api/nodes/abc", {}).status == 400);
  CHECK(handle_api(*g, "/api/nodes/1/sideways", {}).status == 404);
  CHECK(handle_api(*g, "/api/nowhere", {}).status == 404);
  const auto bad_limit = handle_api(*g, "/api/search", {{"q", "x"}, {"limit", "-3"}});
  CHECK(bad_limit.status == 400);
  check_valid(bad_limit.body, "error");
  CHECK(handle_api(*g, "/api/search", {{"q", "entity"}, {"limit", "999999"}}, {.max_limit = 5}).body["results"].size() == 5);
  CHECK(handle_api(*g, "/api/search", {}).body["results"].empty());
}

TEST_CASE("bind address parsing") {
  CHECK(parse_bind_address("0.0.0.0:8080") == std::pair<std::string, int>{"0.0.0.0", 8080});
  CHECK(parse_bind_address(":9000").second == 9000);
  CHECK(parse_bind_address("7000").first == "127.0.0.1");
  CHECK_THROWS_AS(parse_bind_address("host:99999"), Error);
  CHECK_THROWS_AS(parse_bind_address("host:port"), Error);
}

TEST_CASE("HTTP responses equal the in-process calls") {
  const auto g = fixture_store();
  GraphService service(g, {.cors_origin = "http://explorer.local"});
  const int port = service.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  service.start();
  httplib::Client client("127.0.0.1", port);

  const std::vector<std::pair<std::string, Params>> requests = {
      {"/api/health", {}},
      {"/api/stats", {}},
      {"/api/search", {{"q", "cements"}}},
      {"/api/search", {{"q", "entity 1"}, {"limit", "7"}}},
      {"/api/nodes/1", {}},
      {"/api/nodes/1/neighbors", {{"limit", "2"}}},
      {"/api/nodes/2/neighbors", {{"relation", "rel_1"}}},
      {"/api/nodes/999999", {}},
      {"/api/search", {{"limit", "x"}}},
  };
  for (const auto& [path, params] : requests) {
    httplib::Params hp(params.begin(), params.end());
    const auto res = client.Get(path, hp, httplib::Headers{});
    REQUIRE(res);
    const auto expected = handle_api(*g, path, params);
    CHECK(res->status == expected.status);
    CHECK(json::parse(res->body) == expected.body);
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == "http://explorer.local");
    CHECK(res->get_header_value("Content-Type") == "application/json");
  }
  const auto pre = client.Options("/api/search");
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("GET") != std::string::npos);

  GraphService clash(g);
  try {
    clash.bind("127.0.0.1", port);
    FAIL("expected BindError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BindError);
  }
  service.stop();
}
