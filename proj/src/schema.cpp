#include "kgc/schema.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "kgc/error.hpp"

namespace kgc {

namespace {

std::string mode_name(TripleEmbedding mode) {
  return mode == TripleEmbedding::WholeText ? "whole-text" : "component-mean";
}

}  // namespace

InducedSchema induce_schema(const std::vector<CandidateTriple>& triples, const EncoderProvider& provider,
                            const SchemaOptions& options) {
  InducedSchema out;

  std::vector<std::string> entities;
  for (const auto& t : triples) {
    entities.push_back(trim(t.head_text));
    entities.push_back(trim(t.tail_text));
  }
  std::sort(entities.begin(), entities.end());
  entities.erase(std::unique(entities.begin(), entities.end()), entities.end());
  if (options.k_entities > entities.size()) {
    fail(ErrorCode::InvalidK, "k_entities = " + std::to_string(options.k_entities) + " exceeds " +
                                  std::to_string(entities.size()) + " distinct entities");
  }

  auto entity_embedding = embed(entities, provider);
  out.truncated += entity_embedding.truncated;
  KMeansOptions km{options.k_entities, options.seed, options.max_iter, options.tol, options.restarts};
  const ClusterModel entity_model = kmeans(entity_embedding.vectors, km);
  out.entity_objective = entity_model.objective;

  std::map<std::string, std::string> rep_of;
  for (const auto& cluster : entity_model.members()) {
    EntityCluster ec;
    std::vector<Vector> vectors;
    for (std::size_t i : cluster) {
      ec.members.push_back(entities[i]);
      vectors.push_back(entity_embedding.vectors[i]);
    }
    if (ec.members.empty()) continue;
    ec.representative = nearest_label(ec.members, vectors, entity_model.centroids[entity_model.assignments[cluster.front()]]);
    for (const auto& m : ec.members) rep_of[m] = ec.representative;
    out.entity_clusters.push_back(std::move(ec));
  }

  std::map<RelationTriple, std::size_t> seen;
  for (const auto& t : triples) {
    RelationTriple r{rep_of.at(trim(t.head_text)), trim(t.relation_text), rep_of.at(trim(t.tail_text))};
    out.rewritten.push_back(r);
    if (seen.emplace(r, out.distinct.size()).second) out.distinct.push_back(r);
  }
  if (options.k_relations > out.distinct.size()) {
    fail(ErrorCode::InvalidK, "k_relations = " + std::to_string(options.k_relations) + " exceeds " +
                                  std::to_string(out.distinct.size()) + " distinct rewritten triples");
  }

  std::vector<Vector> triple_vectors;
  if (options.triple_embedding == TripleEmbedding::WholeText) {
    std::vector<std::string> texts;
    for (const auto& r : out.distinct) texts.push_back(r.text());
    auto e = embed(texts, provider);
    out.truncated += e.truncated;
    triple_vectors = std::move(e.vectors);
  } else {
    for (const auto& r : out.distinct) {
      auto e = embed({r.head, r.relation, r.tail}, provider);
      out.truncated += e.truncated;
      triple_vectors.push_back((e.vectors[0] + e.vectors[1] + e.vectors[2]) / 3.0);
    }
  }

  km.k = options.k_relations;
  km.seed = derive_seed(options.seed, 0x7e1a);
  const ClusterModel relation_model = kmeans(triple_vectors, km);
  out.relation_objective = relation_model.objective;
  out.relation_of = relation_model.assignments;

  for (const auto& cluster : relation_model.members()) {
    if (cluster.empty()) fail(ErrorCode::InvariantViolation, "k-means returned an empty relation cluster");
    SchemaRelation rel;
    rel.id = out.relations.size();
    rel.triples = cluster;
    const Vector& centroid = relation_model.centroids[relation_model.assignments[cluster.front()]];
    std::vector<std::string> texts;
    std::vector<Vector> vectors;
    for (std::size_t i : cluster) {
      texts.push_back(out.distinct[i].text());
      vectors.push_back(triple_vectors[i]);
      const auto& phrase = out.distinct[i].relation;
      if (std::find(rel.members.begin(), rel.members.end(), phrase) == rel.members.end()) rel.members.push_back(phrase);
    }
    const std::string rep_text = nearest_label(texts, vectors, centroid);
    const auto rep = std::find(texts.begin(), texts.end(), rep_text) - texts.begin();
    rel.name = out.distinct[cluster[static_cast<std::size_t>(rep)]].relation;

    std::vector<std::size_t> order(cluster.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double da = (vectors[a] - centroid).squaredNorm();
      const double db = (vectors[b] - centroid).squaredNorm();
      return da < db || (da == db && texts[a] < texts[b]);
    });
    for (std::size_t i = 0; i < std::min(options.exemplars, order.size()); ++i) rel.exemplars.push_back(texts[order[i]]);
    out.relations.push_back(std::move(rel));
  }
  out.manifest = json{{"seed", options.seed},
                      {"provider", provider.id()},
                      {"d", provider.dimension()},
                      {"tol", options.tol},
                      {"max_iter", options.max_iter},
                      {"restarts", options.restarts},
                      {"k_entities", options.k_entities},
                      {"k_relations", options.k_relations},
                      {"triple_embedding", mode_name(options.triple_embedding)},
                      {"distance", "euclidean"}};
  return out;
}

json to_json(const InducedSchema& schema) {
  json relations = json::array();
  for (const auto& r : schema.relations) {
    json triples = json::array();
    for (std::size_t i : r.triples) triples.push_back(schema.distinct[i].text());
    relations.push_back({{"id", r.id}, {"name", r.name}, {"members", r.members},
                         {"exemplars", r.exemplars}, {"triples", triples}});
  }
  json clusters = json::array();
  for (const auto& c : schema.entity_clusters) {
    clusters.push_back({{"representative", c.representative}, {"members", c.members}});
  }
  return json{{"relations", relations},
              {"entity_clusters", clusters},
              {"objectives", {{"entities", schema.entity_objective}, {"relations", schema.relation_objective}}},
              {"counts", {{"rewritten_triples", schema.rewritten.size()}, {"distinct_triples", schema.distinct.size()}}},
              {"truncated_inputs", schema.truncated},
              {"manifest", schema.manifest}};
}

std::vector<std::string> load_schema_relations(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  std::vector<std::pair<std::size_t, std::string>> rels;
  const json& list = j.is_array() ? j : j.at("relations");
  for (const auto& r : list) {
    if (r.is_string()) {
      rels.push_back({rels.size(), r.get<std::string>()});
    } else {
      rels.push_back({r.at("id").get<std::size_t>(), r.at("name").get<std::string>()});
    }
  }
  std::sort(rels.begin(), rels.end());
  std::vector<std::string> names;
  for (auto& [id, name] : rels) names.push_back(std::move(name));
  return names;
}

std::string schema_hash(const std::vector<std::string>& relations) {
  return hex64(fnv1a64(join(relations, "\x1f")));
}

}  // namespace kgc
