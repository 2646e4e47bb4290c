#include <algorithm>

#include "kgc/error.hpp"
#include "kgc/pipeline.hpp"
#include "kgc/summary.hpp"

namespace kgc {

ValidationSample sample_validation(const std::vector<ExtractedTriple>& triples, std::size_t per_relation,
                                   std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_relation;
  for (std::size_t i = 0; i < triples.size(); ++i) by_relation[triples[i].relation].push_back(i);
  ValidationSample out;
  for (const auto& [rel, idx] : by_relation) {
    std::vector<std::size_t> chosen;
    if (idx.size() <= per_relation) {
      chosen = idx;
      if (idx.size() < per_relation) out.shortfalls[rel] = idx.size();
    } else {
      Rng rng(derive_seed(seed, fnv1a64(rel)));
      for (std::size_t k : rng.sample_indices(idx.size(), per_relation)) chosen.push_back(idx[k]);
      std::sort(chosen.begin(), chosen.end());
    }
    for (std::size_t i : chosen) out.triples.push_back(triples[i]);
  }
  return out;
}

bool ValidationRecord::verdict() const {
  if (agreed()) {
    if (adjudication) fail(ErrorCode::InvariantViolation, triple_id + ": adjudication given although the votes agree");
    return vote_a;
  }
  if (!adjudication) fail(ErrorCode::MissingAdjudication, triple_id + ": votes disagree and no adjudication");
  return *adjudication;
}

namespace {

void add(BucketAccuracy& b, bool correct) {
  ++b.total;
  b.correct += correct;
}

void finish(BucketAccuracy& b) { b.percent = percent_half_up(b.correct, b.total); }

}  // namespace

AdjudicationReport adjudicate(const std::vector<ValidationRecord>& records) {
  AdjudicationReport r;
  for (const auto& rec : records) {
    const bool v = rec.verdict();
    add(rec.agreed() ? r.agreed : r.disagreed, v);
    add(r.total, v);
  }
  finish(r.agreed);
  finish(r.disagreed);
  finish(r.total);
  return r;
}

std::map<std::string, BucketAccuracy> per_relation_accuracy(const std::vector<ValidationRecord>& records) {
  std::map<std::string, BucketAccuracy> out;
  for (const auto& rec : records) add(out[rec.relation], rec.verdict());
  for (auto& [rel, b] : out) finish(b);
  return out;
}

json to_json(const ValidationRecord& r) {
  json j = {{"triple_id", r.triple_id}, {"relation", r.relation}, {"votes", {r.vote_a, r.vote_b}}};
  j["adjudication"] = r.adjudication ? json(*r.adjudication) : json(nullptr);
  return j;
}

ValidationRecord validation_record_from_json(const json& j) {
  try {
    ValidationRecord r;
    r.triple_id = j.at("triple_id").get<std::string>();
    r.relation = j.value("relation", "");
    const auto& votes = j.at("votes");
    if (!votes.is_array() || votes.size() != 2) fail(ErrorCode::ParseError, r.triple_id + ": votes must hold two booleans");
    r.vote_a = votes[0].get<bool>();
    r.vote_b = votes[1].get<bool>();
    if (j.contains("adjudication") && !j.at("adjudication").is_null()) r.adjudication = j.at("adjudication").get<bool>();
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad validation record: ") + e.what());
  }
}

std::vector<ValidationRecord> load_validation_records(const std::filesystem::path& path) {
  std::vector<ValidationRecord> out;
  for_each_jsonl(path, [&](std::size_t line, const json& j) {
    try {
      out.push_back(validation_record_from_json(j));
    } catch (const Error& e) {
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

json to_json(const BucketAccuracy& b) {
  return {{"total", b.total}, {"correct", b.correct}, {"accuracy_percent", b.percent}};
}

json to_json(const AdjudicationReport& r) {
  return {{"agreed", to_json(r.agreed)}, {"disagreed", to_json(r.disagreed)}, {"total", to_json(r.total)}};
}

}  // namespace kgc
