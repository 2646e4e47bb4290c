#include "kgc/relation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kgc/error.hpp"

namespace kgc {

namespace {

std::size_t protected_length(const RcInstance& r) { return std::max(r.head.end, r.tail.end); }

void cut_one(RcInstance& r) { r.tokens.pop_back(); }

RelationPool pool_of(const std::vector<RcInstance>& dataset, const std::vector<std::string>& relations) {
  const std::set<std::string> keep(relations.begin(), relations.end());
  RelationPool pool;
  for (const auto& r : dataset)
    if (keep.count(r.relation)) pool[r.relation].push_back(r);
  return pool;
}

}  // namespace

bool truncate_pair(RcInstance& query, RcInstance& support, std::size_t max_tokens) {
  bool cut = false;
  while (query.tokens.size() + support.tokens.size() > max_tokens) {
    const bool q_can = query.tokens.size() > protected_length(query);
    const bool s_can = support.tokens.size() > protected_length(support);
    if (!q_can && !s_can) break;
    if (q_can && (!s_can || query.tokens.size() >= support.tokens.size())) cut_one(query);
    else cut_one(support);
    cut = true;
  }
  return cut;
}

Prediction predict(const RcInstance& query, const std::vector<std::string>& relations,
                   const std::vector<std::vector<RcInstance>>& support, const PairScorer& scorer) {
  if (relations.size() != support.size()) fail(ErrorCode::IncompleteSupport, "one support group per relation required");
  if (relations.empty()) fail(ErrorCode::IncompleteSupport, "no relations to choose from");
  Prediction p;
  p.per_relation_scores.reserve(relations.size());
  for (std::size_t n = 0; n < relations.size(); ++n) {
    if (support[n].empty()) fail(ErrorCode::IncompleteSupport, "empty support group for " + relations[n]);
    double sum = 0.0;
    for (const auto& s : support[n]) {
      RcInstance q = query;
      RcInstance sup = s;
      if (truncate_pair(q, sup, scorer.max_tokens())) ++p.truncated_pairs;
      const double v = scorer.score(q, sup);
      if (!std::isfinite(v)) fail(ErrorCode::InvariantViolation, scorer.id() + " returned a non-finite score");
      sum += v;
    }
    p.per_relation_scores.push_back(sum / static_cast<double>(support[n].size()));
  }
  p.index = 0;
  for (std::size_t n = 1; n < p.per_relation_scores.size(); ++n)
    if (p.per_relation_scores[n] > p.per_relation_scores[p.index]) p.index = n;
  p.relation = relations[p.index];
  p.score = p.per_relation_scores[p.index];
  return p;
}

EpisodeEvaluation evaluate_episodes(const PairScorer& scorer, const RelationPool& pool, std::size_t n_way,
                                    std::size_t k_shot, std::size_t q_query, std::size_t iterations,
                                    std::uint64_t seed) {
  EpisodeEvaluation out;
  for (std::size_t it = 0; it < iterations; ++it) {
    const Episode ep = sample_episode(pool, n_way, k_shot, q_query, derive_seed(seed, it));
    for (std::size_t n = 0; n < ep.n_way; ++n) {
      for (const auto& q : ep.queries[n]) {
        const Prediction p = predict(q, ep.relations, ep.support, scorer);
        out.correct += p.index == n;
        out.truncated_pairs += p.truncated_pairs;
        ++out.total;
      }
    }
  }
  if (out.total) out.accuracy = static_cast<double>(out.correct) / static_cast<double>(out.total);
  out.interval = wilson_interval(out.correct, out.total);
  return out;
}

RotationResult rotation_cv(const ScorerFactory& factory, const std::vector<RcInstance>& dataset,
                           const std::vector<std::string>& order, const RotationConfig& config) {
  RotationResult result;
  std::vector<double> val, test;
  for (int f = 1; f <= config.folds; ++f) {
    FoldAccuracy fold;
    fold.fold = f;
    fold.relations = rotate_folds(order, f, config.counts);
    const std::set<std::string> train_rel(fold.relations.train.begin(), fold.relations.train.end());
    std::vector<RcInstance> training;
    for (const auto& r : dataset)
      if (train_rel.count(r.relation)) training.push_back(r);
    const auto scorer = factory(training);
    const std::uint64_t fold_seed = derive_seed(config.seed, static_cast<std::uint64_t>(f));
    fold.validation = evaluate_episodes(*scorer, pool_of(dataset, fold.relations.validation), config.n_way,
                                        config.k_shot, config.q_query, config.iterations, derive_seed(fold_seed, 1));
    fold.test = evaluate_episodes(*scorer, pool_of(dataset, fold.relations.test), config.n_way, config.k_shot,
                                  config.q_query, config.iterations, derive_seed(fold_seed, 2));
    val.push_back(fold.validation.accuracy);
    test.push_back(fold.test.accuracy);
    result.folds.push_back(std::move(fold));
  }
  result.validation = summarize(val);
  result.test = summarize(test);
  return result;
}

json to_json(const Prediction& p) {
  return {{"relation", p.relation},
          {"index", p.index},
          {"score", p.score},
          {"per_relation_scores", p.per_relation_scores},
          {"truncated_pairs", p.truncated_pairs}};
}

json to_json(const EpisodeEvaluation& e) {
  return {{"accuracy", e.accuracy},
          {"correct", e.correct},
          {"total", e.total},
          {"interval", {e.interval.low, e.interval.high}},
          {"truncated_pairs", e.truncated_pairs}};
}

}  // namespace kgc
