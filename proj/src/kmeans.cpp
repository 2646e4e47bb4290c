#include "kgc/kmeans.hpp"

#include <limits>

#include "kgc/error.hpp"
#include "kgc/util.hpp"

namespace kgc {

namespace {

struct Run {
  std::vector<Vector> centroids;
  std::vector<std::size_t> assignments;
  double objective = 0.0;
  std::vector<double> trace;
  std::size_t iterations = 0;
};

std::vector<Vector> plus_plus_init(const std::vector<Vector>& points, std::size_t k, Rng& rng) {
  std::vector<Vector> centers;
  centers.reserve(k);
  centers.push_back(points[rng.uniform_index(points.size())]);
  std::vector<double> d2(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) d2[i] = (points[i] - centers[0]).squaredNorm();
  while (centers.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = points.size() - 1;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        acc += d2[i];
        if (target < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.uniform_index(points.size());
    }
    centers.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i) {
      d2[i] = std::min(d2[i], (points[i] - centers.back()).squaredNorm());
    }
  }
  return centers;
}

std::vector<Vector> means_of(const std::vector<Vector>& points, const std::vector<std::size_t>& assignments,
                             std::size_t k, const std::vector<Vector>& previous) {
  const auto dim = points.front().size();
  std::vector<Vector> sums(k, Vector::Zero(dim));
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    sums[assignments[i]] += points[i];
    ++counts[assignments[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) {
      sums[c] /= static_cast<double>(counts[c]);
    } else {
      sums[c] = previous[c];
    }
  }
  return sums;
}

Run lloyd(const std::vector<Vector>& points, const KMeansOptions& options, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = points.size();
  const std::size_t k = options.k;
  Run run;
  run.centroids = plus_plus_init(points, k, rng);
  run.assignments.assign(n, std::numeric_limits<std::size_t>::max());

  for (std::size_t iter = 0; iter < std::max<std::size_t>(options.max_iter, 1); ++iter) {
    std::vector<std::size_t> next(n, 0);
    std::vector<double> dist(n, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = (points[i] - run.centroids[c]).squaredNorm();
        if (d < best) {
          best = d;
          next[i] = c;
        }
      }
      dist[i] = best;
      ++counts[next[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[next[i]] < 2) continue;
        if (far == n || dist[i] > dist[far]) far = i;
      }
      --counts[next[far]];
      next[far] = c;
      dist[far] = 0.0;
      counts[c] = 1;
    }

    const bool unchanged = next == run.assignments;
    run.assignments = std::move(next);
    std::vector<Vector> updated = means_of(points, run.assignments, k, run.centroids);
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) shift = std::max(shift, (updated[c] - run.centroids[c]).norm());
    run.centroids = std::move(updated);
    run.iterations = iter + 1;
    if (unchanged) break;
    run.trace.push_back(kmeans_objective(points, run.assignments, run.centroids));
    if (shift < options.tol) break;
  }
  run.objective = kmeans_objective(points, run.assignments, run.centroids);
  if (run.trace.empty()) run.trace.push_back(run.objective);
  return run;
}

}  // namespace

std::vector<std::vector<std::size_t>> ClusterModel::members() const {
  std::vector<std::vector<std::size_t>> out(k);
  for (std::size_t i = 0; i < assignments.size(); ++i) out[assignments[i]].push_back(i);
  return out;
}

double kmeans_objective(const std::vector<Vector>& points, const std::vector<std::size_t>& assignments,
                        const std::vector<Vector>& centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) total += (points[i] - centroids[assignments[i]]).squaredNorm();
  return total;
}

ClusterModel kmeans(const std::vector<Vector>& points, const KMeansOptions& options) {
  if (options.k == 0 || options.k > points.size()) {
    fail(ErrorCode::InvalidK, "k = " + std::to_string(options.k) + " with " + std::to_string(points.size()) + " points");
  }
  const auto dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) fail(ErrorCode::DimensionMismatch, "k-means points differ in dimension");
    if (!p.allFinite()) fail(ErrorCode::InvalidArgument, "k-means points must be finite");
  }

  ClusterModel best;
  bool have = false;
  const std::size_t starts = std::max<std::size_t>(options.restarts, 1);
  for (std::size_t r = 0; r < starts; ++r) {
    Run run = lloyd(points, options, derive_seed(options.seed, r));
    if (!have || run.objective < best.objective) {
      best.k = options.k;
      best.centroids = std::move(run.centroids);
      best.assignments = std::move(run.assignments);
      best.objective = run.objective;
      best.trace = std::move(run.trace);
      best.iterations = run.iterations;
      best.best_restart = r;
      have = true;
    }
  }
  return best;
}

std::string nearest_label(const std::vector<std::string>& labels, const std::vector<Vector>& vectors,
                          const Vector& centroid) {
  if (labels.empty() || labels.size() != vectors.size()) {
    fail(ErrorCode::EmptyCluster, "representative of an empty cluster");
  }
  std::size_t best = 0;
  double best_d = (vectors[0] - centroid).squaredNorm();
  for (std::size_t i = 1; i < labels.size(); ++i) {
    const double d = (vectors[i] - centroid).squaredNorm();
    if (d < best_d || (d == best_d && labels[i] < labels[best])) {
      best = i;
      best_d = d;
    }
  }
  return labels[best];
}

std::string representative(const std::vector<std::string>& labels, const std::vector<Vector>& vectors) {
  if (labels.empty() || labels.size() != vectors.size()) {
    fail(ErrorCode::EmptyCluster, "representative of an empty cluster");
  }
  Vector mean = Vector::Zero(vectors.front().size());
  for (const auto& v : vectors) mean += v;
  mean /= static_cast<double>(vectors.size());
  return nearest_label(labels, vectors, mean);
}

}  // namespace kgc
