#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgc/encoder.hpp"

namespace kgc {

struct KMeansOptions {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::size_t max_iter = 300;
  /// Stop once no centroid moves by this much (Euclidean).
  double tol = 1e-9;
  /// Independent k-means++ starts; the lowest objective wins.
  std::size_t restarts = 10;
};

struct ClusterModel {
  std::size_t k = 0;
  std::vector<Vector> centroids;
  std::vector<std::size_t> assignments;
  /// Sum over clusters of squared Euclidean distances to the centroid.
  double objective = 0.0;
  /// Objective after every Lloyd iteration of the winning start.
  std::vector<double> trace;
  std::size_t iterations = 0;
  std::size_t best_restart = 0;

  std::vector<std::vector<std::size_t>> members() const;
};

/// Lloyd iterations from k-means++ seeding. Empty clusters are reseeded with
/// the point farthest from its own centroid. Throws InvalidK unless
/// 1 <= k <= points.size().
ClusterModel kmeans(const std::vector<Vector>& points, const KMeansOptions& options);

double kmeans_objective(const std::vector<Vector>& points, const std::vector<std::size_t>& assignments,
                        const std::vector<Vector>& centroids);

/// Label of the vector nearest to `centroid`; ties go to the smaller label.
std::string nearest_label(const std::vector<std::string>& labels, const std::vector<Vector>& vectors,
                          const Vector& centroid);

/// Representative of a cluster: the member closest to the members' mean.
std::string representative(const std::vector<std::string>& labels, const std::vector<Vector>& vectors);

}  // namespace kgc
