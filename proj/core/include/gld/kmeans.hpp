#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace gld {

struct KMeansOptions {
  int max_iterations = 100;
  /// Stops once no centroid moves by more than this (Euclidean).
  double tolerance = 1e-6;
};

struct KMeansResult {
  Eigen::MatrixXd centroids;  // d x k
  std::vector<int> assignment;
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding over the columns of `points`.
/// Requires 1 <= k <= points.cols(). Empty clusters keep their previous centroid.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, const KMeansOptions& options = {});

}  // namespace gld
