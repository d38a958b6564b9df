#include "gld/kmeans.hpp"

#include <limits>

#include "gld/error.hpp"
#include "gld/rng.hpp"

namespace gld {

namespace {

Eigen::MatrixXd seed_plus_plus(const Eigen::MatrixXd& points, int k, Rng& rng) {
  const Eigen::Index n = points.cols();
  Eigen::MatrixXd centroids(points.rows(), k);
  centroids.col(0) = points.col(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
  Eigen::VectorXd d2 = (points.colwise() - centroids.col(0)).colwise().squaredNorm().transpose();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0 && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
      // Guard against rounding landing on an already chosen point.
      while (d2[chosen] == 0.0 && chosen > 0) --chosen;
    } else {
      chosen = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
    }
    centroids.col(c) = points.col(chosen);
    d2 = d2.cwiseMin((points.colwise() - centroids.col(c)).colwise().squaredNorm().transpose());
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, const KMeansOptions& options) {
  const Eigen::Index n = points.cols();
  if (k < 1 || k > n) throw Error("kmeans requires 1 <= k <= number of points");
  Rng rng(seed);
  KMeansResult result;
  result.centroids = seed_plus_plus(points, k, rng);
  result.assignment.assign(static_cast<std::size_t>(n), 0);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int c = 0; c < k; ++c) {
        const double dist = (points.col(i) - result.centroids.col(c)).squaredNorm();
        if (dist < best) {
          best = dist;
          arg = c;
        }
      }
      result.assignment[static_cast<std::size_t>(i)] = arg;
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(points.rows(), k);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = result.assignment[static_cast<std::size_t>(i)];
      sums.col(c) += points.col(i);
      counts[c] += 1.0;
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0.0) continue;
      const Eigen::VectorXd next = sums.col(c) / counts[c];
      shift = std::max(shift, (next - result.centroids.col(c)).norm());
      result.centroids.col(c) = next;
    }
    result.iterations = iter + 1;
    if (shift <= options.tolerance) break;
  }
  return result;
}

}  // namespace gld
