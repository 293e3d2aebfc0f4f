#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace visloop {

using Vector = std::vector<double>;

struct KMeansResult {
  std::vector<std::size_t> assignments;
  std::vector<Vector> centroids;
  // Within-cluster sum of squares after seeding, then after each iteration.
  std::vector<double> inertia_history;
  std::size_t iterations = 0;
  bool converged = false;

  double inertia() const { return inertia_history.empty() ? 0.0 : inertia_history.back(); }
};

// k-means++ seeding from a mt19937_64(seed), then Lloyd iterations until the
// assignment stops changing or max_iterations is reached. A cluster that loses
// all points keeps its previous centroid. Throws UsageError when k is 0 or
// exceeds the number of points, or when dimensions differ.
KMeansResult kmeans(const std::vector<Vector>& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations = 300);

double squared_distance(const Vector& a, const Vector& b);

double inertia(const std::vector<Vector>& points, const std::vector<std::size_t>& assignments,
               const std::vector<Vector>& centroids);

}  // namespace visloop
