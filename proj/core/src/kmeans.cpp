#include "visloop/kmeans.hpp"

#include <limits>
#include <random>
#include <string>

#include "visloop/errors.hpp"

namespace visloop {
namespace {

std::vector<Vector> seed_plus_plus(const std::vector<Vector>& points, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = points.size();
  std::vector<Vector> centroids;
  centroids.reserve(k);
  std::vector<bool> chosen(n, false);

  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t first = pick(rng);
  centroids.push_back(points[first]);
  chosen[first] = true;

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = squared_distance(points[i], centroids[0]);
  }
  while (centroids.size() < k) {
    double total = 0.0;
    for (double d : d2) {
      total += d;
    }
    std::size_t next = n;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) {
          continue;
        }
        target -= d2[i];
        next = i;
        if (target < 0.0) {
          break;
        }
      }
    }
    if (next == n) {
      // Remaining points coincide with centroids; take the first unused one.
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          next = i;
          break;
        }
      }
    }
    chosen[next] = true;
    centroids.push_back(points[next]);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
    }
  }
  return centroids;
}

// Nearest centroid; ties keep the current assignment, else the lower index.
bool assign(const std::vector<Vector>& points, const std::vector<Vector>& centroids,
            std::vector<std::size_t>& assignments) {
  bool changed = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t best = assignments[i];
    double best_d = best < centroids.size() ? squared_distance(points[i], centroids[best])
                                            : std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = squared_distance(points[i], centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (best != assignments[i]) {
      assignments[i] = best;
      changed = true;
    }
  }
  return changed;
}

void update(const std::vector<Vector>& points, const std::vector<std::size_t>& assignments,
            std::vector<Vector>& centroids) {
  const std::size_t dim = points.front().size();
  std::vector<Vector> sums(centroids.size(), Vector(dim, 0.0));
  std::vector<std::size_t> counts(centroids.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& sum = sums[assignments[i]];
    for (std::size_t d = 0; d < dim; ++d) {
      sum[d] += points[i][d];
    }
    ++counts[assignments[i]];
  }
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (counts[c] == 0) {
      continue;
    }
    for (std::size_t d = 0; d < dim; ++d) {
      centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
  }
}

}  // namespace

double squared_distance(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double inertia(const std::vector<Vector>& points, const std::vector<std::size_t>& assignments,
               const std::vector<Vector>& centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    total += squared_distance(points[i], centroids[assignments[i]]);
  }
  return total;
}

KMeansResult kmeans(const std::vector<Vector>& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations) {
  if (k == 0) {
    throw UsageError("k must be at least 1");
  }
  if (k > points.size()) {
    throw UsageError("k = " + std::to_string(k) + " exceeds the number of points (" +
                     std::to_string(points.size()) + ")");
  }
  const std::size_t dim = points.front().size();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != dim) {
      throw UsageError("point " + std::to_string(i) + " has dimension " + std::to_string(points[i].size()) +
                       ", expected " + std::to_string(dim));
    }
  }

  std::mt19937_64 rng(seed);
  KMeansResult result;
  result.centroids = seed_plus_plus(points, k, rng);
  result.assignments.assign(points.size(), k);
  assign(points, result.centroids, result.assignments);
  result.inertia_history.push_back(inertia(points, result.assignments, result.centroids));

  while (result.iterations < max_iterations) {
    update(points, result.assignments, result.centroids);
    const bool changed = assign(points, result.centroids, result.assignments);
    ++result.iterations;
    result.inertia_history.push_back(inertia(points, result.assignments, result.centroids));
    if (!changed) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace visloop
