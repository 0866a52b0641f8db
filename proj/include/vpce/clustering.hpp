#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vpce/common.hpp"

namespace vpce {

struct KMeansOptions {
    std::size_t k = 10;
    std::uint64_t seed = 0;
    std::size_t max_iter = 300;
    /// Stop once (J_prev - J) / J_prev falls below this.
    double tol = 1e-6;
    /// Independent seeded runs; the lowest-inertia run is kept.
    std::size_t restarts = 1;
    unsigned workers = 0;
};

struct ClusterModel {
    Matrix centroids;                     ///< k x d
    std::vector<std::size_t> assignments; ///< one cluster index per sample
    double inertia = 0.0;                 ///< sum of squared distances to assigned centroids
    std::size_t k = 0;
    std::size_t iterations_run = 0;
    std::uint64_t seed = 0;
    /// Objective after every assignment step of the kept run.
    std::vector<double> inertia_history;

    std::size_t dim() const noexcept { return centroids.cols(); }
};

/// k-means++ seeding followed by Lloyd iterations.
///
/// Ties in the nearest-centroid search go to the lowest index. A cluster left
/// empty by an assignment step takes over the point farthest from its own
/// centroid (among clusters with more than one member). Results are
/// bit-identical for any `workers` value.
ClusterModel kmeans_fit(const Matrix& X, const KMeansOptions& opts);

/// Index of the nearest row of `centroids` (lowest index on ties).
std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> x);

/// Sum of squared distances of every sample to its assigned centroid.
double compute_inertia(const Matrix& X, const Matrix& centroids, std::span<const std::size_t> assignments);

/// Mean silhouette coefficient. Points in singleton clusters score 0, as does
/// any point with a = b = 0.
double silhouette(const Matrix& X, std::span<const std::size_t> assignments, unsigned workers = 0);

/// Davies-Bouldin index (lower is better). Centroids are the member means.
double davies_bouldin(const Matrix& X, std::span<const std::size_t> assignments);

/// Calinski-Harabasz index (higher is better).
double calinski_harabasz(const Matrix& X, std::span<const std::size_t> assignments);

}  // namespace vpce
