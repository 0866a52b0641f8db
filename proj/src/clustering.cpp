#include "vpce/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace vpce {

namespace {

void check_input(const Matrix& X, std::span<const std::size_t> assignments) {
    if (assignments.size() != X.rows()) {
        throw ValidationError("assignment count " + std::to_string(assignments.size()) + " does not match " +
                              std::to_string(X.rows()) + " samples");
    }
}

// Cluster sizes for labels 0..max; every label must be used.
std::vector<std::size_t> cluster_sizes(std::span<const std::size_t> assignments) {
    std::size_t k = 0;
    for (auto a : assignments) k = std::max(k, a + 1);
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assignments) ++sizes[a];
    for (std::size_t c = 0; c < k; ++c) {
        if (sizes[c] == 0) throw ValidationError("cluster " + std::to_string(c) + " is empty");
    }
    return sizes;
}

Matrix member_means(const Matrix& X, std::span<const std::size_t> assignments, std::span<const std::size_t> sizes) {
    Matrix mu(sizes.size(), X.cols());
    for (std::size_t i = 0; i < X.rows(); ++i) {
        auto dst = mu.row(assignments[i]);
        auto src = X.row(i);
        for (std::size_t j = 0; j < X.cols(); ++j) dst[j] += src[j];
    }
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        for (double& v : mu.row(c)) v /= static_cast<double>(sizes[c]);
    }
    return mu;
}

struct Assignment {
    std::vector<std::size_t> labels;
    std::vector<double> dist2;
};

Assignment assign_all(const Matrix& X, const Matrix& centroids, unsigned workers) {
    Assignment a;
    a.labels.resize(X.rows());
    a.dist2.resize(X.rows());
    parallel_for(X.rows(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            auto x = X.row(i);
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t c = 0; c < centroids.rows(); ++c) {
                double d = squared_distance(x, centroids.row(c));
                if (d < best) {
                    best = d;
                    arg = c;
                }
            }
            a.labels[i] = arg;
            a.dist2[i] = best;
        }
    });
    return a;
}

Matrix kmeanspp_init(const Matrix& X, std::size_t k, Rng& rng) {
    const std::size_t n = X.rows();
    Matrix centroids(k, X.cols());
    std::vector<bool> chosen(n, false);
    std::size_t first = rng.below(n);
    chosen[first] = true;
    std::copy(X.row(first).begin(), X.row(first).end(), centroids.row(0).begin());
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(X.row(i), X.row(first));

    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick = n;
        if (total > 0.0) {
            double u = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (d2[i] > 0.0 && u < acc) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) {
                // u landed in the rounding slack at the top; take the last positive-weight point.
                for (std::size_t i = n; i-- > 0;) {
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        } else {
            // Every remaining point duplicates a chosen centre.
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < n; ++i) {
                if (!chosen[i]) free.push_back(i);
            }
            pick = free[rng.below(free.size())];
        }
        chosen[pick] = true;
        std::copy(X.row(pick).begin(), X.row(pick).end(), centroids.row(c).begin());
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(X.row(i), X.row(pick)));
    }
    return centroids;
}

// Gives every empty cluster the point farthest from its centroid, taken from a
// cluster that can spare it.
void repair_empty(const Matrix& X, Matrix& centroids, Assignment& a) {
    const std::size_t k = centroids.rows();
    std::vector<std::size_t> sizes(k, 0);
    for (auto l : a.labels) ++sizes[l];
    for (std::size_t c = 0; c < k; ++c) {
        if (sizes[c] != 0) continue;
        std::size_t far = X.rows();
        double far_d = -1.0;
        for (std::size_t i = 0; i < X.rows(); ++i) {
            if (sizes[a.labels[i]] > 1 && a.dist2[i] > far_d) {
                far_d = a.dist2[i];
                far = i;
            }
        }
        --sizes[a.labels[far]];
        ++sizes[c];
        a.labels[far] = c;
        a.dist2[far] = 0.0;
        std::copy(X.row(far).begin(), X.row(far).end(), centroids.row(c).begin());
    }
}

void update_centroids(const Matrix& X, Matrix& centroids, const std::vector<std::size_t>& labels, unsigned workers) {
    const std::size_t k = centroids.rows();
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
    parallel_for(k, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            auto dst = centroids.row(c);
            std::fill(dst.begin(), dst.end(), 0.0);
            for (auto i : members[c]) {
                auto src = X.row(i);
                for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
            }
            const double inv = 1.0 / static_cast<double>(members[c].size());
            for (double& v : dst) v *= inv;
        }
    });
}

double sum_in_order(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

ClusterModel lloyd(const Matrix& X, const KMeansOptions& opts, std::uint64_t run_seed) {
    Rng rng(run_seed);
    ClusterModel m;
    m.k = opts.k;
    m.seed = opts.seed;
    m.centroids = kmeanspp_init(X, opts.k, rng);

    Assignment a;
    std::vector<std::size_t> previous;
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        a = assign_all(X, m.centroids, opts.workers);
        repair_empty(X, m.centroids, a);
        double J = sum_in_order(a.dist2);
        m.inertia_history.push_back(J);
        m.iterations_run = it + 1;
        bool unchanged = a.labels == previous;
        if (unchanged || J == 0.0) break;
        if (it > 0) {
            double prev = m.inertia_history[it - 1];
            if ((prev - J) < opts.tol * prev) break;
        }
        if (it + 1 == opts.max_iter) break;
        update_centroids(X, m.centroids, a.labels, opts.workers);
        previous = a.labels;
    }
    m.assignments = std::move(a.labels);
    m.inertia = m.inertia_history.back();
    return m;
}

}  // namespace

ClusterModel kmeans_fit(const Matrix& X, const KMeansOptions& opts) {
    if (opts.k < 1) throw ValidationError("k must be at least 1");
    if (X.rows() < opts.k) {
        throw ValidationError("cannot form " + std::to_string(opts.k) + " clusters from " +
                              std::to_string(X.rows()) + " samples");
    }
    if (opts.max_iter < 1) throw ValidationError("max_iter must be at least 1");
    if (opts.restarts < 1) throw ValidationError("restarts must be at least 1");
    require_finite(X.data(), "k-means input");

    ClusterModel best;
    for (std::size_t r = 0; r < opts.restarts; ++r) {
        std::uint64_t run_seed = opts.seed + 0x9e3779b97f4a7c15ull * r;
        ClusterModel m = lloyd(X, opts, run_seed);
        if (r == 0 || m.inertia < best.inertia) best = std::move(m);
    }
    return best;
}

std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> x) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
        double d = squared_distance(x, centroids.row(c));
        if (d < best) {
            best = d;
            arg = c;
        }
    }
    return arg;
}

double compute_inertia(const Matrix& X, const Matrix& centroids, std::span<const std::size_t> assignments) {
    check_input(X, assignments);
    double s = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        if (assignments[i] >= centroids.rows()) throw ValidationError("assignment out of range");
        s += squared_distance(X.row(i), centroids.row(assignments[i]));
    }
    return s;
}

double silhouette(const Matrix& X, std::span<const std::size_t> assignments, unsigned workers) {
    check_input(X, assignments);
    const auto sizes = cluster_sizes(assignments);
    const std::size_t k = sizes.size();
    if (k < 2) throw ValidationError("silhouette is undefined for a single cluster");
    const std::size_t n = X.rows();
    std::vector<double> score(n, 0.0);
    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> sums(k);
        for (std::size_t i = begin; i < end; ++i) {
            std::fill(sums.begin(), sums.end(), 0.0);
            auto xi = X.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) sums[assignments[j]] += distance(xi, X.row(j));
            }
            const std::size_t own = assignments[i];
            if (sizes[own] == 1) continue;
            double a = sums[own] / static_cast<double>(sizes[own] - 1);
            double b = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                if (c != own) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
            }
            double denom = std::max(a, b);
            score[i] = denom > 0.0 ? (b - a) / denom : 0.0;
        }
    });
    return sum_in_order(score) / static_cast<double>(n);
}

double davies_bouldin(const Matrix& X, std::span<const std::size_t> assignments) {
    check_input(X, assignments);
    const auto sizes = cluster_sizes(assignments);
    const std::size_t k = sizes.size();
    if (k < 2) throw ValidationError("Davies-Bouldin index needs at least two clusters");
    const Matrix mu = member_means(X, assignments, sizes);
    std::vector<double> scatter(k, 0.0);
    for (std::size_t i = 0; i < X.rows(); ++i) scatter[assignments[i]] += distance(X.row(i), mu.row(assignments[i]));
    for (std::size_t c = 0; c < k; ++c) scatter[c] /= static_cast<double>(sizes[c]);

    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j == i) continue;
            double sep = distance(mu.row(i), mu.row(j));
            if (sep == 0.0) {
                throw NumericError("clusters " + std::to_string(std::min(i, j)) + " and " +
                                   std::to_string(std::max(i, j)) + " have coincident centroids");
            }
            worst = std::max(worst, (scatter[i] + scatter[j]) / sep);
        }
        total += worst;
    }
    return total / static_cast<double>(k);
}

double calinski_harabasz(const Matrix& X, std::span<const std::size_t> assignments) {
    check_input(X, assignments);
    const auto sizes = cluster_sizes(assignments);
    const std::size_t k = sizes.size();
    const std::size_t n = X.rows();
    if (k < 2) throw ValidationError("Calinski-Harabasz index is undefined for k = 1");
    if (k >= n) throw ValidationError("Calinski-Harabasz index is undefined for k = n");
    const Matrix mu = member_means(X, assignments, sizes);
    std::vector<double> grand(X.cols(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = X.row(i);
        for (std::size_t j = 0; j < X.cols(); ++j) grand[j] += r[j];
    }
    for (double& g : grand) g /= static_cast<double>(n);

    double between = 0.0;
    for (std::size_t c = 0; c < k; ++c) between += static_cast<double>(sizes[c]) * squared_distance(mu.row(c), grand);
    double within = 0.0;
    for (std::size_t i = 0; i < n; ++i) within += squared_distance(X.row(i), mu.row(assignments[i]));
    if (within == 0.0) throw NumericError("zero within-cluster variance");
    return (between / static_cast<double>(k - 1)) / (within / static_cast<double>(n - k));
}

}  // namespace vpce
