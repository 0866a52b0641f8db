#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "vpce/clustering.hpp"

using namespace vpce;

namespace {

oracle::Rows rows_of(const Matrix& m) {
    oracle::Rows out;
    for (std::size_t i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
    return out;
}

Matrix blobs(std::size_t per, std::size_t d, std::size_t k, double spread, std::uint64_t seed) {
    Rng rng(seed);
    Matrix X(per * k, d);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t i = 0; i < per; ++i) {
            auto r = X.row(c * per + i);
            for (std::size_t j = 0; j < d; ++j) r[j] = 10.0 * static_cast<double>((c + j) % k) + spread * rng.normal();
        }
    return X;
}

Matrix gaussian(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Matrix X(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (auto& v : X.row(i)) v = rng.normal();
    return X;
}

std::vector<std::size_t> labels_of(const ClusterModel& m) { return m.assignments; }

}  // namespace

TEST_CASE("k-means with k = n puts every point in its own cluster") {
    Matrix X = gaussian(9, 3, 1);
    auto m = kmeans_fit(X, {9, 4});
    CHECK(m.inertia == 0.0);
    auto s = m.assignments;
    std::sort(s.begin(), s.end());
    for (std::size_t i = 0; i < 9; ++i) CHECK(s[i] == i);
}

TEST_CASE("k-means with k = 1 returns the mean") {
    Matrix X = gaussian(40, 5, 2);
    auto m = kmeans_fit(X, {1, 3});
    auto mu = oracle::centroid(rows_of(X), [] {
        std::vector<std::size_t> v(40);
        for (std::size_t i = 0; i < 40; ++i) v[i] = i;
        return v;
    }());
    for (std::size_t j = 0; j < 5; ++j) CHECK(m.centroids.row(0)[j] == doctest::Approx(mu[j]).epsilon(1e-12));
    CHECK(m.inertia == doctest::Approx(oracle::inertia_of(rows_of(X), m.assignments)).epsilon(1e-12));
}

TEST_CASE("k-means rejects bad options") {
    Matrix X = gaussian(5, 2, 3);
    CHECK_THROWS_AS(kmeans_fit(X, {0}), ValidationError);
    CHECK_THROWS_AS(kmeans_fit(X, {6}), ValidationError);
    KMeansOptions o{2};
    o.max_iter = 0;
    CHECK_THROWS_AS(kmeans_fit(X, o), ValidationError);
    Matrix bad = X;
    bad.row(2)[1] = std::nan("");
    CHECK_THROWS(kmeans_fit(bad, {2}));
}

TEST_CASE("2-means reaches the exhaustive optimum on small sets") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        Matrix X = gaussian(seed % 2 ? 14 : 60, 2, 100 + seed);
        KMeansOptions o{2, seed};
        o.restarts = 10;
        auto m = kmeans_fit(X, o);
        double best = oracle::best_two_partition(rows_of(X));
        CHECK(m.inertia == doctest::Approx(best).epsilon(1e-9));
    }
}

TEST_CASE("separated blobs are recovered and the objective never rises") {
    Matrix X = blobs(30, 4, 5, 0.3, 7);
    auto m = kmeans_fit(X, {5, 1, 300, 0.0, 5});
    for (std::size_t c = 0; c < 5; ++c)
        for (std::size_t i = 1; i < 30; ++i) CHECK(m.assignments[c * 30 + i] == m.assignments[c * 30]);
    CHECK(m.inertia_history.size() >= 1);
    for (std::size_t i = 1; i < m.inertia_history.size(); ++i)
        CHECK(m.inertia_history[i] <= m.inertia_history[i - 1] * (1 + 1e-12));
    CHECK(m.inertia == doctest::Approx(compute_inertia(X, m.centroids, m.assignments)).epsilon(1e-12));
    CHECK(m.inertia == doctest::Approx(oracle::inertia_of(rows_of(X), m.assignments)).epsilon(1e-9));
    for (std::size_t i = 0; i < X.rows(); ++i) CHECK(nearest_centroid(m.centroids, X.row(i)) == m.assignments[i]);
}

TEST_CASE("k-means is seeded and worker-count independent") {
    Matrix X = gaussian(300, 7, 11);
    KMeansOptions o{12, 99};
    o.restarts = 2;
    o.workers = 1;
    auto a = kmeans_fit(X, o);
    o.workers = 4;
    auto b = kmeans_fit(X, o);
    CHECK(a.assignments == b.assignments);
    CHECK(a.centroids == b.centroids);
    CHECK(a.inertia == b.inertia);
    o.seed = 100;
    auto c = kmeans_fit(X, o);
    CHECK((c.assignments != a.assignments || c.inertia != a.inertia));
}

TEST_CASE("duplicate points never leave a cluster empty") {
    Matrix X(12, 2);
    for (std::size_t i = 0; i < 12; ++i) X.row(i)[0] = i < 10 ? 0.0 : 5.0;
    auto m = kmeans_fit(X, {4, 3});
    std::vector<std::size_t> sizes(4, 0);
    for (auto a : m.assignments) ++sizes[a];
    for (auto s : sizes) CHECK(s > 0);
}

TEST_CASE("cluster quality metrics agree with direct definitions") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        Matrix X = gaussian(50 + seed * 7, 3, 200 + seed);
        auto m = kmeans_fit(X, {2 + seed, seed});
        auto R = rows_of(X);
        CHECK(silhouette(X, m.assignments) == doctest::Approx(oracle::silhouette(R, m.assignments)).epsilon(1e-9));
        CHECK(davies_bouldin(X, m.assignments) ==
              doctest::Approx(oracle::davies_bouldin(R, m.assignments)).epsilon(1e-9));
        CHECK(calinski_harabasz(X, m.assignments) ==
              doctest::Approx(oracle::calinski_harabasz(R, m.assignments)).epsilon(1e-9));
        CHECK(silhouette(X, m.assignments, 1) == silhouette(X, m.assignments, 3));
    }
}

TEST_CASE("metric edge cases") {
    Matrix X = gaussian(10, 2, 5);
    std::vector<std::size_t> one(10, 0);
    CHECK_THROWS_AS(silhouette(X, one), ValidationError);
    CHECK_THROWS_AS(davies_bouldin(X, one), ValidationError);
    CHECK_THROWS_AS(calinski_harabasz(X, one), ValidationError);
    std::vector<std::size_t> all(10);
    for (std::size_t i = 0; i < 10; ++i) all[i] = i;
    CHECK(silhouette(X, all) == 0.0);
    CHECK_THROWS_AS(calinski_harabasz(X, all), ValidationError);
    std::vector<std::size_t> short_labels(9, 0);
    CHECK_THROWS_AS(silhouette(X, short_labels), ValidationError);

    // Two clusters sharing a centroid.
    Matrix Y(4, 1, {-1, 1, -2, 2});
    std::vector<std::size_t> lab = {0, 0, 1, 1};
    CHECK_THROWS_AS(davies_bouldin(Y, lab), NumericError);

    // Identical points in each cluster: zero within-cluster variance.
    Matrix Z(4, 1, {0, 0, 3, 3});
    CHECK_THROWS_AS(calinski_harabasz(Z, lab), NumericError);
    CHECK(silhouette(Z, lab) == doctest::Approx(1.0));
}

TEST_CASE("metrics are invariant to uniform scaling") {
    Matrix X = blobs(20, 3, 3, 1.0, 4);
    auto m = kmeans_fit(X, {3, 1});
    Matrix S = X;
    for (std::size_t i = 0; i < S.rows(); ++i)
        for (auto& v : S.row(i)) v *= 37.5;
    CHECK(silhouette(S, m.assignments) == doctest::Approx(silhouette(X, m.assignments)).epsilon(1e-12));
    CHECK(davies_bouldin(S, m.assignments) == doctest::Approx(davies_bouldin(X, m.assignments)).epsilon(1e-12));
    CHECK(calinski_harabasz(S, m.assignments) ==
          doctest::Approx(calinski_harabasz(X, m.assignments)).epsilon(1e-12));
}
