#include <cfloat>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "vpce/ensemble.hpp"

using namespace vpce;

namespace {

Matrix gaussian(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Matrix X(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (auto& v : X.row(i)) v = rng.normal();
    return X;
}

oracle::Rows rows_of(const Matrix& m) {
    oracle::Rows out;
    for (std::size_t i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
    return out;
}

FeatureVector fv(std::vector<double> v, const std::string& hash = "h") {
    FeatureVector f;
    f.values = std::move(v);
    f.config_hash = hash;
    return f;
}

}  // namespace

TEST_CASE("alpha is the largest member distance to the centroid") {
    Matrix X = gaussian(80, 4, 1);
    auto model = kmeans_fit(X, {6, 2});
    auto ens = build_ensemble(model, X, {FeatureSource::multimodal, "h", "open"});
    REQUIRE(ens.size() == 6);
    oracle::Rows centers = rows_of(model.centroids);
    auto want = oracle::alphas(rows_of(X), model.assignments, centers);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(ens.cells[i].alpha == doctest::Approx(want[i]).epsilon(1e-12));
        CHECK(ens.cells[i].center == centers[i]);
        CHECK_FALSE(ens.cells[i].degenerate);
    }
    CHECK(ens.arena_id == "open");
    CHECK(ens.descriptor_config_hash == "h");
}

TEST_CASE("zero-spread clusters borrow the smallest positive alpha") {
    Matrix X(5, 1, {0, 0, 10, 11, 13});
    ClusterModel m;
    m.k = 2;
    m.centroids = Matrix(2, 1, {0, 12});
    m.assignments = {0, 0, 1, 1, 1};
    auto ens = build_ensemble(m, X);
    CHECK(ens.cells[0].degenerate);
    CHECK(ens.cells[0].alpha == 2.0);
    CHECK(ens.cells[1].alpha == 2.0);
    CHECK(ens.cells[0].member_count == 2);

    Matrix Y(2, 1, {3, 3});
    ClusterModel single;
    single.k = 1;
    single.centroids = Matrix(1, 1, {3});
    single.assignments = {0, 0};
    auto e1 = build_ensemble(single, Y);
    CHECK(e1.cells[0].alpha == kFallbackAlpha);
    CHECK(e1.cells[0].degenerate);
}

TEST_CASE("activation follows the Gaussian receptive field") {
    PlaceCellEnsemble ens;
    ens.descriptor_config_hash = "h";
    ens.cells = {{{0.0, 0.0}, 1.0, 1, false}, {{3.0, 4.0}, 5.0, 1, false}, {{100.0, 0.0}, 0.5, 1, false}};
    auto a = activate(ens, fv({0.0, 0.0}));
    CHECK(a.raw[0] == 1.0);
    CHECK(a.raw[1] == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(a.raw[2] == DBL_MIN);
    CHECK(a.normalized[0] == 1.0);
    CHECK(a.normalized[2] == 0.0);
    CHECK(a.normalized[1] == doctest::Approx((std::exp(-0.5) - DBL_MIN) / (1.0 - DBL_MIN)));
    for (double r : a.raw) CHECK(r > 0.0);

    auto b = activate(ens, fv({1.0, 0.0}));
    CHECK(b.raw[0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
}

TEST_CASE("a single place cell gives a degenerate pattern") {
    PlaceCellEnsemble ens;
    ens.descriptor_config_hash = "h";
    ens.cells = {{{1.0}, 1.0, 3, false}};
    auto a = activate(ens, fv({1.5}));
    CHECK(a.degenerate);
    CHECK(a.normalized == std::vector<double>{0.0});
    CHECK(a.raw[0] == doctest::Approx(std::exp(-0.125)));
}

TEST_CASE("activation validates its input") {
    PlaceCellEnsemble ens;
    ens.descriptor_config_hash = "h";
    ens.cells = {{{0.0, 0.0}, 1.0, 1, false}, {{1.0, 0.0}, 1.0, 1, false}};
    CHECK_THROWS_AS(activate(ens, fv({0.0})), ValidationError);
    CHECK_THROWS_AS(activate(ens, fv({0.0, std::nan("")})), ValidationError);
    try {
        activate(ens, fv({0.0, 0.0}, "other"));
        FAIL("expected a throw");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("different descriptor config") != std::string::npos);
    }
    auto ext = fv({0.0, 0.0});
    ext.source = FeatureSource::external;
    CHECK_THROWS_AS(activate(ens, ext), ValidationError);
    CHECK_NOTHROW(activate_values(ens, std::vector<double>{0.0, 0.0}));
    PlaceCellEnsemble empty;
    CHECK_THROWS_AS(activate(empty, fv({})), ValidationError);
}

TEST_CASE("batch activation is elementwise and names the failing element") {
    Matrix X = gaussian(60, 3, 9);
    auto ens = build_ensemble(kmeans_fit(X, {4, 1}), X, {FeatureSource::multimodal, "h", ""});
    std::vector<FeatureVector> batch;
    for (std::size_t i = 0; i < 10; ++i) batch.push_back(fv({X.row(i).begin(), X.row(i).end()}));
    auto out = activate_batch(ens, batch, 3);
    for (std::size_t i = 0; i < 10; ++i) CHECK(out[i].raw == activate(ens, batch[i]).raw);
    Matrix raw = activate_rows(ens, X.select_rows(std::vector<std::size_t>{0, 1, 2}), true, 2);
    CHECK(std::vector<double>(raw.row(2).begin(), raw.row(2).end()) == out[2].raw);

    batch[6].values.pop_back();
    batch[8].values.pop_back();
    try {
        activate_batch(ens, batch, 4);
        FAIL("expected a throw");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("batch element 6") != std::string::npos);
    }
}

TEST_CASE("build_ensemble rejects inconsistent models") {
    Matrix X = gaussian(10, 2, 3);
    auto m = kmeans_fit(X, {2, 1});
    auto bad = m;
    bad.assignments.pop_back();
    CHECK_THROWS_AS(build_ensemble(bad, X), ValidationError);
    bad = m;
    bad.assignments[0] = 5;
    CHECK_THROWS_AS(build_ensemble(bad, X), ValidationError);
    CHECK_THROWS_AS(build_ensemble(m, gaussian(10, 3, 3)), ValidationError);
}
