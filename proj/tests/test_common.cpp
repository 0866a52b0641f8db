#include <algorithm>
#include <atomic>
#include <numeric>
#include <stdexcept>

#include "doctest.h"
#include "vpce/common.hpp"

using namespace vpce;

TEST_CASE("matrix rows and selection") {
    Matrix m(3, 2, {1, 2, 3, 4, 5, 6});
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 2);
    CHECK(m.row(1)[0] == 3);
    std::vector<std::size_t> idx = {2, 0};
    Matrix s = m.select_rows(idx);
    CHECK(s.row(0)[1] == 6);
    CHECK(s.row(1)[0] == 1);
    CHECK_THROWS_AS(Matrix(2, 2, {1, 2, 3}), ValidationError);
}

TEST_CASE("squared_distance matches the naive sum for every tail length") {
    Rng rng(5);
    for (std::size_t n = 0; n < 13; ++n) {
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.normal();
            b[i] = rng.normal();
        }
        double naive = 0;
        for (std::size_t i = 0; i < n; ++i) naive += (a[i] - b[i]) * (a[i] - b[i]);
        CHECK(squared_distance(a, b) == doctest::Approx(naive).epsilon(1e-14));
        CHECK(distance(a, b) == doctest::Approx(std::sqrt(naive)).epsilon(1e-14));
    }
}

TEST_CASE("require_finite names the position") {
    std::vector<double> v = {0.0, 1.0, std::nan("")};
    try {
        require_finite(v, "probe");
        FAIL("expected a throw");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("position 2") != std::string::npos);
    }
}

TEST_CASE("fnv1a_hex known values") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("rng is seeded and stays in range") {
    Rng a(11), b(11), c(12);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        auto x = a.next_u64();
        CHECK(x == b.next_u64());
        differs |= x != c.next_u64();
    }
    CHECK(differs);
    Rng r(3);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        ++counts[r.below(7)];
    }
    for (int c7 : counts) CHECK(std::abs(c7 - 10000) < 600);
    CHECK_THROWS_AS(r.below(0), ValidationError);
}

TEST_CASE("shuffle is a seeded permutation") {
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    auto w = v;
    Rng r1(8), r2(8);
    r1.shuffle(v);
    r2.shuffle(w);
    CHECK(v == w);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("parallel_for covers every index once") {
    for (unsigned workers : {1u, 2u, 3u, 8u}) {
        std::vector<std::atomic<int>> hits(101);
        parallel_for(hits.size(), workers, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) ++hits[i];
        });
        for (auto& h : hits) CHECK(h.load() == 1);
    }
    parallel_for(0, 4, [](std::size_t, std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("parallel_for rethrows the lowest failing chunk") {
    try {
        parallel_for(8, 8, [](std::size_t b, std::size_t) {
            if (b >= 3) throw std::runtime_error("chunk " + std::to_string(b));
        });
        FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "chunk 3");
    }
}

TEST_CASE("error classes map onto exit codes") {
    CHECK(ValidationError("x").exit_code() == 2);
    CHECK(NumericError("x").exit_code() == 3);
    CHECK(IoError("x").exit_code() == 4);
}
