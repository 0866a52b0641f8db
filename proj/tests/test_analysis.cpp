#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "vpce/analysis.hpp"

using namespace vpce;

namespace {

std::vector<double> randvec(Rng& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

std::vector<Pose> grid_poses(double extent, double step) {
    std::vector<Pose> poses;
    for (double x = 0; x <= extent + 1e-9; x += step)
        for (double y = 0; y <= extent + 1e-9; y += step)
            for (std::size_t j = 0; j < kActionCount; ++j) poses.push_back({x, y, action_heading(j)});
    return poses;
}

}  // namespace

TEST_CASE("similarity measures agree with direct formulas") {
    Rng rng(1);
    for (int rep = 0; rep < 50; ++rep) {
        auto a = randvec(rng, 1 + rep % 17);
        auto b = randvec(rng, a.size(), 3.0);
        auto s = compare(a, b);
        CHECK(s.euclidean == doctest::Approx(oracle::euclidean(a, b)).epsilon(1e-12));
        REQUIRE(s.cosine);
        CHECK(*s.cosine == doctest::Approx(oracle::cosine(a, b)).epsilon(1e-12));
        if (a.size() > 1) {
            REQUIRE(s.pearson);
            CHECK(*s.pearson == doctest::Approx(oracle::pearson(a, b)).epsilon(1e-10));
        }
        auto r = compare(b, a);
        CHECK(r.euclidean == s.euclidean);
        CHECK(r.cosine == s.cosine);
    }
}

TEST_CASE("similarity edge cases") {
    std::vector<double> z = {0, 0, 0}, c = {2, 2, 2}, v = {1, 2, 3};
    auto s = compare(z, v);
    CHECK_FALSE(s.cosine);
    CHECK_FALSE(s.pearson);
    CHECK(s.euclidean == doctest::Approx(std::sqrt(14.0)));
    CHECK_FALSE(compare(c, v).pearson);
    CHECK(*compare(c, v).cosine == doctest::Approx(12.0 / (std::sqrt(12.0) * std::sqrt(14.0))));
    CHECK(*compare(v, v).cosine == doctest::Approx(1.0));
    CHECK(*compare(v, v).pearson == doctest::Approx(1.0));
    std::vector<double> neg = {-1, -2, -3};
    CHECK(*compare(v, neg).cosine == doctest::Approx(-1.0));
    std::vector<double> shorter = {1, 2};
    CHECK_THROWS_AS(compare(v, shorter), ValidationError);
}

TEST_CASE("t distribution tail matches numerical integration") {
    for (double dof : {1.0, 2.0, 3.5, 10.0, 47.0, 118.0, 500.0})
        for (double t : {0.0, 0.3, 1.0, 1.96, 2.5, 4.0, 9.0}) {
            double p = student_t_two_sided_p(t, dof);
            CHECK(p == doctest::Approx(oracle::t_two_sided_p(t, dof)).epsilon(1e-6));
            CHECK(student_t_two_sided_p(-t, dof) == p);
        }
    CHECK(student_t_two_sided_p(0.0, 5.0) == 1.0);
    CHECK(student_t_two_sided_p(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("two-sample t-test against the reference") {
    Rng rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        auto a = randvec(rng, 5 + rep);
        auto b = randvec(rng, 9 + 2 * rep, 1.0 + rep * 0.1);
        for (double& x : b) x += 0.4;
        for (bool welch : {false, true}) {
            auto got = students_t(a, b, welch);
            auto want = oracle::student(a, b, welch);
            CHECK(got.t_statistic == doctest::Approx(want.t).epsilon(1e-9));
            CHECK(got.dof == doctest::Approx(want.dof).epsilon(1e-9));
            CHECK(std::abs(got.p_value - want.p) < 1e-3);
            CHECK(got.group_sizes[0] == a.size());
            CHECK(got.welch == welch);
            auto swapped = students_t(b, a, welch);
            CHECK(swapped.t_statistic == doctest::Approx(-got.t_statistic).epsilon(1e-12));
            CHECK(swapped.p_value == doctest::Approx(got.p_value).epsilon(1e-12));
        }
    }
}

TEST_CASE("t-test on two well-separated samples") {
    std::vector<double> a = {1, 2, 3, 4, 5}, b = {11, 12, 13, 14, 15};
    auto r = students_t(a, b);
    CHECK(r.t_statistic == doctest::Approx(-10.0).epsilon(1e-14));
    CHECK(r.dof == 8.0);
    // t = 10 on 8 dof; the tail is 8.49e-6, not below 1e-6.
    CHECK(r.p_value == doctest::Approx(8.4881815276285e-06).epsilon(1e-9));
}

TEST_CASE("t-test degenerate inputs") {
    std::vector<double> a = {1, 1, 1}, b = {1, 1}, c = {2, 2, 2}, one = {1};
    auto r = students_t(a, b);
    CHECK(r.t_statistic == 0.0);
    CHECK(r.p_value == 1.0);
    CHECK_THROWS(students_t(a, c));
    CHECK_THROWS_AS(students_t(a, one), ValidationError);
    std::vector<double> bad = {1, std::nan(""), 2};
    CHECK_THROWS_AS(students_t(a, bad), ValidationError);
}

TEST_CASE("heading difference wraps around") {
    const double pi = std::numbers::pi;
    CHECK(heading_difference(0.1, 2 * pi - 0.1) == doctest::Approx(0.2));
    CHECK(heading_difference(0.0, pi) == doctest::Approx(pi));
    CHECK(heading_difference(1.0, 1.0) == 0.0);
    CHECK(heading_difference(action_heading(1), action_heading(7)) == doctest::Approx(pi / 2));
}

TEST_CASE("grouping predicates") {
    GroupingSpec spec;
    Pose ref{1, 1, 0};
    CHECK(in_group(Grouping::close_same, ref, {1.3, 1, 0}, spec));
    CHECK_FALSE(in_group(Grouping::close_same, ref, {1.3, 1, std::numbers::pi / 4}, spec));
    CHECK(in_group(Grouping::close_different, ref, {1.3, 1, std::numbers::pi / 2}, spec));
    CHECK(in_group(Grouping::distant_same, ref, {4, 1, 0}, spec));
    CHECK(in_group(Grouping::distant_different, ref, {4, 1, std::numbers::pi}, spec));
    CHECK_FALSE(in_group(Grouping::distant_same, ref, {2, 1, 0}, spec));
    CHECK_FALSE(in_group(Grouping::close_different, ref, {2, 1, std::numbers::pi}, spec));
    GroupingSpec bad;
    bad.far_radius = 0.4;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("sampled groups satisfy their predicates and are seeded") {
    auto poses = grid_poses(4.0, 0.25);
    GroupingSpec spec;
    spec.n_references = 50;
    auto s = sample_groupings(poses, spec, 7);
    REQUIRE(s.size() == 50);
    std::set<std::size_t> refs;
    for (const auto& g : s) {
        refs.insert(g.reference);
        for (int gi = 0; gi < 4; ++gi) {
            const auto& members = g.groups[gi];
            CHECK(members.size() == spec.group_size);
            CHECK(std::set<std::size_t>(members.begin(), members.end()).size() == members.size());
            for (auto m : members) {
                CHECK(m != g.reference);
                CHECK(in_group(static_cast<Grouping>(gi), poses[g.reference], poses[m], spec));
            }
        }
    }
    CHECK(refs.size() == 50);
    auto again = sample_groupings(poses, spec, 7);
    CHECK(again[3].groups[2] == s[3].groups[2]);
    auto other = sample_groupings(poses, spec, 8);
    CHECK(other[0].reference != s[0].reference);

    std::vector<Pose> tiny(poses.begin(), poses.begin() + 40);
    try {
        sample_groupings(tiny, spec, 1);
        FAIL("expected a throw");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("ran short") != std::string::npos);
    }
}

TEST_CASE("identical observations give perfect similarity in every group") {
    auto poses = grid_poses(4.0, 0.25);
    GroupingSpec spec;
    spec.n_references = 30;
    PlaceCellEnsemble ens;
    ens.cells = {{{0.0, 0.0}, 1.0, 1, false}, {{1.0, 1.0}, 2.0, 1, false}, {{3.0, 0.0}, 1.5, 1, false}};
    Matrix F(poses.size(), 2);
    for (std::size_t i = 0; i < F.rows(); ++i) F.row(i)[0] = 0.5;
    ExperimentOptions opts;
    opts.use_raw = true;
    auto r = grouping_experiment(ens, F, poses, spec, 3, opts);
    REQUIRE(r.rows.size() == 4);
    for (const auto& row : r.rows) {
        CHECK(*row.cosine == doctest::Approx(1.0));
        CHECK(*row.pearson == doctest::Approx(1.0));
        CHECK(*row.euclidean == 0.0);
        CHECK(row.n_samples == 30);
    }
    CHECK(r.row("Close-Same").label == "Close-Same");
    CHECK_THROWS(r.row("Nowhere"));
    opts.all_pairs = true;
    auto all = grouping_experiment(ens, F, poses, spec, 3, opts);
    CHECK(*all.rows[0].cosine == doctest::Approx(1.0));
    CHECK(all.rows[0].n_samples == 30);
}

TEST_CASE("grouping report averages reference-to-member similarity") {
    Rng rng(2);
    Matrix A(12, 4);
    for (std::size_t i = 0; i < 12; ++i)
        for (auto& v : A.row(i)) v = rng.uniform();
    GroupingSample s;
    s.reference = 0;
    for (int g = 0; g < 4; ++g) s.groups[g] = {1u + 2u * g, 2u + 2u * g};
    ExperimentOptions opts;
    opts.keep_pairs = true;
    auto r = grouping_report(A, std::vector<GroupingSample>{s}, opts);
    for (int g = 0; g < 4; ++g) {
        std::vector<double> ref(A.row(0).begin(), A.row(0).end());
        double want = 0;
        for (auto m : s.groups[g]) want += oracle::cosine(ref, {A.row(m).begin(), A.row(m).end()});
        CHECK(*r.rows[g].cosine == doctest::Approx(want / 2).epsilon(1e-12));
    }
    CHECK(r.pairs.size() == 4 * 3);  // every pair among reference + 2 members
    CHECK(pairs_csv(r).find("ref=0") != std::string::npos);
}

TEST_CASE("side comparison: same-side pairs and cross-side pairs") {
    WallPositions pos;
    pos.side_a = {{1, 1}, {1, 2}, {1, 3}};
    pos.side_b = {{3, 1}, {3, 2}, {3, 3}};
    Rng rng(6);
    Matrix a(3 * kActionCount, 6), b(3 * kActionCount, 6);
    for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t h = 0; h < kActionCount; ++h) {
            for (std::size_t j = 0; j < 6; ++j) {
                a.row(p * kActionCount + h)[j] = (j == h % 6 ? 1.0 : 0.1) + 0.01 * rng.uniform();
                b.row(p * kActionCount + h)[j] = (j == (h + 3) % 6 ? 1.0 : 0.1) + 0.01 * rng.uniform();
            }
        }
    auto w = compare_sides(pos, a, b);
    CHECK(w.same_cosine.size() == 2 * 3 * kActionCount);
    CHECK(w.cross_cosine.size() == 9 * kActionCount);
    CHECK(w.cosine_test.t_statistic > 0);
    CHECK(w.cosine_test.p_value < 1e-10);
    CHECK(w.euclidean_test.t_statistic < 0);
    CHECK(w.report.row("Same-Side").n_samples == w.same_cosine.size());
    auto summary = wall_summary("synthetic", w);
    CHECK(summary.find("cosine") != std::string::npos);

    Matrix short_b(3, 6);
    CHECK_THROWS_AS(compare_sides(pos, a, short_b), ValidationError);
}

TEST_CASE("wall and remap experiments check their preconditions") {
    PipelineContext ctx;
    ctx.render.image_width = 32;
    ctx.render.image_height = 24;
    PlaceCellEnsemble ens;
    ens.cells = {{std::vector<double>(multimodal_dim(32, 24, ctx.descriptor), 0.0), 1.0, 1, false},
                 {std::vector<double>(multimodal_dim(32, 24, ctx.descriptor), 0.1), 1.0, 1, false}};
    WallSampleSpec spec;
    CHECK_THROWS_AS(wall_experiment(ens, default_open_arena(), spec, ctx, 1), ValidationError);
    spec.wall_index = 5;
    CHECK_THROWS_AS(wall_experiment(ens, default_walled_arena(), spec, ctx, 1), ValidationError);
    spec.wall_index = 0;
    CHECK_THROWS_AS(remap_experiment(ens, default_open_arena(), default_walled_arena(), spec, ctx, 1),
                    ValidationError);
    CHECK_THROWS_AS(remap_experiment(ens, default_open_arena(), default_open_arena(), spec, ctx, 1),
                    ValidationError);
    WallSampleSpec bad;
    bad.min_offset = 0.7;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("wall positions sit on the requested sides with clearance") {
    auto arena = default_walled_arena();
    WallSampleSpec spec;
    const Wall& w = arena.walls[0];
    auto pos = sample_wall_positions(arena, w, spec, 5);
    REQUIRE(pos.side_a.size() == spec.positions_per_side);
    REQUIRE(pos.side_b.size() == spec.positions_per_side);
    auto side = [&](Point p) { return (w.b.x - w.a.x) * (p.y - w.a.y) - (w.b.y - w.a.y) * (p.x - w.a.x); };
    for (auto p : pos.side_a) {
        CHECK(side(p) > 0);
        CHECK(pose_is_valid(arena, {p.x, p.y, 0}, spec.clearance));
        double d = point_segment_distance(p, w.a, w.b);
        CHECK(d >= spec.min_offset - 1e-9);
        CHECK(d <= spec.max_offset + 1e-9);
    }
    for (auto p : pos.side_b) CHECK(side(p) < 0);
    auto again = sample_wall_positions(arena, w, spec, 5);
    CHECK(again.side_a[1].x == pos.side_a[1].x);
}

TEST_CASE("csv formatting") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0 / 3.0) == "0.3333333333");
    SimilarityReport r;
    GroupSimilarity g;
    g.label = "Close-Same";
    g.n_samples = 3;
    g.cosine = 0.5;
    g.euclidean = 2.0;
    r.rows.push_back(g);
    auto csv = similarity_csv(r, "mode", "add");
    CHECK(csv.find("mode,") == 0);
    CHECK(csv.find("add,Close-Same") != std::string::npos);
}
