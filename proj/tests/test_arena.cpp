#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "vpce/arena.hpp"

using namespace vpce;

namespace {

ArenaSpec empty_arena(double w = 6.0, double h = 6.0) {
    ArenaSpec a;
    a.id = "empty";
    a.width = w;
    a.height = h;
    return a;
}

bool is_landmark_color(const ArenaSpec& a, Rgb c) {
    for (const auto& lm : a.landmarks) {
        if (lm.color == c) return true;
    }
    return false;
}

// Red-dominant after shading: red channel clearly above the others.
bool reddish(Rgb c) { return c.r > 2 * c.g && c.r > 2 * c.b && c.r > 40; }

}  // namespace

TEST_CASE("arena validation rejects bad geometry") {
    auto a = default_open_arena();
    CHECK_NOTHROW(a.validate());
    auto bad = a;
    bad.width = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = a;
    bad.landmarks[1].center = bad.landmarks[0].center;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = a;
    bad.walls.push_back({{1, 1}, {7, 1}, 0.1});
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = a;
    bad.landmarks[0].radius = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("default arenas carry eight distinctly coloured landmarks") {
    for (const auto& a : {default_open_arena(), default_walled_arena()}) {
        CHECK(a.landmarks.size() == 8);
        std::set<std::tuple<int, int, int>> colors;
        for (const auto& lm : a.landmarks) colors.insert({lm.color.r, lm.color.g, lm.color.b});
        CHECK(colors.size() == 8);
        CHECK_NOTHROW(a.validate());
    }
    CHECK(default_open_arena().walls.empty());
    CHECK(default_walled_arena().walls.size() == 2);
}

TEST_CASE("render: nothing in range gives a pure floor/ceiling split") {
    auto a = default_open_arena();
    RenderConfig cfg;
    cfg.max_view_distance = 0.5;
    Image img = render_pov(a, {3.0, 3.0, 0.3}, cfg);
    REQUIRE(img.width == 128);
    REQUIRE(img.height == 96);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            Rgb c = img.at(x, y);
            CHECK_FALSE(is_landmark_color(a, c));
            CHECK(c == (y < img.height / 2 ? a.ceiling_color : a.floor_color));
        }
    }
}

TEST_CASE("render: cylinder dead ahead fills the centre column only") {
    auto a = default_open_arena();
    RenderConfig cfg;
    // Landmark 0 (red) sits at (0.6, 0.6); stand 1 m east of it, facing west.
    Image img = render_pov(a, {1.6, 0.6, std::numbers::pi}, cfg);
    const int mid = img.width / 2;
    int red_center = 0, red_left = 0, red_right = 0;
    for (int y = 0; y < img.height; ++y) {
        red_center += reddish(img.at(mid, y));
        red_left += reddish(img.at(0, y));
        red_right += reddish(img.at(img.width - 1, y));
    }
    CHECK(red_center > img.height / 4);
    CHECK(red_left == 0);
    CHECK(red_right == 0);
}

TEST_CASE("render: mirrored scene gives a mirrored image") {
    ArenaSpec a = default_walled_arena();
    a.landmarks.resize(5);  // break the left/right symmetry of the layout
    ArenaSpec m = a;
    for (auto& lm : m.landmarks) lm.center.x = a.width - lm.center.x;
    for (auto& w : m.walls) {
        w.a.x = a.width - w.a.x;
        w.b.x = a.width - w.b.x;
    }
    RenderConfig cfg;
    const Pose poses[] = {{1.3, 2.1, std::numbers::pi / 2}, {4.4, 1.0, 3 * std::numbers::pi / 2}, {2.0, 5.0, std::numbers::pi / 2}};
    for (const auto& p : poses) {
        Pose q{a.width - p.x, p.y, std::numbers::pi - p.theta};
        if (q.theta < 0) q.theta += 2 * std::numbers::pi;
        Image l = render_pov(a, p, cfg);
        Image r = render_pov(m, q, cfg);
        // Mirrored coordinates (width - x) are not exact in binary, so a slab
        // edge may land one row off; colours and everything else must match.
        int exact = 0, edge_shift = 0, bad = 0;
        for (int x = 0; x < l.width; ++x) {
            const int xr = l.width - 1 - x;
            int slab_l = 0, slab_r = 0;
            for (int y = 0; y < l.height; ++y) {
                Rgb cl = l.at(x, y), cr = r.at(xr, y);
                exact += cl == cr;
                slab_l += !(cl == a.ceiling_color) && !(cl == a.floor_color);
                slab_r += !(cr == a.ceiling_color) && !(cr == a.floor_color);
            }
            const int mid = l.height / 2;
            if (!(l.at(x, mid) == r.at(xr, mid)) || std::abs(slab_l - slab_r) > 2) ++bad;
            edge_shift += slab_l != slab_r;
        }
        CHECK(bad == 0);
        CHECK(edge_shift <= 4);
        CHECK(exact >= l.width * l.height - 4);
    }
}

TEST_CASE("render is a pure function and rejects invalid poses") {
    auto a = default_walled_arena();
    RenderConfig cfg;
    Pose p{2.2, 3.7, 0.9};
    CHECK(render_pov(a, p, cfg) == render_pov(a, p, cfg));
    CHECK_THROWS_AS(render_pov(a, {0.6, 0.6, 0.0}, cfg), ValidationError);  // inside a landmark
    CHECK_THROWS_AS(render_pov(a, {3.0, 3.0, 0.0}, cfg), ValidationError);  // inside the divider
    CHECK_THROWS_AS(render_pov(a, {-1.0, 3.0, 0.0}, cfg), ValidationError);
    RenderConfig tiny = cfg;
    tiny.image_width = 8;
    CHECK_THROWS_AS(render_pov(a, p, tiny), ValidationError);
}

TEST_CASE("is_feasible: basic cases") {
    auto a = default_open_arena();
    ExplorationConfig cfg;
    for (std::size_t j = 0; j < kActionCount; ++j) CHECK(is_feasible(a, {3.0, 3.0, 0.0}, action_heading(j), cfg));
    CHECK_FALSE(is_feasible(a, {5.9, 3.0, 0.0}, 0.0, cfg));
    // Straight through the divider: both endpoints are clear, the path is not.
    auto w = default_walled_arena();
    ExplorationConfig wide = cfg;
    wide.step_length = 0.8;
    wide.clearance_radius = 0.05;
    CHECK_FALSE(is_feasible(w, {2.6, 3.0, 0.0}, 0.0, wide));
}

TEST_CASE("is_feasible agrees with dense swept-path sampling") {
    auto a = default_walled_arena();
    std::vector<oracle::Seg> walls;
    for (const auto& w : a.walls) walls.push_back({w.a.x, w.a.y, w.b.x, w.b.y, 0.5 * w.thickness});
    std::vector<oracle::Disc> discs;
    for (const auto& lm : a.landmarks) discs.push_back({lm.center.x, lm.center.y, lm.radius});
    ExplorationConfig cfg;
    Rng rng(2024);
    std::size_t decided = 0, agree = 0, feasible = 0;
    for (int trial = 0; trial < 30000; ++trial) {
        // Bias towards obstacles so grazing cases are common.
        Pose p;
        if (trial % 2 == 0) {
            const auto& w = a.walls[trial / 2 % a.walls.size()];
            double u = rng.uniform();
            p.x = w.a.x + u * (w.b.x - w.a.x) + rng.uniform(-0.6, 0.6);
            p.y = w.a.y + u * (w.b.y - w.a.y) + rng.uniform(-0.6, 0.6);
        } else {
            p.x = rng.uniform(0.0, a.width);
            p.y = rng.uniform(0.0, a.height);
        }
        if (!pose_is_valid(a, p, cfg.clearance_radius)) continue;
        double heading = trial % 3 == 0 ? action_heading(rng.below(8)) : rng.uniform(0.0, 2 * std::numbers::pi);
        double slack = oracle::swept_path_slack(p.x, p.y, heading, cfg.step_length, cfg.clearance_radius, a.width,
                                                a.height, walls, discs);
        // Within the sampling resolution the oracle cannot decide.
        if (std::abs(slack) < 1e-3) continue;
        ++decided;
        bool expected = slack > 0;
        feasible += expected;
        agree += is_feasible(a, p, heading, cfg) == expected;
    }
    CHECK(decided >= 10000);
    CHECK(feasible > decided / 10);
    CHECK(agree == decided);
}

TEST_CASE("explore: one guaranteed-feasible step gives eight headings at one position") {
    auto a = empty_arena();
    ExplorationConfig cfg;
    cfg.n_steps = 1;
    RenderConfig rcfg;
    rcfg.image_width = 32;
    rcfg.image_height = 24;
    // Pick a seed whose start pose is far enough from every boundary that any action is feasible.
    std::uint64_t seed = 0;
    for (;; ++seed) {
        cfg.rng_seed = seed;
        auto t = explore_trace(a, cfg);
        const double m = cfg.step_length + cfg.clearance_radius + 1e-9;
        if (t.start.x > m && t.start.x < a.width - m && t.start.y > m && t.start.y < a.height - m) break;
    }
    auto obs = explore(a, cfg, rcfg, 1);
    REQUIRE(obs.size() == 8);
    for (std::size_t j = 0; j < 8; ++j) {
        CHECK(obs[j].pose.x == obs[0].pose.x);
        CHECK(obs[j].pose.y == obs[0].pose.y);
        CHECK(obs[j].pose.theta == action_heading(j));
        CHECK(obs[j].step_index == 0);
        CHECK(obs[j].arena_id == "empty");
        CHECK(obs[j].image.rgb.size() == 3u * 32 * 24);
    }
}

TEST_CASE("explore is reproducible across runs and worker counts") {
    auto a = default_walled_arena();
    ExplorationConfig cfg;
    cfg.n_steps = 40;
    cfg.rng_seed = 99;
    RenderConfig rcfg;
    rcfg.image_width = 48;
    rcfg.image_height = 32;
    auto one = explore(a, cfg, rcfg, 1);
    auto again = explore(a, cfg, rcfg, 1);
    auto three = explore(a, cfg, rcfg, 3);
    REQUIRE(one.size() == again.size());
    REQUIRE(one.size() == three.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].pose == again[i].pose);
        CHECK(one[i].image == again[i].image);
        CHECK(one[i].image == three[i].image);
        CHECK(one[i].step_index == three[i].step_index);
    }
}

TEST_CASE("explore: captured poses always satisfy the pose invariants") {
    auto a = default_walled_arena();
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        ExplorationConfig cfg;
        cfg.n_steps = 200;
        cfg.rng_seed = seed;
        auto t = explore_trace(a, cfg);
        CHECK(t.attempted_steps == 200);
        CHECK(t.positions.size() == t.feasible_steps);
        for (const auto& p : t.positions) CHECK(pose_is_valid(a, {p.x, p.y, 0.0}, cfg.clearance_radius));
        CHECK(std::is_sorted(t.step_indices.begin(), t.step_indices.end()));
    }
}

TEST_CASE("explore: feasible-step fraction on the open arena at seed 42") {
    ExplorationConfig cfg;
    cfg.rng_seed = 42;
    auto t = explore_trace(default_open_arena(), cfg);
    const double fraction = static_cast<double>(t.feasible_steps) / static_cast<double>(cfg.n_steps);
    MESSAGE("feasible fraction = " << fraction);
    // Pinned from the measured run.
    CHECK(t.feasible_steps == 877);
}

TEST_CASE("explore: no valid start pose is an environment error") {
    ArenaSpec a = empty_arena(1.0, 1.0);
    a.landmarks.push_back({{0.5, 0.5}, 0.45, {255, 0, 0}});
    ExplorationConfig cfg;
    cfg.clearance_radius = 0.2;
    cfg.max_start_attempts = 100;
    CHECK_THROWS_AS(explore_trace(a, cfg), NumericError);
}

TEST_CASE("mutate_arena edits only the wall list") {
    auto open = default_open_arena();
    Wall w{{3.0, 1.2}, {3.0, 4.8}, 0.1};
    auto added = mutate_arena(open, AddWall{w});
    CHECK(added.walls.size() == 1);
    CHECK(open.walls.empty());
    auto back = mutate_arena(added, RemoveWall{0});
    CHECK(back == open);

    auto walled = default_walled_arena();
    CHECK(mutate_arena(walled, RemoveWall{0}).walls.size() == 1);
    CHECK_THROWS_AS(mutate_arena(walled, RemoveWall{2}), ValidationError);
    CHECK_THROWS_AS(mutate_arena(open, AddWall{{{0.3, 0.6}, {1.0, 0.6}, 0.1}}), ValidationError);
    CHECK_THROWS_AS(mutate_arena(open, AddWall{{{3.0, 3.0}, {7.0, 3.0}, 0.1}}), ValidationError);
}

TEST_CASE("single_wall_difference identifies the edit") {
    auto walled = default_walled_arena();
    auto removed = mutate_arena(walled, RemoveWall{1});
    auto edit = single_wall_difference(walled, removed);
    REQUIRE(std::holds_alternative<RemoveWall>(edit));
    CHECK(std::get<RemoveWall>(edit).index == 1);
    auto edit2 = single_wall_difference(removed, walled);
    REQUIRE(std::holds_alternative<AddWall>(edit2));
    CHECK(std::get<AddWall>(edit2).wall == walled.walls[1]);
    CHECK_THROWS_AS(single_wall_difference(walled, walled), ValidationError);
    auto other = walled;
    other.width = 7.0;
    CHECK_THROWS_AS(single_wall_difference(walled, other), ValidationError);
}

TEST_CASE("segment distances") {
    CHECK(point_segment_distance({0, 1}, {-1, 0}, {1, 0}) == doctest::Approx(1.0));
    CHECK(point_segment_distance({3, 0}, {-1, 0}, {1, 0}) == doctest::Approx(2.0));
    CHECK(segment_segment_distance({0, -1}, {0, 1}, {-1, 0}, {1, 0}) == 0.0);
    CHECK(segment_segment_distance({0, 1}, {1, 1}, {0, 0}, {1, 0}) == doctest::Approx(1.0));
}
