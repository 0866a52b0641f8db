#include "vpce/arena.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vpce {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool inside_bounds(const ArenaSpec& arena, Point p) noexcept {
    return p.x >= 0.0 && p.x <= arena.width && p.y >= 0.0 && p.y <= arena.height;
}

double cross(Point o, Point a, Point b) noexcept {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(Point p, Point a, Point b) noexcept {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

bool segments_intersect(Point p0, Point p1, Point q0, Point q1) noexcept {
    double d1 = cross(q0, q1, p0);
    double d2 = cross(q0, q1, p1);
    double d3 = cross(p0, p1, q0);
    double d4 = cross(p0, p1, q1);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
    if (d1 == 0 && on_segment(p0, q0, q1)) return true;
    if (d2 == 0 && on_segment(p1, q0, q1)) return true;
    if (d3 == 0 && on_segment(q0, p0, p1)) return true;
    if (d4 == 0 && on_segment(q1, p0, p1)) return true;
    return false;
}

// Smallest s > 0 with |origin + s*dir - center| = radius, origin outside the circle.
double ray_circle(Point origin, Point dir, Point center, double radius) noexcept {
    const double inf = std::numeric_limits<double>::infinity();
    double ox = origin.x - center.x;
    double oy = origin.y - center.y;
    double a = dir.x * dir.x + dir.y * dir.y;
    double half_b = ox * dir.x + oy * dir.y;
    double c = ox * ox + oy * oy - radius * radius;
    double disc = half_b * half_b - a * c;
    if (disc < 0.0) return inf;
    double s = (-half_b - std::sqrt(disc)) / a;
    return s > 0.0 ? s : inf;
}

// Smallest s > 0 where the ray crosses segment [a, b].
double ray_segment(Point origin, Point dir, Point a, Point b) noexcept {
    const double inf = std::numeric_limits<double>::infinity();
    double ex = b.x - a.x;
    double ey = b.y - a.y;
    double denom = dir.x * ey - dir.y * ex;
    if (denom == 0.0) return inf;
    double wx = a.x - origin.x;
    double wy = a.y - origin.y;
    double s = (wx * ey - wy * ex) / denom;
    double u = (wx * dir.y - wy * dir.x) / denom;
    if (s <= 0.0 || u < 0.0 || u > 1.0) return inf;
    return s;
}

// Capsule = segment swept by a disc of radius thickness/2.
double ray_wall(Point origin, Point dir, const Wall& w) noexcept {
    double r = 0.5 * w.thickness;
    double best = std::min(ray_circle(origin, dir, w.a, r), ray_circle(origin, dir, w.b, r));
    double ex = w.b.x - w.a.x;
    double ey = w.b.y - w.a.y;
    double len = std::sqrt(ex * ex + ey * ey);
    if (len > 0.0) {
        double nx = -ey / len * r;
        double ny = ex / len * r;
        best = std::min(best, ray_segment(origin, dir, {w.a.x + nx, w.a.y + ny}, {w.b.x + nx, w.b.y + ny}));
        best = std::min(best, ray_segment(origin, dir, {w.a.x - nx, w.a.y - ny}, {w.b.x - nx, w.b.y - ny}));
    }
    return best;
}

double ray_boundary(const ArenaSpec& arena, Point origin, Point dir) noexcept {
    double s = std::numeric_limits<double>::infinity();
    if (dir.x > 0.0) s = std::min(s, (arena.width - origin.x) / dir.x);
    if (dir.x < 0.0) s = std::min(s, -origin.x / dir.x);
    if (dir.y > 0.0) s = std::min(s, (arena.height - origin.y) / dir.y);
    if (dir.y < 0.0) s = std::min(s, -origin.y / dir.y);
    return s;
}

std::uint8_t shade(std::uint8_t c, double factor) noexcept {
    double v = std::floor(static_cast<double>(c) * factor + 0.5);
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

bool disc_clear(const ArenaSpec& arena, Point p, double clearance) noexcept {
    for (const auto& lm : arena.landmarks) {
        if (std::hypot(p.x - lm.center.x, p.y - lm.center.y) < lm.radius + clearance) return false;
    }
    for (const auto& w : arena.walls) {
        if (point_segment_distance(p, w.a, w.b) < 0.5 * w.thickness + clearance) return false;
    }
    return true;
}

}  // namespace

double point_segment_distance(Point p, Point a, Point b) noexcept {
    double ex = b.x - a.x;
    double ey = b.y - a.y;
    double len2 = ex * ex + ey * ey;
    double t = 0.0;
    if (len2 > 0.0) {
        t = ((p.x - a.x) * ex + (p.y - a.y) * ey) / len2;
        t = std::clamp(t, 0.0, 1.0);
    }
    return std::hypot(p.x - (a.x + t * ex), p.y - (a.y + t * ey));
}

double segment_segment_distance(Point p0, Point p1, Point q0, Point q1) noexcept {
    if (segments_intersect(p0, p1, q0, q1)) return 0.0;
    return std::min({point_segment_distance(p0, q0, q1), point_segment_distance(p1, q0, q1),
                     point_segment_distance(q0, p0, p1), point_segment_distance(q1, p0, p1)});
}

void ArenaSpec::validate() const {
    if (!(width > 0.0) || !(height > 0.0)) throw ValidationError("arena width and height must be positive");
    for (std::size_t i = 0; i < walls.size(); ++i) {
        const auto& w = walls[i];
        if (!inside_bounds(*this, w.a) || !inside_bounds(*this, w.b)) {
            throw ValidationError("wall " + std::to_string(i) + " has an endpoint outside the arena");
        }
        if (!(w.thickness > 0.0)) throw ValidationError("wall " + std::to_string(i) + " needs positive thickness");
    }
    for (std::size_t i = 0; i < landmarks.size(); ++i) {
        const auto& lm = landmarks[i];
        if (!inside_bounds(*this, lm.center)) {
            throw ValidationError("landmark " + std::to_string(i) + " center lies outside the arena");
        }
        if (!(lm.radius > 0.0)) throw ValidationError("landmark " + std::to_string(i) + " needs positive radius");
        for (std::size_t j = 0; j < i; ++j) {
            const auto& other = landmarks[j];
            double d = std::hypot(lm.center.x - other.center.x, lm.center.y - other.center.y);
            if (!(d > lm.radius + other.radius)) {
                throw ValidationError("landmarks " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
            }
        }
    }
}

double ArenaSpec::diagonal() const noexcept { return std::hypot(width, height); }

void ExplorationConfig::validate() const {
    if (!(step_length > 0.0)) throw ValidationError("step_length must be positive");
    if (!(bias_weight >= 0.0 && bias_weight < 1.0)) throw ValidationError("bias_weight must lie in [0, 1)");
    if (n_steps < 1) throw ValidationError("n_steps must be at least 1");
    if (!(clearance_radius >= 0.0)) throw ValidationError("clearance_radius must be non-negative");
    if (max_start_attempts < 1) throw ValidationError("max_start_attempts must be at least 1");
}

void RenderConfig::validate() const {
    if (image_width < 16 || image_height < 16) throw ValidationError("image dimensions must be at least 16 px");
    if (!(horizontal_fov > 0.0 && horizontal_fov < std::numbers::pi)) {
        throw ValidationError("horizontal_fov must lie in (0, pi)");
    }
    if (!(shading >= 0.0)) throw ValidationError("shading must be non-negative");
    if (!(surface_height > 0.0)) throw ValidationError("surface_height must be positive");
}

void Image::validate() const {
    if (width <= 0 || height <= 0) throw ValidationError("image dimensions must be positive");
    if (rgb.size() != 3 * static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ValidationError("image buffer length " + std::to_string(rgb.size()) + " does not match " +
                              std::to_string(width) + "x" + std::to_string(height) + " RGB");
    }
}

bool pose_is_valid(const ArenaSpec& arena, const Pose& pose, double clearance) {
    Point p{pose.x, pose.y};
    if (!(pose.x >= clearance && pose.x <= arena.width - clearance && pose.y >= clearance &&
          pose.y <= arena.height - clearance)) {
        return false;
    }
    return disc_clear(arena, p, clearance);
}

Image render_pov(const ArenaSpec& arena, const Pose& pose, const RenderConfig& cfg) {
    cfg.validate();
    if (!pose_is_valid(arena, pose)) {
        throw ValidationError("pose (" + std::to_string(pose.x) + ", " + std::to_string(pose.y) +
                              ") is outside the arena or inside an obstacle");
    }
    const int w = cfg.image_width;
    const int h = cfg.image_height;
    const double max_view = cfg.max_view_distance > 0.0 ? cfg.max_view_distance : arena.diagonal();
    const double plane = std::tan(0.5 * cfg.horizontal_fov);
    const double focal = 0.5 * static_cast<double>(w) / plane;
    const Point origin{pose.x, pose.y};
    const Point forward{std::cos(pose.theta), std::sin(pose.theta)};
    const Point right{forward.y, -forward.x};
    const double horizon = 0.5 * static_cast<double>(h);

    Image img(w, h);
    for (int col = 0; col < w; ++col) {
        // Pinhole camera: dir . forward == 1, so the ray parameter is the perpendicular depth.
        double cam = (2.0 * col + 1.0 - w) / static_cast<double>(w);
        Point dir{forward.x + cam * plane * right.x, forward.y + cam * plane * right.y};
        double dir_len = std::sqrt(dir.x * dir.x + dir.y * dir.y);

        double depth = ray_boundary(arena, origin, dir);
        Rgb color = arena.boundary_color;
        for (const auto& lm : arena.landmarks) {
            double s = ray_circle(origin, dir, lm.center, lm.radius);
            if (s < depth) {
                depth = s;
                color = lm.color;
            }
        }
        for (const auto& wall : arena.walls) {
            double s = ray_wall(origin, dir, wall);
            if (s < depth) {
                depth = s;
                color = arena.wall_color;
            }
        }

        double range = depth * dir_len;
        double top = horizon;
        double bottom = horizon;
        if (std::isfinite(depth) && range <= max_view) {
            double half = 0.5 * focal * cfg.surface_height / depth;
            top = horizon - half;
            bottom = horizon + half;
            double factor = 1.0 / (1.0 + cfg.shading * range);
            color = {shade(color.r, factor), shade(color.g, factor), shade(color.b, factor)};
        }
        for (int row = 0; row < h; ++row) {
            double yc = static_cast<double>(row) + 0.5;
            if (yc >= top && yc < bottom) {
                img.set(col, row, color);
            } else if (yc < horizon) {
                img.set(col, row, arena.ceiling_color);
            } else {
                img.set(col, row, arena.floor_color);
            }
        }
    }
    return img;
}

bool is_feasible(const ArenaSpec& arena, const Pose& pose, double heading, const ExplorationConfig& cfg) {
    const double r = cfg.clearance_radius;
    const Point from{pose.x, pose.y};
    const Point to{pose.x + cfg.step_length * std::cos(heading), pose.y + cfg.step_length * std::sin(heading)};
    // The box is convex, so checking both endpoints covers the whole path.
    for (Point p : {from, to}) {
        if (!(p.x >= r && p.x <= arena.width - r && p.y >= r && p.y <= arena.height - r)) return false;
    }
    for (const auto& lm : arena.landmarks) {
        if (point_segment_distance(lm.center, from, to) < lm.radius + r) return false;
    }
    for (const auto& w : arena.walls) {
        if (segment_segment_distance(from, to, w.a, w.b) < 0.5 * w.thickness + r) return false;
    }
    return true;
}

ExplorationTrace explore_trace(const ArenaSpec& arena, const ExplorationConfig& cfg) {
    arena.validate();
    cfg.validate();
    Rng rng(cfg.rng_seed);
    ExplorationTrace trace;

    bool placed = false;
    for (std::size_t attempt = 0; attempt < cfg.max_start_attempts; ++attempt) {
        Pose p{rng.uniform(cfg.clearance_radius, arena.width - cfg.clearance_radius),
               rng.uniform(cfg.clearance_radius, arena.height - cfg.clearance_radius), 0.0};
        if (pose_is_valid(arena, p, cfg.clearance_radius)) {
            p.theta = rng.uniform() * kTwoPi;
            trace.start = p;
            placed = true;
            break;
        }
    }
    if (!placed) {
        throw NumericError("no feasible start pose found after " + std::to_string(cfg.max_start_attempts) +
                           " attempts");
    }

    Pose pose = trace.start;
    std::size_t prev = rng.below(kActionCount);
    const double total = 1.0 + cfg.bias_weight;
    for (std::size_t step = 0; step < cfg.n_steps; ++step) {
        ++trace.attempted_steps;
        // Uniform over the eight actions with bias_weight extra mass on prev.
        double u = rng.uniform() * total;
        std::size_t action = kActionCount - 1;
        double acc = 0.0;
        for (std::size_t j = 0; j < kActionCount; ++j) {
            acc += 1.0 / kActionCount + (j == prev ? cfg.bias_weight : 0.0);
            if (u < acc) {
                action = j;
                break;
            }
        }
        double heading = action_heading(action);
        if (!is_feasible(arena, pose, heading, cfg)) continue;
        pose.theta = heading;
        pose.x += cfg.step_length * std::cos(heading);
        pose.y += cfg.step_length * std::sin(heading);
        trace.positions.push_back({pose.x, pose.y});
        trace.step_indices.push_back(step);
        ++trace.feasible_steps;
        prev = action;
    }
    return trace;
}

std::vector<Observation> capture_positions(const ArenaSpec& arena, std::span<const Point> positions,
                                           const RenderConfig& rcfg, unsigned workers) {
    rcfg.validate();
    std::vector<Observation> out(positions.size() * kActionCount);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (std::size_t j = 0; j < kActionCount; ++j) {
            auto& o = out[i * kActionCount + j];
            o.pose = {positions[i].x, positions[i].y, action_heading(j)};
            o.arena_id = arena.id;
        }
    }
    parallel_for(out.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i].image = render_pov(arena, out[i].pose, rcfg);
    });
    return out;
}

std::vector<Observation> explore(const ArenaSpec& arena, const ExplorationConfig& cfg, const RenderConfig& rcfg,
                                 unsigned workers) {
    ExplorationTrace trace = explore_trace(arena, cfg);
    auto out = capture_positions(arena, trace.positions, rcfg, workers);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].step_index = trace.step_indices[i / kActionCount];
    return out;
}

ArenaSpec mutate_arena(const ArenaSpec& arena, const ArenaEdit& edit) {
    ArenaSpec out = arena;
    if (const auto* add = std::get_if<AddWall>(&edit)) {
        const Wall& w = add->wall;
        if (!inside_bounds(arena, w.a) || !inside_bounds(arena, w.b)) {
            throw ValidationError("added wall has an endpoint outside the arena");
        }
        if (!(w.thickness > 0.0)) throw ValidationError("added wall needs positive thickness");
        for (std::size_t i = 0; i < arena.landmarks.size(); ++i) {
            const auto& lm = arena.landmarks[i];
            if (point_segment_distance(lm.center, w.a, w.b) < lm.radius + 0.5 * w.thickness) {
                throw ValidationError("added wall overlaps landmark " + std::to_string(i));
            }
        }
        out.walls.push_back(w);
    } else {
        std::size_t idx = std::get<RemoveWall>(edit).index;
        if (idx >= arena.walls.size()) {
            throw ValidationError("wall index " + std::to_string(idx) + " out of range (arena has " +
                                  std::to_string(arena.walls.size()) + " walls)");
        }
        out.walls.erase(out.walls.begin() + static_cast<std::ptrdiff_t>(idx));
    }
    return out;
}

ArenaEdit single_wall_difference(const ArenaSpec& before, const ArenaSpec& after) {
    ArenaSpec b = before;
    ArenaSpec a = after;
    b.walls.clear();
    a.walls.clear();
    b.id = a.id;
    if (!(a == b)) throw ValidationError("arenas differ in more than their wall lists");
    const auto& wb = before.walls;
    const auto& wa = after.walls;
    if (wa.size() == wb.size() + 1) {
        for (std::size_t i = 0; i < wa.size(); ++i) {
            auto rest = wa;
            rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
            if (rest == wb) return AddWall{wa[i]};
        }
    } else if (wb.size() == wa.size() + 1) {
        for (std::size_t i = 0; i < wb.size(); ++i) {
            auto rest = wb;
            rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
            if (rest == wa) return RemoveWall{i};
        }
    }
    throw ValidationError("arenas must differ by exactly one wall");
}

ArenaSpec default_open_arena() {
    ArenaSpec a;
    a.id = "open";
    a.width = 6.0;
    a.height = 6.0;
    a.landmarks = {
        {{0.6, 0.6}, 0.15, {220, 40, 40}},   {{3.0, 0.45}, 0.15, {240, 150, 20}},
        {{5.4, 0.6}, 0.15, {230, 220, 30}},  {{5.55, 3.0}, 0.15, {40, 190, 60}},
        {{5.4, 5.4}, 0.15, {30, 200, 210}},  {{3.0, 5.55}, 0.15, {40, 70, 220}},
        {{0.6, 5.4}, 0.15, {150, 50, 210}},  {{0.45, 3.0}, 0.15, {230, 80, 170}},
    };
    return a;
}

ArenaSpec default_walled_arena() {
    ArenaSpec a = default_open_arena();
    a.id = "walled";
    a.walls = {
        {{3.0, 1.2}, {3.0, 4.8}, 0.1},
        {{4.2, 3.0}, {5.0, 3.0}, 0.1},
    };
    return a;
}

}  // namespace vpce
