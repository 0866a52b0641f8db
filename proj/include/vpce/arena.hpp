#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "vpce/common.hpp"

namespace vpce {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

/// A straight wall: the set of points within thickness/2 of segment [a, b].
struct Wall {
    Point a;
    Point b;
    double thickness = 0.1;
    friend bool operator==(const Wall&, const Wall&) = default;
};

/// Upright colored cylinder.
struct Landmark {
    Point center;
    double radius = 0.15;
    Rgb color;
    friend bool operator==(const Landmark&, const Landmark&) = default;
};

/// Rectangular arena [0,width]x[0,height] with interior walls and landmarks.
struct ArenaSpec {
    std::string id = "arena";
    double width = 6.0;
    double height = 6.0;
    std::vector<Wall> walls;
    std::vector<Landmark> landmarks;
    Rgb floor_color{96, 88, 80};
    Rgb ceiling_color{200, 205, 215};
    Rgb wall_color{150, 150, 150};
    Rgb boundary_color{185, 180, 170};

    /// Throws ValidationError on violated geometry (out of bounds, overlapping landmarks, ...).
    void validate() const;

    double diagonal() const noexcept;

    friend bool operator==(const ArenaSpec&, const ArenaSpec&) = default;
};

struct Pose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;  ///< radians in [0, 2pi)
    friend bool operator==(const Pose&, const Pose&) = default;
};

inline constexpr std::size_t kActionCount = 8;

/// Heading of action j: j * pi/4, with 0 along +x.
constexpr double action_heading(std::size_t j) noexcept {
    return static_cast<double>(j) * (std::numbers::pi / 4.0);
}

struct ExplorationConfig {
    double step_length = 0.3;
    std::size_t n_steps = 1000;
    /// Probability mass added to the previous action before renormalizing.
    double bias_weight = 0.2;
    std::uint64_t rng_seed = 42;
    double clearance_radius = 0.15;
    std::size_t max_start_attempts = 10000;

    void validate() const;
};

struct RenderConfig {
    int image_width = 128;
    int image_height = 96;
    double horizontal_fov = 1.3;
    /// <= 0 means "arena diagonal".
    double max_view_distance = 0.0;
    /// Surface color is scaled by 1 / (1 + shading * distance).
    double shading = 0.15;
    /// World height of walls and landmarks; the camera sits at half this height.
    double surface_height = 1.0;

    void validate() const;
};

/// Row-major interleaved RGB, 8 bits per channel.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    Image() = default;
    Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(3 * w * h), 0) {}

    Rgb at(int x, int y) const noexcept {
        std::size_t i = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x));
        return {rgb[i], rgb[i + 1], rgb[i + 2]};
    }
    void set(int x, int y, Rgb c) noexcept {
        std::size_t i = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x));
        rgb[i] = c.r;
        rgb[i + 1] = c.g;
        rgb[i + 2] = c.b;
    }
    /// Throws ValidationError unless rgb.size() == 3*width*height and both dims are positive.
    void validate() const;

    friend bool operator==(const Image&, const Image&) = default;
};

struct Observation {
    Pose pose;
    std::size_t step_index = 0;
    Image image;
    std::string arena_id;
};

/// True if (x, y) lies inside the arena and outside every wall and landmark
/// footprint grown by `clearance`.
bool pose_is_valid(const ArenaSpec& arena, const Pose& pose, double clearance = 0.0);

/// Column raycaster. Pure and deterministic; throws ValidationError for an
/// invalid pose.
Image render_pov(const ArenaSpec& arena, const Pose& pose, const RenderConfig& cfg);

/// Whether the clearance disc can sweep step_length along `heading` without
/// touching the boundary, a wall, or a landmark.
bool is_feasible(const ArenaSpec& arena, const Pose& pose, double heading, const ExplorationConfig& cfg);

/// Sequential part of the random-exploration policy: the capture positions.
struct ExplorationTrace {
    Pose start;
    std::vector<Point> positions;          ///< one per feasible step, in order
    std::vector<std::size_t> step_indices; ///< iteration at which each position was reached
    std::size_t feasible_steps = 0;
    std::size_t attempted_steps = 0;
};

ExplorationTrace explore_trace(const ArenaSpec& arena, const ExplorationConfig& cfg);

/// Runs the exploration policy and renders eight observations (one per
/// action heading) at every reached position. Rendering is spread over
/// `workers` threads; output is independent of the worker count.
std::vector<Observation> explore(const ArenaSpec& arena, const ExplorationConfig& cfg, const RenderConfig& rcfg,
                                 unsigned workers = 0);

/// Renders the eight headings at each given position, in position-major order.
std::vector<Observation> capture_positions(const ArenaSpec& arena, std::span<const Point> positions,
                                           const RenderConfig& rcfg, unsigned workers = 0);

struct AddWall {
    Wall wall;
};
struct RemoveWall {
    std::size_t index = 0;
};
using ArenaEdit = std::variant<AddWall, RemoveWall>;

/// Returns a copy of `arena` with one wall added (appended) or removed.
ArenaSpec mutate_arena(const ArenaSpec& arena, const ArenaEdit& edit);

/// Describes how `after` differs from `before` if they differ by exactly one
/// wall; throws ValidationError otherwise.
ArenaEdit single_wall_difference(const ArenaSpec& before, const ArenaSpec& after);

/// 6 m x 6 m, eight landmarks on a ring near the boundary, no interior walls.
ArenaSpec default_open_arena();
/// The open arena plus two interior walls. Wall 0 is the central divider.
ArenaSpec default_walled_arena();

double point_segment_distance(Point p, Point a, Point b) noexcept;
double segment_segment_distance(Point p0, Point p1, Point q0, Point q1) noexcept;

}  // namespace vpce
