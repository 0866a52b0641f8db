#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vpce/arena.hpp"

namespace vpce {

namespace fs = std::filesystem;

// Arena files are JSON:
//   { "id": "walled", "width": 6.0, "height": 6.0,
//     "floor_color": [r,g,b], "ceiling_color": [r,g,b],
//     "wall_color": [r,g,b], "boundary_color": [r,g,b],
//     "walls": [ {"a": [x,y], "b": [x,y], "thickness": t}, ... ],
//     "landmarks": [ {"center": [x,y], "radius": r, "color": [r,g,b]}, ... ] }
// Color and id fields are optional and default to the built-in palette.
std::string arena_to_json(const ArenaSpec& arena);
ArenaSpec arena_from_json(const std::string& text);
ArenaSpec load_arena(const fs::path& path);
void save_arena(const ArenaSpec& arena, const fs::path& path);

/// Binary PPM (P6, maxval 255).
void write_ppm(const Image& img, const fs::path& path);
Image read_ppm(const fs::path& path);
std::string encode_ppm(const Image& img);
Image decode_ppm(const std::string& bytes);

/// One manifest.jsonl record.
struct ManifestEntry {
    std::string key;  ///< file stem, unique within the dataset
    std::string file;
    Pose pose;
    std::size_t step_index = 0;
    std::string arena_id;
};

/// A dataset directory: manifest.jsonl plus one .ppm per observation.
struct Dataset {
    fs::path root;
    std::vector<ManifestEntry> entries;

    Image load_image(std::size_t i) const;
    /// Index of `key`, or throws ValidationError naming the key.
    std::size_t index_of(const std::string& key) const;
};

std::string observation_key(std::size_t index);

/// Writes observations in order as obs_000000.ppm, ... and the manifest.
Dataset write_dataset(const std::vector<Observation>& observations, const fs::path& dir);
Dataset read_dataset(const fs::path& dir);

std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, const std::string& text);

/// Raw little-endian float32 matrix, row-major.
void write_f32_matrix(const Matrix& m, const fs::path& path);
Matrix read_f32_matrix(const fs::path& path, std::size_t rows, std::size_t cols);

}  // namespace vpce
