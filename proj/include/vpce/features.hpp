#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "vpce/arena.hpp"
#include "vpce/common.hpp"

namespace vpce {

enum class FeatureSource { multimodal, external };

std::string to_string(FeatureSource s);
FeatureSource feature_source_from_string(const std::string& s);

struct FeatureVector {
    std::vector<double> values;
    FeatureSource source = FeatureSource::multimodal;
    std::string observation_ref;
    /// Digest of the settings that produced the vector; checked at activation.
    std::string config_hash;

    std::size_t dim() const noexcept { return values.size(); }
};

struct HogConfig {
    int cell_size = 8;          ///< pixels per cell side
    int block_size = 2;         ///< cells per block side
    int block_stride = 1;       ///< cells between neighbouring blocks
    int orientation_bins = 9;
    bool signed_gradients = false;
};

struct ColorHistogramConfig {
    int bins = 16;  ///< per channel
};

struct SpatialHistogramConfig {
    int grid_rows = 4;
    int grid_cols = 4;
    int intensity_bins = 8;
};

struct DescriptorConfig {
    HogConfig hog;
    ColorHistogramConfig color;
    SpatialHistogramConfig spatial;

    void validate() const;
    /// Stable textual form; feeds the config hash.
    std::string canonical() const;
};

/// Digest tying persisted features to the descriptor settings and image size
/// that produced them.
std::string descriptor_config_hash(const DescriptorConfig& cfg, int image_width, int image_height);
/// Digest for file-borne embeddings of the given dimension.
std::string external_config_hash(std::size_t dim);

/// Luma 0.299 R + 0.587 G + 0.114 B, row-major.
std::vector<double> grayscale(const Image& img);

/// Histogram of oriented gradients.
///
/// Central differences (border pixels replicated), per-pixel magnitude and
/// orientation, and per-cell orientation histograms with linear interpolation
/// between neighbouring bins. Bin b is centred on b * (range / bins), so a
/// purely horizontal gradient lands entirely in bin 0. Cells that do not fit
/// completely at the right/bottom edge are dropped. Each block of cells is
/// L2-normalised as v / sqrt(|v|^2 + 1e-12) and blocks are concatenated
/// row-major.
std::vector<double> hog(const Image& img, const HogConfig& cfg);
std::size_t hog_dim(int image_width, int image_height, const HogConfig& cfg);

/// Three concatenated per-channel histograms, each summing to 1.
std::vector<double> color_histogram(const Image& img, const ColorHistogramConfig& cfg);

/// Per-cell intensity histograms over a grid (cells may differ by one pixel),
/// each summing to 1, concatenated in row-major cell order.
std::vector<double> spatial_histogram(const Image& img, const SpatialHistogramConfig& cfg);

/// [hog | color | spatial], each block scaled to unit L2 norm unless all-zero.
FeatureVector extract_multimodal(const Image& img, const DescriptorConfig& cfg);
std::size_t multimodal_dim(int image_width, int image_height, const DescriptorConfig& cfg);

/// Extracts every image with `workers` threads; row i of the result is image i.
Matrix extract_batch(std::span<const Image> images, const DescriptorConfig& cfg, unsigned workers = 0);

// Embedding interchange format:
//   vpce-embeddings v1 dim=<D>
//   <manifest_key> <D space-separated decimal floats>
//   ...

/// Reads an embedding file. When `known_keys` is given, every row's key must
/// be in it.
std::vector<FeatureVector> load_external_embeddings(
    const std::filesystem::path& path, const std::unordered_set<std::string>* known_keys = nullptr);
std::vector<FeatureVector> parse_external_embeddings(
    const std::string& text, const std::unordered_set<std::string>* known_keys = nullptr);

/// Writes with round-trip precision; reading back yields identical doubles.
void write_external_embeddings(const std::vector<FeatureVector>& rows, const std::filesystem::path& path);
std::string format_external_embeddings(const std::vector<FeatureVector>& rows);

/// Reorders `rows` to follow `keys`; throws ValidationError naming the first
/// key without a row.
Matrix align_embeddings(const std::vector<FeatureVector>& rows, std::span<const std::string> keys);

}  // namespace vpce
