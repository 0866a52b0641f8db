#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vpce/clustering.hpp"
#include "vpce/ensemble.hpp"
#include "vpce/features.hpp"

namespace vpce {

namespace fs = std::filesystem;

/// Feature matrix for a dataset plus its train/eval split.
///
/// On disk: features.json (metadata, keys, split) and features.f32 (raw
/// little-endian float32, row-major, rows in manifest order). Values are
/// rounded to float32 when saved.
struct FeatureSet {
    Matrix values;
    FeatureSource source = FeatureSource::multimodal;
    std::string config_hash;
    std::vector<std::string> keys;   ///< manifest key per row
    std::vector<std::size_t> train;  ///< row indices, in shuffled order
    std::vector<std::size_t> eval;
    std::uint64_t split_seed = 0;
    double split_fraction = 0.8;
    std::string arena_id;
    int image_width = 0;
    int image_height = 0;
    std::string descriptor;  ///< canonical descriptor config, empty for external features

    Matrix train_matrix() const { return values.select_rows(train); }
    Matrix eval_matrix() const { return values.select_rows(eval); }
};

/// Shuffles 0..n-1 with `seed`; the first floor(fraction * n) become the
/// training rows, the remainder the evaluation rows.
void split_rows(std::size_t n, double fraction, std::uint64_t seed, std::vector<std::size_t>& train,
                std::vector<std::size_t>& eval);

void save_feature_set(const FeatureSet& fset, const fs::path& dir);
FeatureSet load_feature_set(const fs::path& dir);

/// cluster.json + centroids.f32 + assignments.txt. `config_hash` ties the
/// model to the features it was fitted on.
void save_cluster_model(const ClusterModel& m, const std::string& config_hash, const fs::path& dir);
ClusterModel load_cluster_model(const fs::path& dir, std::string* config_hash = nullptr);

/// ensemble.json (k, d, source, config hash, alphas) + centroids.f32.
void save_ensemble(const PlaceCellEnsemble& e, const fs::path& dir);
PlaceCellEnsemble load_ensemble(const fs::path& dir);

/// CSV with header `observation,cell_0,...,cell_{k-1}`.
std::string activations_csv(const std::vector<std::string>& keys, const Matrix& activations);

/// Rounds every entry to float32 precision, matching what persistence stores.
Matrix round_to_f32(const Matrix& m);

}  // namespace vpce
