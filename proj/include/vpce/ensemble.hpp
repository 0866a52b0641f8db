#pragma once

#include <span>
#include <string>
#include <vector>

#include "vpce/clustering.hpp"
#include "vpce/features.hpp"

namespace vpce {

/// Alpha assigned to a cell whose members all sit on its centre, when no
/// cell in the ensemble has a positive spread to borrow from.
inline constexpr double kFallbackAlpha = 1e-6;

struct PlaceCell {
    std::vector<double> center;
    double alpha = 0.0;  ///< receptive-field scale: max member distance to the centre
    std::size_t member_count = 0;
    bool degenerate = false;  ///< alpha was floored because the cluster has no spread
};

struct PlaceCellEnsemble {
    std::vector<PlaceCell> cells;
    FeatureSource feature_source = FeatureSource::multimodal;
    std::string descriptor_config_hash;
    std::string arena_id;

    std::size_t size() const noexcept { return cells.size(); }
    std::size_t dim() const noexcept { return cells.empty() ? 0 : cells.front().center.size(); }
    void validate() const;
};

struct ActivationPattern {
    std::vector<double> raw;         ///< A_i in (0, 1]
    std::vector<double> normalized;  ///< min-max scaled into [0, 1]
    std::string observation_ref;
    bool degenerate = false;  ///< all raw values equal; normalized is all zeros
};

struct EnsembleProvenance {
    FeatureSource feature_source = FeatureSource::multimodal;
    std::string descriptor_config_hash;
    std::string arena_id;
};

/// One place cell per cluster of `model`, with alpha_i the largest distance
/// from a member of cluster i to centroid i. Zero-spread clusters receive the
/// smallest positive alpha in the ensemble (or kFallbackAlpha) and are flagged.
PlaceCellEnsemble build_ensemble(const ClusterModel& model, const Matrix& X, const EnsembleProvenance& provenance = {});

/// raw_i = exp(-|f - c_i|^2 / (2 alpha_i^2)), floored at the smallest normal
/// double so every response stays strictly positive. `normalized` is the
/// min-max rescaling of `raw` across the ensemble.
ActivationPattern activate(const PlaceCellEnsemble& ensemble, const FeatureVector& f);

/// Activation for a bare vector; skips the source/config checks.
ActivationPattern activate_values(const PlaceCellEnsemble& ensemble, std::span<const double> f);

/// Elementwise activate. A failure is rethrown naming the index of the first
/// failing element.
std::vector<ActivationPattern> activate_batch(const PlaceCellEnsemble& ensemble, const std::vector<FeatureVector>& batch,
                                              unsigned workers = 0);

/// Activations for every row of `F` as a (rows x k) matrix of normalized or raw values.
Matrix activate_rows(const PlaceCellEnsemble& ensemble, const Matrix& F, bool raw = false, unsigned workers = 0);

}  // namespace vpce
