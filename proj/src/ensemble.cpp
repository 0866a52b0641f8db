#include "vpce/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace vpce {

void PlaceCellEnsemble::validate() const {
    if (cells.empty()) throw ValidationError("ensemble has no place cells");
    const std::size_t d = dim();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].center.size() != d) {
            throw ValidationError("place cell " + std::to_string(i) + " has dimension " +
                                  std::to_string(cells[i].center.size()) + ", expected " + std::to_string(d));
        }
        if (!(cells[i].alpha > 0.0) || !std::isfinite(cells[i].alpha)) {
            throw ValidationError("place cell " + std::to_string(i) + " has a non-positive alpha");
        }
        require_finite(cells[i].center, "place cell center");
    }
}

PlaceCellEnsemble build_ensemble(const ClusterModel& model, const Matrix& X, const EnsembleProvenance& provenance) {
    const std::size_t k = model.centroids.rows();
    if (k == 0) throw ValidationError("cluster model has no centroids");
    if (model.assignments.size() != X.rows()) {
        throw ValidationError("cluster model covers " + std::to_string(model.assignments.size()) +
                              " samples but the feature matrix has " + std::to_string(X.rows()));
    }
    if (model.centroids.cols() != X.cols()) {
        throw ValidationError("centroid dimension " + std::to_string(model.centroids.cols()) +
                              " does not match feature dimension " + std::to_string(X.cols()));
    }

    PlaceCellEnsemble ens;
    ens.feature_source = provenance.feature_source;
    ens.descriptor_config_hash = provenance.descriptor_config_hash;
    ens.arena_id = provenance.arena_id;
    ens.cells.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        auto row = model.centroids.row(c);
        ens.cells[c].center.assign(row.begin(), row.end());
    }
    for (std::size_t i = 0; i < X.rows(); ++i) {
        std::size_t c = model.assignments[i];
        if (c >= k) throw ValidationError("sample " + std::to_string(i) + " is assigned to a missing cluster");
        auto& cell = ens.cells[c];
        cell.alpha = std::max(cell.alpha, distance(X.row(i), cell.center));
        ++cell.member_count;
    }

    double floor_alpha = std::numeric_limits<double>::infinity();
    for (const auto& cell : ens.cells) {
        if (cell.alpha > 0.0) floor_alpha = std::min(floor_alpha, cell.alpha);
    }
    if (!std::isfinite(floor_alpha)) floor_alpha = kFallbackAlpha;
    for (auto& cell : ens.cells) {
        if (cell.alpha == 0.0) {
            cell.alpha = floor_alpha;
            cell.degenerate = true;
        }
    }
    return ens;
}

ActivationPattern activate_values(const PlaceCellEnsemble& ensemble, std::span<const double> f) {
    if (ensemble.cells.empty()) throw ValidationError("ensemble has no place cells");
    if (f.size() != ensemble.dim()) {
        throw ValidationError("feature dimension " + std::to_string(f.size()) + " does not match ensemble dimension " +
                              std::to_string(ensemble.dim()));
    }
    require_finite(f, "feature vector");
    const std::size_t k = ensemble.size();
    ActivationPattern p;
    p.raw.resize(k);
    p.normalized.assign(k, 0.0);
    constexpr double kFloor = std::numeric_limits<double>::min();
    for (std::size_t i = 0; i < k; ++i) {
        const auto& cell = ensemble.cells[i];
        double d2 = squared_distance(f, cell.center);
        p.raw[i] = std::max(std::exp(-d2 / (2.0 * cell.alpha * cell.alpha)), kFloor);
    }
    auto [lo, hi] = std::minmax_element(p.raw.begin(), p.raw.end());
    const double mn = *lo;
    const double range = *hi - mn;
    if (range > 0.0) {
        for (std::size_t i = 0; i < k; ++i) p.normalized[i] = (p.raw[i] - mn) / range;
    } else {
        p.degenerate = true;
    }
    return p;
}

ActivationPattern activate(const PlaceCellEnsemble& ensemble, const FeatureVector& f) {
    if (f.source != ensemble.feature_source) {
        throw ValidationError("feature source " + to_string(f.source) + " does not match ensemble source " +
                              to_string(ensemble.feature_source));
    }
    if (!ensemble.descriptor_config_hash.empty() && f.config_hash != ensemble.descriptor_config_hash) {
        throw ValidationError("features were produced under a different descriptor config (" + f.config_hash +
                              " vs " + ensemble.descriptor_config_hash + ")");
    }
    auto p = activate_values(ensemble, f.values);
    p.observation_ref = f.observation_ref;
    return p;
}

std::vector<ActivationPattern> activate_batch(const PlaceCellEnsemble& ensemble, const std::vector<FeatureVector>& batch,
                                              unsigned workers) {
    std::vector<ActivationPattern> out(batch.size());
    std::vector<std::exception_ptr> errors(batch.size());
    parallel_for(batch.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                out[i] = activate(ensemble, batch[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    });
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const Error& e) {
            throw ValidationError("batch element " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

Matrix activate_rows(const PlaceCellEnsemble& ensemble, const Matrix& F, bool raw, unsigned workers) {
    Matrix out(F.rows(), ensemble.size());
    parallel_for(F.rows(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            auto p = activate_values(ensemble, F.row(i));
            const auto& src = raw ? p.raw : p.normalized;
            std::copy(src.begin(), src.end(), out.row(i).begin());
        }
    });
    return out;
}

}  // namespace vpce
