#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vpce/analysis.hpp"
#include "vpce/arena.hpp"
#include "vpce/clustering.hpp"
#include "vpce/ensemble.hpp"
#include "vpce/features.hpp"
#include "vpce/io.hpp"
#include "vpce/persist.hpp"

namespace vpce {

/// Everything one pipeline run needs. Loaded from a JSON file with one
/// section per stage; CLI flags override individual fields.
struct RunConfig {
    fs::path arena_file;  ///< empty: built-in arena named by `builtin_arena`
    std::string builtin_arena = "open";
    ExplorationConfig exploration;
    RenderConfig render;
    DescriptorConfig descriptor;
    KMeansOptions clustering;
    std::vector<std::size_t> eval_k = {10, 20, 100, 500};
    GroupingSpec grouping;
    WallSampleSpec wall;
    ExperimentOptions experiment;

    /// Post-change arena for eval-remap. Empty: derive it from `remap_remove_index`
    /// or `remap_add_wall` applied to the run's arena.
    fs::path remap_arena_after;
    std::optional<std::size_t> remap_remove_index;
    std::optional<Wall> remap_add_wall;

    std::uint64_t seed = 7;
    fs::path out = "vpce_out";
    double split_fraction = 0.8;
    FeatureSource feature_source = FeatureSource::multimodal;
    fs::path embeddings_file;
    /// Which feature rows `activate` dumps: "eval", "train" or "all".
    std::string activate_rows = "eval";
    unsigned workers = 0;

    void validate() const;

    fs::path dataset_dir() const { return out / "dataset"; }
    fs::path features_dir() const { return out / "features"; }
    fs::path cluster_dir() const { return out / "cluster"; }
    fs::path ensemble_dir() const { return out / "ensemble"; }
    fs::path eval_dir() const { return out / "eval"; }
};

/// Relative paths in the text are resolved against `base` when it is non-empty.
RunConfig run_config_from_json(const std::string& text, const fs::path& base = {});
RunConfig load_run_config(const fs::path& path);
/// Canonical JSON form of every setting that affects results. The output
/// directory and worker count are left out so the file is identical across
/// reruns in other places or with other thread counts.
std::string run_config_to_json(const RunConfig& cfg);

/// The arena named by the config (file or built-in).
ArenaSpec resolve_arena(const RunConfig& cfg);

// Stage commands. Each reads its inputs from cfg.out, writes its outputs
// there, and prints a short human-readable summary to `log`.
Dataset cmd_simulate(const RunConfig& cfg, std::ostream& log);
FeatureSet cmd_extract(const RunConfig& cfg, std::ostream& log);
ClusterModel cmd_cluster(const RunConfig& cfg, std::ostream& log);
PlaceCellEnsemble cmd_build(const RunConfig& cfg, std::ostream& log);
Matrix cmd_activate(const RunConfig& cfg, std::ostream& log);

struct ClusterMetrics {
    std::size_t k = 0;
    double silhouette = 0.0;
    double davies_bouldin = 0.0;
    double calinski_harabasz = 0.0;
    double inertia = 0.0;
};
std::vector<ClusterMetrics> cmd_eval_clusters(const RunConfig& cfg, std::ostream& log);
SimilarityReport cmd_eval_grouping(const RunConfig& cfg, std::ostream& log);
WallReport cmd_eval_wall(const RunConfig& cfg, std::ostream& log);
RemapReport cmd_eval_remap(const RunConfig& cfg, std::ostream& log);
std::string cmd_report(const RunConfig& cfg, std::ostream& log);

/// CSV columns: k,silhouette,davies_bouldin,calinski_harabasz,inertia.
std::string cluster_metrics_csv(const std::vector<ClusterMetrics>& rows);

}  // namespace vpce
