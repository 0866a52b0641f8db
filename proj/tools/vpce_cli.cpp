// vpce: command-line driver for the place-cell pipeline.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vpce/pipeline.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::vector<std::size_t> k;
    std::optional<std::string> feature_source;
    std::optional<std::string> embeddings;
    std::optional<std::string> arena;
    std::optional<std::string> activate_rows;
    std::optional<unsigned> workers;
    bool use_raw = false;
    bool welch = false;
    bool matrices = false;
    bool all_pairs = false;
};

vpce::RunConfig make_config(const Overrides& o, const std::string& command) {
    vpce::RunConfig cfg;
    if (!o.config.empty()) cfg = vpce::load_run_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.out = *o.out;
    if (!o.k.empty()) {
        if (command == "eval-clusters") {
            cfg.eval_k = o.k;
        } else if (o.k.size() == 1) {
            cfg.clustering.k = o.k.front();
        } else {
            throw vpce::ValidationError("--k takes a list only for eval-clusters");
        }
    }
    if (o.feature_source) cfg.feature_source = vpce::feature_source_from_string(*o.feature_source);
    if (o.embeddings) cfg.embeddings_file = *o.embeddings;
    if (o.arena) {
        if (*o.arena == "open" || *o.arena == "walled") {
            cfg.builtin_arena = *o.arena;
            cfg.arena_file.clear();
        } else {
            cfg.arena_file = *o.arena;
        }
    }
    if (o.activate_rows) cfg.activate_rows = *o.activate_rows;
    if (o.workers) cfg.workers = *o.workers;
    if (o.use_raw) cfg.experiment.use_raw = true;
    if (o.welch) cfg.experiment.welch = true;
    if (o.matrices) cfg.experiment.keep_pairs = true;
    if (o.all_pairs) cfg.experiment.all_pairs = true;
    cfg.validate();
    return cfg;
}

void run(const std::string& command, const vpce::RunConfig& cfg) {
    auto& log = std::cout;
    if (command == "simulate") {
        vpce::cmd_simulate(cfg, log);
    } else if (command == "extract") {
        vpce::cmd_extract(cfg, log);
    } else if (command == "cluster") {
        vpce::cmd_cluster(cfg, log);
    } else if (command == "build") {
        vpce::cmd_build(cfg, log);
    } else if (command == "activate") {
        vpce::cmd_activate(cfg, log);
    } else if (command == "eval-clusters") {
        vpce::cmd_eval_clusters(cfg, log);
    } else if (command == "eval-grouping") {
        vpce::cmd_eval_grouping(cfg, log);
    } else if (command == "eval-wall") {
        vpce::cmd_eval_wall(cfg, log);
    } else if (command == "eval-remap") {
        vpce::cmd_eval_remap(cfg, log);
    } else if (command == "report") {
        vpce::cmd_report(cfg, log);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Visual place-cell encoding pipeline"};
    app.require_subcommand(1);
    Overrides o;
    app.add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "run seed (all stage seeds derive from it)");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--k", o.k, "cluster count (a list for eval-clusters)");
    app.add_option("--feature-source", o.feature_source, "multimodal or external")
        ->check(CLI::IsMember({"multimodal", "external"}));
    app.add_option("--embeddings", o.embeddings, "embedding file for --feature-source external");
    app.add_option("--arena", o.arena, "'open', 'walled' or an arena JSON file");
    app.add_option("--activate-rows", o.activate_rows, "rows dumped by activate: eval, train or all")
        ->check(CLI::IsMember({"eval", "train", "all"}));
    app.add_option("--workers", o.workers, "worker threads (0 = hardware concurrency)");
    app.add_flag("--use-raw-activations", o.use_raw, "compare raw instead of normalized activations");
    app.add_flag("--welch", o.welch, "Welch's unequal-variance t-test");
    app.add_flag("--matrices", o.matrices, "also dump per-pair similarity records");
    app.add_flag("--all-pairs", o.all_pairs, "average all intra-group pairs in eval-grouping");

    const std::vector<std::pair<const char*, const char*>> commands = {
        {"simulate", "explore the arena and write the POV dataset"},
        {"extract", "compute features and the train/eval split"},
        {"cluster", "fit k-means on the training features"},
        {"build", "turn the cluster model into a place-cell ensemble"},
        {"activate", "write activation patterns to activations.csv"},
        {"eval-clusters", "silhouette / Davies-Bouldin / Calinski-Harabasz per k"},
        {"eval-grouping", "similarity by spatial/orientation grouping"},
        {"eval-wall", "same-side vs cross-side similarity around a wall"},
        {"eval-remap", "the wall comparison after adding or removing a wall"},
        {"report", "collect evaluation outputs into report.txt"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        run(command, make_config(o, command));
    } catch (const vpce::Error& e) {
        std::fprintf(stderr, "vpce %s: %s\n", command.c_str(), e.what());
        return e.exit_code();
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "vpce %s: %s\n", command.c_str(), e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "vpce %s: %s\n", command.c_str(), e.what());
        return 3;
    }
    return 0;
}
