#include "vpce/pipeline.hpp"

#include <algorithm>
#include <initializer_list>
#include <ostream>

#include "json.hpp"

namespace vpce {

using nlohmann::json;

namespace {

// Independent seed per stage, all derived from the run seed.
std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : stage) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    std::uint64_t z = seed ^ h;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& section) {
    if (!j.is_object()) throw ValidationError("config section '" + section + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
            throw ValidationError("unknown key '" + it.key() + "' in config section '" + section + "'");
        }
    }
}

template <class T>
void get(const json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

Point point_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2) throw ValidationError("points are written as [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

void read_sections(const json& j, RunConfig& c) {
    check_keys(j,
               {"arena", "arena_file", "exploration", "render", "descriptor", "clustering", "eval_k", "grouping", "wall",
                "experiment", "remap", "seed", "out", "split_fraction", "feature_source", "embeddings",
                "activate_rows", "workers"},
               "top level");
    get(j, "arena", c.builtin_arena);
    if (j.contains("arena_file")) c.arena_file = j.at("arena_file").get<std::string>();
    if (j.contains("exploration")) {
        const auto& e = j.at("exploration");
        check_keys(e, {"step_length", "n_steps", "bias_weight", "clearance_radius", "max_start_attempts"},
                   "exploration");
        get(e, "step_length", c.exploration.step_length);
        get(e, "n_steps", c.exploration.n_steps);
        get(e, "bias_weight", c.exploration.bias_weight);
        get(e, "clearance_radius", c.exploration.clearance_radius);
        get(e, "max_start_attempts", c.exploration.max_start_attempts);
    }
    if (j.contains("render")) {
        const auto& r = j.at("render");
        check_keys(r,
                   {"image_width", "image_height", "horizontal_fov", "max_view_distance", "shading",
                    "surface_height"},
                   "render");
        get(r, "image_width", c.render.image_width);
        get(r, "image_height", c.render.image_height);
        get(r, "horizontal_fov", c.render.horizontal_fov);
        get(r, "max_view_distance", c.render.max_view_distance);
        get(r, "shading", c.render.shading);
        get(r, "surface_height", c.render.surface_height);
    }
    if (j.contains("descriptor")) {
        const auto& d = j.at("descriptor");
        check_keys(d, {"hog", "color", "spatial"}, "descriptor");
        if (d.contains("hog")) {
            const auto& h = d.at("hog");
            check_keys(h, {"cell_size", "block_size", "block_stride", "orientation_bins", "signed_gradients"},
                       "descriptor.hog");
            get(h, "cell_size", c.descriptor.hog.cell_size);
            get(h, "block_size", c.descriptor.hog.block_size);
            get(h, "block_stride", c.descriptor.hog.block_stride);
            get(h, "orientation_bins", c.descriptor.hog.orientation_bins);
            get(h, "signed_gradients", c.descriptor.hog.signed_gradients);
        }
        if (d.contains("color")) {
            check_keys(d.at("color"), {"bins"}, "descriptor.color");
            get(d.at("color"), "bins", c.descriptor.color.bins);
        }
        if (d.contains("spatial")) {
            const auto& s = d.at("spatial");
            check_keys(s, {"grid_rows", "grid_cols", "intensity_bins"}, "descriptor.spatial");
            get(s, "grid_rows", c.descriptor.spatial.grid_rows);
            get(s, "grid_cols", c.descriptor.spatial.grid_cols);
            get(s, "intensity_bins", c.descriptor.spatial.intensity_bins);
        }
    }
    if (j.contains("clustering")) {
        const auto& k = j.at("clustering");
        check_keys(k, {"k", "max_iter", "tol", "restarts"}, "clustering");
        get(k, "k", c.clustering.k);
        get(k, "max_iter", c.clustering.max_iter);
        get(k, "tol", c.clustering.tol);
        get(k, "restarts", c.clustering.restarts);
    }
    get(j, "eval_k", c.eval_k);
    if (j.contains("grouping")) {
        const auto& g = j.at("grouping");
        check_keys(g,
                   {"close_radius", "far_radius", "same_orientation_tol", "different_orientation_min", "group_size",
                    "n_references"},
                   "grouping");
        get(g, "close_radius", c.grouping.close_radius);
        get(g, "far_radius", c.grouping.far_radius);
        get(g, "same_orientation_tol", c.grouping.same_orientation_tol);
        get(g, "different_orientation_min", c.grouping.different_orientation_min);
        get(g, "group_size", c.grouping.group_size);
        get(g, "n_references", c.grouping.n_references);
    }
    if (j.contains("wall")) {
        const auto& w = j.at("wall");
        check_keys(w,
                   {"wall_index", "positions_per_side", "min_offset", "max_offset", "along_min", "along_max",
                    "clearance", "max_attempts"},
                   "wall");
        get(w, "wall_index", c.wall.wall_index);
        get(w, "positions_per_side", c.wall.positions_per_side);
        get(w, "min_offset", c.wall.min_offset);
        get(w, "max_offset", c.wall.max_offset);
        get(w, "along_min", c.wall.along_min);
        get(w, "along_max", c.wall.along_max);
        get(w, "clearance", c.wall.clearance);
        get(w, "max_attempts", c.wall.max_attempts);
    }
    if (j.contains("experiment")) {
        const auto& x = j.at("experiment");
        check_keys(x, {"use_raw", "all_pairs", "welch", "matrices"}, "experiment");
        get(x, "use_raw", c.experiment.use_raw);
        get(x, "all_pairs", c.experiment.all_pairs);
        get(x, "welch", c.experiment.welch);
        get(x, "matrices", c.experiment.keep_pairs);
    }
    if (j.contains("remap")) {
        const auto& r = j.at("remap");
        check_keys(r, {"arena_after", "remove_wall", "add_wall"}, "remap");
        if (r.contains("arena_after")) c.remap_arena_after = r.at("arena_after").get<std::string>();
        if (r.contains("remove_wall")) c.remap_remove_index = r.at("remove_wall").get<std::size_t>();
        if (r.contains("add_wall")) {
            const auto& w = r.at("add_wall");
            check_keys(w, {"a", "b", "thickness"}, "remap.add_wall");
            Wall wall;
            wall.a = point_from_json(w.at("a"));
            wall.b = point_from_json(w.at("b"));
            get(w, "thickness", wall.thickness);
            c.remap_add_wall = wall;
        }
    }
    get(j, "seed", c.seed);
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    get(j, "split_fraction", c.split_fraction);
    if (j.contains("feature_source")) {
        c.feature_source = feature_source_from_string(j.at("feature_source").get<std::string>());
    }
    if (j.contains("embeddings")) c.embeddings_file = j.at("embeddings").get<std::string>();
    get(j, "activate_rows", c.activate_rows);
    get(j, "workers", c.workers);
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = i;
    return r;
}

void check_descriptor_hash(const RunConfig& cfg, const FeatureSet& fset) {
    if (fset.source != cfg.feature_source) {
        throw ValidationError("features were extracted from source '" + to_string(fset.source) +
                              "' but the config asks for '" + to_string(cfg.feature_source) + "'");
    }
    if (fset.source != FeatureSource::multimodal) return;
    const auto hash = descriptor_config_hash(cfg.descriptor, cfg.render.image_width, cfg.render.image_height);
    if (hash != fset.config_hash) {
        throw ValidationError("features were produced under a different descriptor config (" + fset.config_hash +
                              " vs " + hash + ")");
    }
}

void check_ensemble_hash(const PlaceCellEnsemble& ens, const FeatureSet& fset) {
    if (ens.feature_source != fset.source || ens.descriptor_config_hash != fset.config_hash) {
        throw ValidationError("features were produced under a different descriptor config (" + fset.config_hash +
                              " vs " + ens.descriptor_config_hash + ")");
    }
}

KMeansOptions kmeans_options(const RunConfig& cfg, std::size_t k) {
    KMeansOptions o = cfg.clustering;
    o.k = k;
    o.seed = stage_seed(cfg.seed, "kmeans");
    o.workers = cfg.workers;
    return o;
}

ExperimentOptions experiment_options(const RunConfig& cfg) {
    ExperimentOptions o = cfg.experiment;
    o.workers = cfg.workers;
    return o;
}

PipelineContext pipeline_context(const RunConfig& cfg) { return {cfg.render, cfg.descriptor}; }

ArenaSpec dataset_arena(const RunConfig& cfg) { return load_arena(cfg.dataset_dir() / "arena.json"); }

std::vector<Pose> feature_poses(const RunConfig& cfg, const FeatureSet& fset) {
    Dataset ds = read_dataset(cfg.dataset_dir());
    std::vector<Pose> poses;
    poses.reserve(fset.keys.size());
    for (const auto& key : fset.keys) poses.push_back(ds.entries[ds.index_of(key)].pose);
    return poses;
}

void write_pairs_if_requested(const RunConfig& cfg, const SimilarityReport& r, const fs::path& path) {
    if (cfg.experiment.keep_pairs) write_text_file(path, pairs_csv(r));
}

}  // namespace

void RunConfig::validate() const {
    exploration.validate();
    render.validate();
    descriptor.validate();
    grouping.validate();
    wall.validate();
    if (clustering.k < 1) throw ValidationError("clustering.k must be at least 1");
    if (clustering.max_iter < 1) throw ValidationError("clustering.max_iter must be at least 1");
    if (!(clustering.tol >= 0.0)) throw ValidationError("clustering.tol must be non-negative");
    if (clustering.restarts < 1) throw ValidationError("clustering.restarts must be at least 1");
    for (auto k : eval_k) {
        if (k < 1) throw ValidationError("eval_k entries must be at least 1");
    }
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw ValidationError("split_fraction must lie in (0, 1)");
    if (activate_rows != "eval" && activate_rows != "train" && activate_rows != "all") {
        throw ValidationError("activate_rows must be 'eval', 'train' or 'all'");
    }
    if (arena_file.empty() && builtin_arena != "open" && builtin_arena != "walled") {
        throw ValidationError("unknown built-in arena '" + builtin_arena + "' (expected 'open' or 'walled')");
    }
    if (out.empty()) throw ValidationError("output directory must not be empty");
    int remap_sources = !remap_arena_after.empty() + remap_remove_index.has_value() + remap_add_wall.has_value();
    if (remap_sources > 1) throw ValidationError("remap: give only one of arena_after, remove_wall, add_wall");
    for (const fs::path* p : {&arena_file, &embeddings_file, &remap_arena_after}) {
        if (!p->empty() && !fs::exists(*p)) throw ValidationError("file not found: " + p->string());
    }
    if (feature_source == FeatureSource::external && embeddings_file.empty()) {
        throw ValidationError("feature source 'external' needs an embeddings file");
    }
}

RunConfig run_config_from_json(const std::string& text, const fs::path& base) {
    RunConfig c;
    try {
        read_sections(json::parse(text), c);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed config: ") + e.what());
    }
    for (fs::path* p : {&c.arena_file, &c.embeddings_file, &c.remap_arena_after}) {
        if (!p->empty() && p->is_relative() && !base.empty()) *p = base / *p;
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    // Paths inside a config file are relative to that file.
    return run_config_from_json(read_text_file(path), path.parent_path());
}

std::string run_config_to_json(const RunConfig& c) {
    json j;
    j["arena"] = c.builtin_arena;
    if (!c.arena_file.empty()) j["arena_file"] = c.arena_file.string();
    j["exploration"] = {{"step_length", c.exploration.step_length},
                        {"n_steps", c.exploration.n_steps},
                        {"bias_weight", c.exploration.bias_weight},
                        {"clearance_radius", c.exploration.clearance_radius},
                        {"max_start_attempts", c.exploration.max_start_attempts}};
    j["render"] = {{"image_width", c.render.image_width},           {"image_height", c.render.image_height},
                   {"horizontal_fov", c.render.horizontal_fov},     {"max_view_distance", c.render.max_view_distance},
                   {"shading", c.render.shading},                   {"surface_height", c.render.surface_height}};
    j["descriptor"] = {
        {"hog",
         {{"cell_size", c.descriptor.hog.cell_size},
          {"block_size", c.descriptor.hog.block_size},
          {"block_stride", c.descriptor.hog.block_stride},
          {"orientation_bins", c.descriptor.hog.orientation_bins},
          {"signed_gradients", c.descriptor.hog.signed_gradients}}},
        {"color", {{"bins", c.descriptor.color.bins}}},
        {"spatial",
         {{"grid_rows", c.descriptor.spatial.grid_rows},
          {"grid_cols", c.descriptor.spatial.grid_cols},
          {"intensity_bins", c.descriptor.spatial.intensity_bins}}}};
    j["clustering"] = {{"k", c.clustering.k},
                       {"max_iter", c.clustering.max_iter},
                       {"tol", c.clustering.tol},
                       {"restarts", c.clustering.restarts}};
    j["eval_k"] = c.eval_k;
    j["grouping"] = {{"close_radius", c.grouping.close_radius},
                     {"far_radius", c.grouping.far_radius},
                     {"same_orientation_tol", c.grouping.same_orientation_tol},
                     {"different_orientation_min", c.grouping.different_orientation_min},
                     {"group_size", c.grouping.group_size},
                     {"n_references", c.grouping.n_references}};
    j["wall"] = {{"wall_index", c.wall.wall_index}, {"positions_per_side", c.wall.positions_per_side},
                 {"min_offset", c.wall.min_offset}, {"max_offset", c.wall.max_offset},
                 {"along_min", c.wall.along_min},   {"along_max", c.wall.along_max},
                 {"clearance", c.wall.clearance},   {"max_attempts", c.wall.max_attempts}};
    j["experiment"] = {{"use_raw", c.experiment.use_raw},
                       {"all_pairs", c.experiment.all_pairs},
                       {"welch", c.experiment.welch},
                       {"matrices", c.experiment.keep_pairs}};
    json remap = json::object();
    if (!c.remap_arena_after.empty()) remap["arena_after"] = c.remap_arena_after.string();
    if (c.remap_remove_index) remap["remove_wall"] = *c.remap_remove_index;
    if (c.remap_add_wall) {
        const auto& w = *c.remap_add_wall;
        remap["add_wall"] = {{"a", {w.a.x, w.a.y}}, {"b", {w.b.x, w.b.y}}, {"thickness", w.thickness}};
    }
    j["remap"] = remap;
    j["seed"] = c.seed;
    j["split_fraction"] = c.split_fraction;
    j["feature_source"] = to_string(c.feature_source);
    if (!c.embeddings_file.empty()) j["embeddings"] = c.embeddings_file.string();
    j["activate_rows"] = c.activate_rows;
    return j.dump(1) + "\n";
}

ArenaSpec resolve_arena(const RunConfig& cfg) {
    ArenaSpec a;
    if (!cfg.arena_file.empty()) {
        a = load_arena(cfg.arena_file);
    } else if (cfg.builtin_arena == "walled") {
        a = default_walled_arena();
    } else if (cfg.builtin_arena == "open") {
        a = default_open_arena();
    } else {
        throw ValidationError("unknown built-in arena '" + cfg.builtin_arena + "'");
    }
    a.validate();
    return a;
}

Dataset cmd_simulate(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    ArenaSpec arena = resolve_arena(cfg);
    ExplorationConfig ex = cfg.exploration;
    ex.rng_seed = stage_seed(cfg.seed, "explore");
    auto obs = explore(arena, ex, cfg.render, cfg.workers);
    std::error_code ec;
    fs::remove_all(cfg.dataset_dir(), ec);
    if (ec) throw IoError("cannot clear " + cfg.dataset_dir().string() + ": " + ec.message());
    Dataset ds = write_dataset(obs, cfg.dataset_dir());
    save_arena(arena, cfg.dataset_dir() / "arena.json");
    write_text_file(cfg.out / "run_config.json", run_config_to_json(cfg));
    log << "simulate: arena '" << arena.id << "', " << obs.size() / kActionCount << " feasible steps, " << obs.size()
        << " observations -> " << cfg.dataset_dir().string() << "\n";
    return ds;
}

FeatureSet cmd_extract(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    Dataset ds = read_dataset(cfg.dataset_dir());
    if (ds.entries.empty()) throw ValidationError("dataset " + cfg.dataset_dir().string() + " is empty");
    FeatureSet f;
    f.source = cfg.feature_source;
    f.arena_id = ds.entries.front().arena_id;
    f.image_width = cfg.render.image_width;
    f.image_height = cfg.render.image_height;
    for (const auto& e : ds.entries) f.keys.push_back(e.key);

    if (cfg.feature_source == FeatureSource::multimodal) {
        const std::size_t n = ds.entries.size();
        const std::size_t dim = multimodal_dim(cfg.render.image_width, cfg.render.image_height, cfg.descriptor);
        f.values = Matrix(n, dim);
        // Bounded batches keep the decoded images from piling up in memory.
        constexpr std::size_t kBatch = 256;
        for (std::size_t start = 0; start < n; start += kBatch) {
            const std::size_t stop = std::min(n, start + kBatch);
            std::vector<Image> images;
            images.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                images.push_back(ds.load_image(i));
                if (images.back().width != cfg.render.image_width || images.back().height != cfg.render.image_height) {
                    throw ValidationError("image " + ds.entries[i].file + " does not match the configured size");
                }
            }
            Matrix part = extract_batch(images, cfg.descriptor, cfg.workers);
            for (std::size_t i = start; i < stop; ++i) {
                auto src = part.row(i - start);
                std::copy(src.begin(), src.end(), f.values.row(i).begin());
            }
        }
        f.config_hash = descriptor_config_hash(cfg.descriptor, cfg.render.image_width, cfg.render.image_height);
        f.descriptor = cfg.descriptor.canonical();
    } else {
        if (cfg.embeddings_file.empty()) throw ValidationError("feature source 'external' needs an embeddings file");
        std::unordered_set<std::string> known(f.keys.begin(), f.keys.end());
        auto rows = load_external_embeddings(cfg.embeddings_file, &known);
        f.values = align_embeddings(rows, f.keys);
        f.config_hash = external_config_hash(f.values.cols());
    }
    f.split_seed = stage_seed(cfg.seed, "split");
    f.split_fraction = cfg.split_fraction;
    split_rows(f.values.rows(), f.split_fraction, f.split_seed, f.train, f.eval);
    if (f.train.empty() || f.eval.empty()) {
        throw ValidationError("split_fraction leaves an empty training or evaluation set");
    }
    save_feature_set(f, cfg.features_dir());
    log << "extract: " << f.values.rows() << " x " << f.values.cols() << " " << to_string(f.source)
        << " features (train " << f.train.size() << ", eval " << f.eval.size() << ") -> "
        << cfg.features_dir().string() << "\n";
    // Callers see exactly what later stages will read back.
    f.values = round_to_f32(f.values);
    return f;
}

ClusterModel cmd_cluster(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    FeatureSet f = load_feature_set(cfg.features_dir());
    check_descriptor_hash(cfg, f);
    Matrix X = f.train_matrix();
    if (cfg.clustering.k > X.rows()) {
        throw ValidationError("k = " + std::to_string(cfg.clustering.k) + " exceeds the " + std::to_string(X.rows()) +
                              " training rows");
    }
    ClusterModel m = kmeans_fit(X, kmeans_options(cfg, cfg.clustering.k));
    save_cluster_model(m, f.config_hash, cfg.cluster_dir());
    log << "cluster: k = " << m.k << ", inertia " << format_number(m.inertia) << " after " << m.iterations_run
        << " iterations -> " << cfg.cluster_dir().string() << "\n";
    return load_cluster_model(cfg.cluster_dir());
}

PlaceCellEnsemble cmd_build(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    FeatureSet f = load_feature_set(cfg.features_dir());
    check_descriptor_hash(cfg, f);
    std::string model_hash;
    ClusterModel m = load_cluster_model(cfg.cluster_dir(), &model_hash);
    if (model_hash != f.config_hash) {
        throw ValidationError("features were produced under a different descriptor config (" + f.config_hash +
                              " vs " + model_hash + ")");
    }
    Matrix X = f.train_matrix();
    if (m.assignments.size() != X.rows() || m.dim() != X.cols()) {
        throw ValidationError("cluster model does not match the training features");
    }
    PlaceCellEnsemble ens = build_ensemble(m, X, {f.source, f.config_hash, f.arena_id});
    save_ensemble(ens, cfg.ensemble_dir());
    std::size_t degenerate = 0;
    for (const auto& c : ens.cells) degenerate += c.degenerate;
    log << "build: " << ens.size() << " place cells (" << degenerate << " zero-spread) -> "
        << cfg.ensemble_dir().string() << "\n";
    return load_ensemble(cfg.ensemble_dir());
}

Matrix cmd_activate(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    FeatureSet f = load_feature_set(cfg.features_dir());
    check_descriptor_hash(cfg, f);
    PlaceCellEnsemble ens = load_ensemble(cfg.ensemble_dir());
    check_ensemble_hash(ens, f);
    std::vector<std::size_t> rows = cfg.activate_rows == "train" ? f.train
                                    : cfg.activate_rows == "eval" ? f.eval
                                                                  : all_rows(f.values.rows());
    std::sort(rows.begin(), rows.end());
    std::vector<std::string> keys;
    keys.reserve(rows.size());
    for (auto r : rows) keys.push_back(f.keys[r]);
    Matrix A = activate_rows(ens, f.values.select_rows(rows), cfg.experiment.use_raw, cfg.workers);
    const auto path = cfg.out / "activations.csv";
    write_text_file(path, activations_csv(keys, A));
    log << "activate: " << A.rows() << " " << cfg.activate_rows << " observations x " << A.cols() << " cells ("
        << (cfg.experiment.use_raw ? "raw" : "normalized") << ") -> " << path.string() << "\n";
    return A;
}

std::string cluster_metrics_csv(const std::vector<ClusterMetrics>& rows) {
    std::string out = "k,silhouette,davies_bouldin,calinski_harabasz,inertia\n";
    for (const auto& r : rows) {
        out += std::to_string(r.k) + "," + format_number(r.silhouette) + "," + format_number(r.davies_bouldin) + "," +
               format_number(r.calinski_harabasz) + "," + format_number(r.inertia) + "\n";
    }
    return out;
}

std::vector<ClusterMetrics> cmd_eval_clusters(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    FeatureSet f = load_feature_set(cfg.features_dir());
    check_descriptor_hash(cfg, f);
    Matrix X = f.train_matrix();
    std::vector<ClusterMetrics> out;
    for (auto k : cfg.eval_k) {
        if (k < 2 || k >= X.rows()) {
            throw ValidationError("eval k = " + std::to_string(k) + " needs 2 <= k < " + std::to_string(X.rows()) +
                                  " training rows");
        }
        ClusterModel m = kmeans_fit(X, kmeans_options(cfg, k));
        ClusterMetrics r;
        r.k = k;
        r.inertia = m.inertia;
        r.silhouette = silhouette(X, m.assignments, cfg.workers);
        r.davies_bouldin = davies_bouldin(X, m.assignments);
        r.calinski_harabasz = calinski_harabasz(X, m.assignments);
        log << "eval-clusters: k = " << k << " silhouette " << format_number(r.silhouette) << " DBI "
            << format_number(r.davies_bouldin) << " CHI " << format_number(r.calinski_harabasz) << "\n";
        out.push_back(r);
    }
    write_text_file(cfg.eval_dir() / "clusters.csv", cluster_metrics_csv(out));
    return out;
}

SimilarityReport cmd_eval_grouping(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    FeatureSet f = load_feature_set(cfg.features_dir());
    check_descriptor_hash(cfg, f);
    PlaceCellEnsemble ens = load_ensemble(cfg.ensemble_dir());
    check_ensemble_hash(ens, f);
    auto poses = feature_poses(cfg, f);
    SimilarityReport r = grouping_experiment(ens, f.values, poses, cfg.grouping, stage_seed(cfg.seed, "grouping"),
                                             experiment_options(cfg));
    write_text_file(cfg.eval_dir() / "grouping.csv", similarity_csv(r));
    write_pairs_if_requested(cfg, r, cfg.eval_dir() / "grouping_pairs.csv");
    for (const auto& row : r.rows) {
        log << "eval-grouping: " << row.label << " cosine "
            << (row.cosine ? format_number(*row.cosine) : std::string("n/a")) << " euclidean "
            << (row.euclidean ? format_number(*row.euclidean) : std::string("n/a")) << "\n";
    }
    return r;
}

WallReport cmd_eval_wall(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    PlaceCellEnsemble ens = load_ensemble(cfg.ensemble_dir());
    ArenaSpec arena = dataset_arena(cfg);
    WallReport w = wall_experiment(ens, arena, cfg.wall, pipeline_context(cfg), stage_seed(cfg.seed, "wall"),
                                   experiment_options(cfg));
    write_text_file(cfg.eval_dir() / "wall.csv", similarity_csv(w.report));
    write_text_file(cfg.eval_dir() / "wall_summary.txt", wall_summary("wall", w));
    write_pairs_if_requested(cfg, w.report, cfg.eval_dir() / "wall_pairs.csv");
    log << "eval-wall: cosine t = " << format_number(w.cosine_test.t_statistic)
        << " p = " << format_number(w.cosine_test.p_value) << "; euclidean t = "
        << format_number(w.euclidean_test.t_statistic) << " p = " << format_number(w.euclidean_test.p_value) << "\n";
    return w;
}

RemapReport cmd_eval_remap(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    PlaceCellEnsemble ens = load_ensemble(cfg.ensemble_dir());
    ArenaSpec before = dataset_arena(cfg);
    ArenaSpec after;
    if (!cfg.remap_arena_after.empty()) {
        after = load_arena(cfg.remap_arena_after);
    } else if (cfg.remap_remove_index) {
        after = mutate_arena(before, RemoveWall{*cfg.remap_remove_index});
    } else if (cfg.remap_add_wall) {
        after = mutate_arena(before, AddWall{*cfg.remap_add_wall});
    } else {
        throw ValidationError("eval-remap needs remap.arena_after, remap.remove_wall or remap.add_wall");
    }
    RemapReport r = remap_experiment(ens, before, after, cfg.wall, pipeline_context(cfg),
                                     stage_seed(cfg.seed, "remap"), experiment_options(cfg));
    const char* mode = r.mode == RemapMode::add ? "add" : "remove";
    write_text_file(cfg.eval_dir() / "remap_before.csv", similarity_csv(r.before.report, "mode", mode));
    write_text_file(cfg.eval_dir() / "remap_after.csv", similarity_csv(r.after.report, "mode", mode));
    write_text_file(cfg.eval_dir() / "remap_summary.txt", std::string("mode = ") + mode + "\n" +
                                                              wall_summary("before", r.before) +
                                                              wall_summary("after", r.after));
    write_pairs_if_requested(cfg, r.after.report, cfg.eval_dir() / "remap_pairs.csv");
    const auto& j = r.judged();
    log << "eval-remap (" << mode << "): post-change cosine p = " << format_number(j.cosine_test.p_value)
        << ", euclidean p = " << format_number(j.euclidean_test.p_value) << "\n";
    return r;
}

std::string cmd_report(const RunConfig& cfg, std::ostream& log) {
    const std::pair<const char*, fs::path> parts[] = {
        {"cluster quality", cfg.eval_dir() / "clusters.csv"},
        {"grouping similarity", cfg.eval_dir() / "grouping.csv"},
        {"wall similarity", cfg.eval_dir() / "wall.csv"},
        {"wall tests", cfg.eval_dir() / "wall_summary.txt"},
        {"remap (before)", cfg.eval_dir() / "remap_before.csv"},
        {"remap (after)", cfg.eval_dir() / "remap_after.csv"},
        {"remap tests", cfg.eval_dir() / "remap_summary.txt"},
    };
    std::string text = "vpce report\n";
    std::size_t found = 0;
    for (const auto& [title, path] : parts) {
        if (!fs::exists(path)) continue;
        text += "\n== " + std::string(title) + " ==\n" + read_text_file(path);
        ++found;
    }
    if (found == 0) throw ValidationError("no evaluation outputs under " + cfg.eval_dir().string());
    write_text_file(cfg.out / "report.txt", text);
    log << "report: " << found << " sections -> " << (cfg.out / "report.txt").string() << "\n";
    return text;
}

}  // namespace vpce
