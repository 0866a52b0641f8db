#include "vpce/persist.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "vpce/analysis.hpp"
#include "vpce/io.hpp"

namespace vpce {

using nlohmann::json;

namespace {

json parse_json_file(const fs::path& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ValidationError("malformed " + path.string() + ": " + e.what());
    }
}

void expect_format(const json& j, const std::string& format, const fs::path& path) {
    if (j.value("format", std::string()) != format) {
        throw ValidationError(path.string() + " is not a " + format + " file");
    }
}

}  // namespace

Matrix round_to_f32(const Matrix& m) {
    Matrix out = m;
    for (double& v : out.data()) v = static_cast<double>(static_cast<float>(v));
    return out;
}

void split_rows(std::size_t n, double fraction, std::uint64_t seed, std::vector<std::size_t>& train,
                std::vector<std::size_t>& eval) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("split_fraction must lie in (0, 1)");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    const auto n_train = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    eval.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
}

void save_feature_set(const FeatureSet& fset, const fs::path& dir) {
    json j;
    j["format"] = "vpce-features v1";
    j["rows"] = fset.values.rows();
    j["dim"] = fset.values.cols();
    j["source"] = to_string(fset.source);
    j["config_hash"] = fset.config_hash;
    j["descriptor"] = fset.descriptor;
    j["image_width"] = fset.image_width;
    j["image_height"] = fset.image_height;
    j["arena_id"] = fset.arena_id;
    j["split_seed"] = fset.split_seed;
    j["split_fraction"] = fset.split_fraction;
    j["keys"] = fset.keys;
    j["train"] = fset.train;
    j["eval"] = fset.eval;
    write_text_file(dir / "features.json", j.dump(1) + "\n");
    write_f32_matrix(fset.values, dir / "features.f32");
}

FeatureSet load_feature_set(const fs::path& dir) {
    const auto meta_path = dir / "features.json";
    json j = parse_json_file(meta_path);
    expect_format(j, "vpce-features v1", meta_path);
    FeatureSet f;
    try {
        const auto rows = j.at("rows").get<std::size_t>();
        const auto dim = j.at("dim").get<std::size_t>();
        f.source = feature_source_from_string(j.at("source").get<std::string>());
        f.config_hash = j.at("config_hash").get<std::string>();
        f.descriptor = j.value("descriptor", std::string());
        f.image_width = j.value("image_width", 0);
        f.image_height = j.value("image_height", 0);
        f.arena_id = j.value("arena_id", std::string());
        f.split_seed = j.at("split_seed").get<std::uint64_t>();
        f.split_fraction = j.at("split_fraction").get<double>();
        f.keys = j.at("keys").get<std::vector<std::string>>();
        f.train = j.at("train").get<std::vector<std::size_t>>();
        f.eval = j.at("eval").get<std::vector<std::size_t>>();
        f.values = read_f32_matrix(dir / "features.f32", rows, dim);
    } catch (const json::exception& e) {
        throw ValidationError("malformed " + meta_path.string() + ": " + e.what());
    }
    if (f.keys.size() != f.values.rows()) throw ValidationError("feature key list does not match the row count");
    for (auto i : f.train) {
        if (i >= f.values.rows()) throw ValidationError("training index out of range in " + meta_path.string());
    }
    for (auto i : f.eval) {
        if (i >= f.values.rows()) throw ValidationError("evaluation index out of range in " + meta_path.string());
    }
    return f;
}

void save_cluster_model(const ClusterModel& m, const std::string& config_hash, const fs::path& dir) {
    json j;
    j["format"] = "vpce-cluster v1";
    j["k"] = m.k;
    j["d"] = m.dim();
    j["n"] = m.assignments.size();
    j["seed"] = m.seed;
    j["inertia"] = m.inertia;
    j["iterations"] = m.iterations_run;
    j["inertia_history"] = m.inertia_history;
    j["config_hash"] = config_hash;
    write_text_file(dir / "cluster.json", j.dump(1) + "\n");
    write_f32_matrix(m.centroids, dir / "centroids.f32");
    std::string labels;
    for (auto a : m.assignments) labels += std::to_string(a) + "\n";
    write_text_file(dir / "assignments.txt", labels);
}

ClusterModel load_cluster_model(const fs::path& dir, std::string* config_hash) {
    const auto meta_path = dir / "cluster.json";
    json j = parse_json_file(meta_path);
    expect_format(j, "vpce-cluster v1", meta_path);
    ClusterModel m;
    std::size_t n = 0;
    try {
        m.k = j.at("k").get<std::size_t>();
        n = j.at("n").get<std::size_t>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.inertia = j.at("inertia").get<double>();
        m.iterations_run = j.at("iterations").get<std::size_t>();
        m.inertia_history = j.value("inertia_history", std::vector<double>{});
        if (config_hash) *config_hash = j.at("config_hash").get<std::string>();
        m.centroids = read_f32_matrix(dir / "centroids.f32", m.k, j.at("d").get<std::size_t>());
    } catch (const json::exception& e) {
        throw ValidationError("malformed " + meta_path.string() + ": " + e.what());
    }
    std::istringstream in(read_text_file(dir / "assignments.txt"));
    std::size_t a = 0;
    while (in >> a) {
        if (a >= m.k) throw ValidationError("assignment index out of range in " + (dir / "assignments.txt").string());
        m.assignments.push_back(a);
    }
    if (m.assignments.size() != n) throw ValidationError("assignment list length does not match cluster.json");
    return m;
}

void save_ensemble(const PlaceCellEnsemble& e, const fs::path& dir) {
    e.validate();
    json j;
    j["format"] = "vpce-ensemble v1";
    j["k"] = e.size();
    j["d"] = e.dim();
    j["feature_source"] = to_string(e.feature_source);
    j["config_hash"] = e.descriptor_config_hash;
    j["arena_id"] = e.arena_id;
    json alphas = json::array(), counts = json::array(), degenerate = json::array();
    Matrix centers(e.size(), e.dim());
    for (std::size_t i = 0; i < e.size(); ++i) {
        alphas.push_back(e.cells[i].alpha);
        counts.push_back(e.cells[i].member_count);
        degenerate.push_back(e.cells[i].degenerate);
        std::copy(e.cells[i].center.begin(), e.cells[i].center.end(), centers.row(i).begin());
    }
    j["alphas"] = alphas;
    j["member_counts"] = counts;
    j["degenerate"] = degenerate;
    write_text_file(dir / "ensemble.json", j.dump(1) + "\n");
    write_f32_matrix(centers, dir / "centroids.f32");
}

PlaceCellEnsemble load_ensemble(const fs::path& dir) {
    const auto meta_path = dir / "ensemble.json";
    json j = parse_json_file(meta_path);
    expect_format(j, "vpce-ensemble v1", meta_path);
    PlaceCellEnsemble e;
    try {
        const auto k = j.at("k").get<std::size_t>();
        const auto d = j.at("d").get<std::size_t>();
        e.feature_source = feature_source_from_string(j.at("feature_source").get<std::string>());
        e.descriptor_config_hash = j.at("config_hash").get<std::string>();
        e.arena_id = j.value("arena_id", std::string());
        auto alphas = j.at("alphas").get<std::vector<double>>();
        auto counts = j.at("member_counts").get<std::vector<std::size_t>>();
        auto degenerate = j.at("degenerate").get<std::vector<bool>>();
        if (alphas.size() != k || counts.size() != k || degenerate.size() != k) {
            throw ValidationError("ensemble.json per-cell lists do not match k");
        }
        Matrix centers = read_f32_matrix(dir / "centroids.f32", k, d);
        e.cells.resize(k);
        for (std::size_t i = 0; i < k; ++i) {
            auto row = centers.row(i);
            e.cells[i].center.assign(row.begin(), row.end());
            e.cells[i].alpha = alphas[i];
            e.cells[i].member_count = counts[i];
            e.cells[i].degenerate = degenerate[i];
        }
    } catch (const json::exception& ex) {
        throw ValidationError("malformed " + meta_path.string() + ": " + ex.what());
    }
    e.validate();
    return e;
}

std::string activations_csv(const std::vector<std::string>& keys, const Matrix& activations) {
    if (keys.size() != activations.rows()) throw ValidationError("activation rows do not match observation keys");
    std::string out = "observation";
    for (std::size_t c = 0; c < activations.cols(); ++c) out += ",cell_" + std::to_string(c);
    out += '\n';
    for (std::size_t i = 0; i < activations.rows(); ++i) {
        out += keys[i];
        for (double v : activations.row(i)) {
            out += ',';
            out += format_number(v);
        }
        out += '\n';
    }
    return out;
}

}  // namespace vpce
