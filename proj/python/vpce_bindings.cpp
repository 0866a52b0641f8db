#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "vpce/pipeline.hpp"

namespace py = pybind11;
using namespace vpce;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const DoubleArray& a) {
    if (a.ndim() != 2) throw ValidationError("expected a 2-D array");
    const auto r = static_cast<std::size_t>(a.shape(0));
    const auto c = static_cast<std::size_t>(a.shape(1));
    return Matrix(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

std::vector<double> to_vector(const DoubleArray& a) {
    if (a.ndim() != 1) throw ValidationError("expected a 1-D array");
    return {a.data(), a.data() + a.size()};
}

DoubleArray from_matrix(const Matrix& m) {
    DoubleArray out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

DoubleArray from_vector(const std::vector<double>& v) {
    DoubleArray out(v.size());
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

Image to_image(const ByteArray& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw ValidationError("expected an (height, width, 3) uint8 array");
    Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), img.rgb.begin());
    return img;
}

ByteArray from_image(const Image& img) {
    ByteArray out({static_cast<py::ssize_t>(img.height), static_cast<py::ssize_t>(img.width), py::ssize_t{3}});
    std::copy(img.rgb.begin(), img.rgb.end(), out.mutable_data());
    return out;
}

std::vector<std::size_t> to_labels(const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& a) {
    std::vector<std::size_t> out(static_cast<std::size_t>(a.size()));
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (a.data()[i] < 0) throw ValidationError("negative cluster label");
        out[i] = static_cast<std::size_t>(a.data()[i]);
    }
    return out;
}

py::dict ttest_dict(const TTestResult& t) {
    py::dict d;
    d["t"] = t.t_statistic;
    d["p"] = t.p_value;
    d["dof"] = t.dof;
    d["n"] = py::make_tuple(t.group_sizes[0], t.group_sizes[1]);
    d["mean_a"] = t.mean_a;
    d["mean_b"] = t.mean_b;
    d["welch"] = t.welch;
    return d;
}

py::list report_rows(const SimilarityReport& r) {
    py::list rows;
    for (const auto& g : r.rows) {
        py::dict d;
        d["label"] = g.label;
        d["n"] = g.n_samples;
        d["cosine"] = g.cosine;
        d["pearson"] = g.pearson;
        d["euclidean"] = g.euclidean;
        rows.append(d);
    }
    return rows;
}

py::dict wall_dict(const WallReport& w) {
    py::dict d;
    d["rows"] = report_rows(w.report);
    d["cosine_test"] = ttest_dict(w.cosine_test);
    d["euclidean_test"] = ttest_dict(w.euclidean_test);
    return d;
}

// Runs a pipeline stage and returns what it printed.
template <class F>
std::string stage(F&& f, const RunConfig& cfg) {
    std::ostringstream log;
    {
        py::gil_scoped_release release;
        f(cfg, log);
    }
    return log.str();
}

}  // namespace

PYBIND11_MODULE(_vpce, m) {
    m.doc() = "Visual place-cell encoding: simulator, descriptors, clustering and place-cell ensembles";

    static py::exception<ValidationError> validation_exc(m, "ValidationError", PyExc_ValueError);
    static py::exception<NumericError> numeric_exc(m, "NumericError", PyExc_ArithmeticError);
    static py::exception<IoError> io_exc(m, "IoError", PyExc_OSError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            PyErr_SetString(validation_exc.ptr(), e.what());
        } catch (const NumericError& e) {
            PyErr_SetString(numeric_exc.ptr(), e.what());
        } catch (const IoError& e) {
            PyErr_SetString(io_exc.ptr(), e.what());
        }
    });

    // arena
    py::class_<ArenaSpec>(m, "Arena")
        .def_readonly("id", &ArenaSpec::id)
        .def_readonly("width", &ArenaSpec::width)
        .def_readonly("height", &ArenaSpec::height)
        .def_property_readonly("walls",
                               [](const ArenaSpec& a) {
                                   py::list out;
                                   for (const auto& w : a.walls)
                                       out.append(py::make_tuple(py::make_tuple(w.a.x, w.a.y),
                                                                 py::make_tuple(w.b.x, w.b.y), w.thickness));
                                   return out;
                               })
        .def_property_readonly("n_landmarks", [](const ArenaSpec& a) { return a.landmarks.size(); })
        .def("to_json", &arena_to_json)
        .def_static("from_json", &arena_from_json)
        .def_static("load", [](const fs::path& p) { return load_arena(p); })
        .def("without_wall", [](const ArenaSpec& a, std::size_t i) { return mutate_arena(a, RemoveWall{i}); })
        .def("with_wall",
             [](const ArenaSpec& a, std::pair<double, double> p, std::pair<double, double> q, double thickness) {
                 return mutate_arena(a, AddWall{Wall{{p.first, p.second}, {q.first, q.second}, thickness}});
             },
             py::arg("a"), py::arg("b"), py::arg("thickness") = 0.1)
        .def("__repr__", [](const ArenaSpec& a) {
            return "<Arena '" + a.id + "' " + std::to_string(a.walls.size()) + " walls>";
        });
    m.def("open_arena", &default_open_arena);
    m.def("walled_arena", &default_walled_arena);
    m.def("pose_is_valid", [](const ArenaSpec& a, double x, double y, double clearance) {
        return pose_is_valid(a, {x, y, 0.0}, clearance);
    }, py::arg("arena"), py::arg("x"), py::arg("y"), py::arg("clearance") = 0.0);
    m.def("render",
          [](const ArenaSpec& a, double x, double y, double theta, int width, int height) {
              RenderConfig cfg;
              cfg.image_width = width;
              cfg.image_height = height;
              return from_image(render_pov(a, {x, y, theta}, cfg));
          },
          py::arg("arena"), py::arg("x"), py::arg("y"), py::arg("theta"), py::arg("width") = 128,
          py::arg("height") = 96, "First-person view as an (height, width, 3) uint8 array.");
    m.def("explore",
          [](const ArenaSpec& a, std::size_t n_steps, std::uint64_t seed, double step_length) {
              ExplorationConfig cfg;
              cfg.n_steps = n_steps;
              cfg.rng_seed = seed;
              cfg.step_length = step_length;
              auto t = explore_trace(a, cfg);
              DoubleArray out({t.positions.size(), std::size_t{2}});
              for (std::size_t i = 0; i < t.positions.size(); ++i) {
                  out.mutable_at(i, 0) = t.positions[i].x;
                  out.mutable_at(i, 1) = t.positions[i].y;
              }
              return out;
          },
          py::arg("arena"), py::arg("n_steps") = 1000, py::arg("seed") = 42, py::arg("step_length") = 0.3,
          "Positions reached by the biased random walk, one row per feasible step.");

    // features
    m.def("hog", [](const ByteArray& img) { return from_vector(hog(to_image(img), HogConfig{})); });
    m.def("color_histogram", [](const ByteArray& img, int bins) {
        return from_vector(color_histogram(to_image(img), {bins}));
    }, py::arg("image"), py::arg("bins") = 16);
    m.def("spatial_histogram", [](const ByteArray& img) {
        return from_vector(spatial_histogram(to_image(img), SpatialHistogramConfig{}));
    });
    m.def("features", [](const ByteArray& img) { return from_vector(extract_multimodal(to_image(img), {}).values); },
          "Multimodal descriptor [HOG | colour | spatial] with default settings.");
    m.def("feature_dim", [](int w, int h) { return multimodal_dim(w, h, DescriptorConfig{}); });

    // clustering
    py::class_<ClusterModel>(m, "ClusterModel")
        .def_property_readonly("centroids", [](const ClusterModel& c) { return from_matrix(c.centroids); })
        .def_readonly("labels", &ClusterModel::assignments)
        .def_readonly("inertia", &ClusterModel::inertia)
        .def_readonly("k", &ClusterModel::k)
        .def_readonly("iterations", &ClusterModel::iterations_run)
        .def_readonly("inertia_history", &ClusterModel::inertia_history);
    m.def("kmeans",
          [](const DoubleArray& X, std::size_t k, std::uint64_t seed, std::size_t restarts, std::size_t max_iter,
             double tol, unsigned workers) {
              Matrix M = to_matrix(X);
              KMeansOptions o{k, seed, max_iter, tol, restarts, workers};
              py::gil_scoped_release release;
              return kmeans_fit(M, o);
          },
          py::arg("X"), py::arg("k"), py::arg("seed") = 0, py::arg("restarts") = 1, py::arg("max_iter") = 300,
          py::arg("tol") = 1e-6, py::arg("workers") = 0);
    m.def("silhouette", [](const DoubleArray& X, const py::array_t<std::int64_t>& labels) {
        return silhouette(to_matrix(X), to_labels(labels));
    });
    m.def("davies_bouldin", [](const DoubleArray& X, const py::array_t<std::int64_t>& labels) {
        return davies_bouldin(to_matrix(X), to_labels(labels));
    });
    m.def("calinski_harabasz", [](const DoubleArray& X, const py::array_t<std::int64_t>& labels) {
        return calinski_harabasz(to_matrix(X), to_labels(labels));
    });

    // ensemble
    py::class_<PlaceCellEnsemble>(m, "Ensemble")
        .def(py::init([](const ClusterModel& model, const DoubleArray& X) { return build_ensemble(model, to_matrix(X)); }),
             py::arg("model"), py::arg("X"))
        .def_static("load", [](const fs::path& dir) { return load_ensemble(dir); })
        .def("__len__", &PlaceCellEnsemble::size)
        .def_property_readonly("dim", &PlaceCellEnsemble::dim)
        .def_property_readonly("alphas",
                               [](const PlaceCellEnsemble& e) {
                                   std::vector<double> a;
                                   for (const auto& c : e.cells) a.push_back(c.alpha);
                                   return from_vector(a);
                               })
        .def_property_readonly("centers",
                               [](const PlaceCellEnsemble& e) {
                                   Matrix M(e.size(), e.dim());
                                   for (std::size_t i = 0; i < e.size(); ++i)
                                       std::copy(e.cells[i].center.begin(), e.cells[i].center.end(),
                                                 M.row(i).begin());
                                   return from_matrix(M);
                               })
        .def("activate",
             [](const PlaceCellEnsemble& e, const DoubleArray& F, bool raw) {
                 if (F.ndim() == 1) {
                     auto p = activate_values(e, to_vector(F));
                     return from_vector(raw ? p.raw : p.normalized);
                 }
                 Matrix M = to_matrix(F);
                 Matrix A;
                 {
                     py::gil_scoped_release release;
                     A = activate_rows(e, M, raw);
                 }
                 return from_matrix(A);
             },
             py::arg("features"), py::arg("raw") = false,
             "Activations for one feature vector or for every row of a matrix.");

    // analysis
    m.def("cosine", [](const DoubleArray& a, const DoubleArray& b) {
        return cosine_similarity(to_vector(a), to_vector(b));
    });
    m.def("pearson", [](const DoubleArray& a, const DoubleArray& b) { return pearson(to_vector(a), to_vector(b)); });
    m.def("euclidean", [](const DoubleArray& a, const DoubleArray& b) {
        return euclidean(to_vector(a), to_vector(b));
    });
    m.def("students_t",
          [](const DoubleArray& a, const DoubleArray& b, bool welch) {
              return ttest_dict(students_t(to_vector(a), to_vector(b), welch));
          },
          py::arg("a"), py::arg("b"), py::arg("welch") = false);

    // pipeline
    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_static("load", [](const fs::path& p) { return load_run_config(p); })
        .def_static("from_json", [](const std::string& text) { return run_config_from_json(text); })
        .def("to_json", &run_config_to_json)
        .def("validate", &RunConfig::validate)
        .def_readwrite("seed", &RunConfig::seed)
        .def_readwrite("out", &RunConfig::out)
        .def_readwrite("workers", &RunConfig::workers)
        .def_readwrite("arena", &RunConfig::builtin_arena)
        .def_readwrite("arena_file", &RunConfig::arena_file)
        .def_property(
            "k", [](const RunConfig& c) { return c.clustering.k; },
            [](RunConfig& c, std::size_t k) { c.clustering.k = k; })
        .def_readwrite("eval_k", &RunConfig::eval_k)
        .def_property(
            "n_steps", [](const RunConfig& c) { return c.exploration.n_steps; },
            [](RunConfig& c, std::size_t n) { c.exploration.n_steps = n; })
        .def_property(
            "image_size", [](const RunConfig& c) { return py::make_tuple(c.render.image_width, c.render.image_height); },
            [](RunConfig& c, std::pair<int, int> wh) {
                c.render.image_width = wh.first;
                c.render.image_height = wh.second;
            })
        .def_property(
            "remove_wall", [](const RunConfig& c) { return c.remap_remove_index; },
            [](RunConfig& c, std::optional<std::size_t> i) { c.remap_remove_index = i; });

    m.def("simulate", [](const RunConfig& c) { return stage(cmd_simulate, c); });
    m.def("extract", [](const RunConfig& c) { return stage(cmd_extract, c); });
    m.def("cluster", [](const RunConfig& c) { return stage(cmd_cluster, c); });
    m.def("build", [](const RunConfig& c) { return stage(cmd_build, c); });
    m.def("activate", [](const RunConfig& c) { return stage(cmd_activate, c); });
    m.def("eval_clusters", [](const RunConfig& c) {
        std::ostringstream log;
        std::vector<ClusterMetrics> rows;
        {
            py::gil_scoped_release release;
            rows = cmd_eval_clusters(c, log);
        }
        py::list out;
        for (const auto& r : rows) {
            py::dict d;
            d["k"] = r.k;
            d["silhouette"] = r.silhouette;
            d["davies_bouldin"] = r.davies_bouldin;
            d["calinski_harabasz"] = r.calinski_harabasz;
            d["inertia"] = r.inertia;
            out.append(d);
        }
        return out;
    });
    m.def("eval_grouping", [](const RunConfig& c) {
        std::ostringstream log;
        SimilarityReport r;
        {
            py::gil_scoped_release release;
            r = cmd_eval_grouping(c, log);
        }
        return report_rows(r);
    });
    m.def("eval_wall", [](const RunConfig& c) {
        std::ostringstream log;
        WallReport w;
        {
            py::gil_scoped_release release;
            w = cmd_eval_wall(c, log);
        }
        return wall_dict(w);
    });
    m.def("eval_remap", [](const RunConfig& c) {
        std::ostringstream log;
        RemapReport r;
        {
            py::gil_scoped_release release;
            r = cmd_eval_remap(c, log);
        }
        py::dict d;
        d["mode"] = r.mode == RemapMode::add ? "add" : "remove";
        d["before"] = wall_dict(r.before);
        d["after"] = wall_dict(r.after);
        return d;
    });
    m.def("report", [](const RunConfig& c) { return stage(cmd_report, c); });
}
