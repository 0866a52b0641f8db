#include "vpce/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "vpce/io.hpp"

namespace vpce {

namespace {

constexpr double kBlockEps2 = 1e-12;  // (1e-6)^2

void l2_normalize(std::span<double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    if (s == 0.0) return;
    double inv = 1.0 / std::sqrt(s);
    for (double& x : v) x *= inv;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Effective block extent and count along one axis.
std::pair<int, int> block_layout(int cells, int block, int stride) {
    int b = std::min(block, cells);
    return {b, (cells - b) / stride + 1};
}

}  // namespace

std::string to_string(FeatureSource s) { return s == FeatureSource::multimodal ? "multimodal" : "external"; }

FeatureSource feature_source_from_string(const std::string& s) {
    if (s == "multimodal") return FeatureSource::multimodal;
    if (s == "external") return FeatureSource::external;
    throw ValidationError("unknown feature source '" + s + "' (expected multimodal or external)");
}

void DescriptorConfig::validate() const {
    if (hog.cell_size < 1 || hog.block_size < 1 || hog.block_stride < 1 || hog.orientation_bins < 1) {
        throw ValidationError("HOG cell_size, block_size, block_stride and orientation_bins must be >= 1");
    }
    if (color.bins < 1 || color.bins > 256) throw ValidationError("color histogram bins must lie in [1, 256]");
    if (spatial.grid_rows < 1 || spatial.grid_cols < 1 || spatial.intensity_bins < 1) {
        throw ValidationError("spatial histogram grid and bins must be >= 1");
    }
}

std::string DescriptorConfig::canonical() const {
    std::ostringstream s;
    s << "hog:cell=" << hog.cell_size << ",block=" << hog.block_size << ",stride=" << hog.block_stride
      << ",bins=" << hog.orientation_bins << ",signed=" << (hog.signed_gradients ? 1 : 0)
      << ";color:bins=" << color.bins << ";spatial:rows=" << spatial.grid_rows << ",cols=" << spatial.grid_cols
      << ",bins=" << spatial.intensity_bins;
    return s.str();
}

std::string descriptor_config_hash(const DescriptorConfig& cfg, int image_width, int image_height) {
    return fnv1a_hex("vpce-multimodal;" + cfg.canonical() + ";image=" + std::to_string(image_width) + "x" +
                     std::to_string(image_height));
}

std::string external_config_hash(std::size_t dim) {
    return fnv1a_hex("vpce-external;dim=" + std::to_string(dim));
}

std::vector<double> grayscale(const Image& img) {
    img.validate();
    std::vector<double> g(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = 0.299 * img.rgb[3 * i] + 0.587 * img.rgb[3 * i + 1] + 0.114 * img.rgb[3 * i + 2];
    }
    return g;
}

std::size_t hog_dim(int image_width, int image_height, const HogConfig& cfg) {
    int cx = image_width / cfg.cell_size;
    int cy = image_height / cfg.cell_size;
    if (cx < 1 || cy < 1) return 0;
    auto [bw, nbx] = block_layout(cx, cfg.block_size, cfg.block_stride);
    auto [bh, nby] = block_layout(cy, cfg.block_size, cfg.block_stride);
    return static_cast<std::size_t>(nbx) * nby * bw * bh * cfg.orientation_bins;
}

std::vector<double> hog(const Image& img, const HogConfig& cfg) {
    if (cfg.cell_size < 1 || cfg.block_size < 1 || cfg.block_stride < 1 || cfg.orientation_bins < 1) {
        throw ValidationError("invalid HOG configuration");
    }
    const int w = img.width;
    const int h = img.height;
    const int cx = w / cfg.cell_size;
    const int cy = h / cfg.cell_size;
    if (cx < 1 || cy < 1) {
        throw ValidationError("image " + std::to_string(w) + "x" + std::to_string(h) + " is smaller than one " +
                              std::to_string(cfg.cell_size) + " px HOG cell");
    }
    const auto gray = grayscale(img);
    const int nbins = cfg.orientation_bins;
    const double range = cfg.signed_gradients ? 2.0 * std::numbers::pi : std::numbers::pi;
    const double bin_width = range / nbins;

    std::vector<double> cells(static_cast<std::size_t>(cx) * cy * nbins, 0.0);
    auto at = [&](int x, int y) { return gray[static_cast<std::size_t>(y) * w + x]; };
    for (int y = 0; y < cy * cfg.cell_size; ++y) {
        for (int x = 0; x < cx * cfg.cell_size; ++x) {
            double gx = at(std::min(x + 1, w - 1), y) - at(std::max(x - 1, 0), y);
            double gy = at(x, std::min(y + 1, h - 1)) - at(x, std::max(y - 1, 0));
            double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.0) continue;
            double angle = std::atan2(gy, gx);
            if (angle < 0.0) angle += 2.0 * std::numbers::pi;
            if (!cfg.signed_gradients && angle >= std::numbers::pi) angle -= std::numbers::pi;
            if (angle >= range) angle -= range;
            double pos = angle / bin_width;
            int b0 = static_cast<int>(std::floor(pos));
            double frac = pos - b0;
            b0 %= nbins;
            int b1 = (b0 + 1) % nbins;
            double* hist = &cells[(static_cast<std::size_t>(y / cfg.cell_size) * cx + x / cfg.cell_size) * nbins];
            hist[b0] += mag * (1.0 - frac);
            hist[b1] += mag * frac;
        }
    }

    auto [bw, nbx] = block_layout(cx, cfg.block_size, cfg.block_stride);
    auto [bh, nby] = block_layout(cy, cfg.block_size, cfg.block_stride);
    const std::size_t block_len = static_cast<std::size_t>(bw) * bh * nbins;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(nbx) * nby * block_len);
    std::vector<double> block(block_len);
    for (int by = 0; by < nby; ++by) {
        for (int bx = 0; bx < nbx; ++bx) {
            std::size_t k = 0;
            for (int j = 0; j < bh; ++j) {
                for (int i = 0; i < bw; ++i) {
                    int cell_x = bx * cfg.block_stride + i;
                    int cell_y = by * cfg.block_stride + j;
                    const double* hist = &cells[(static_cast<std::size_t>(cell_y) * cx + cell_x) * nbins];
                    for (int b = 0; b < nbins; ++b) block[k++] = hist[b];
                }
            }
            double s = 0.0;
            for (double v : block) s += v * v;
            double inv = 1.0 / std::sqrt(s + kBlockEps2);
            for (double v : block) out.push_back(v * inv);
        }
    }
    return out;
}

std::vector<double> color_histogram(const Image& img, const ColorHistogramConfig& cfg) {
    img.validate();
    if (cfg.bins < 1 || cfg.bins > 256) throw ValidationError("color histogram bins must lie in [1, 256]");
    const std::size_t bins = static_cast<std::size_t>(cfg.bins);
    const std::size_t npix = img.rgb.size() / 3;
    std::vector<std::size_t> counts(3 * bins, 0);
    for (std::size_t p = 0; p < npix; ++p) {
        for (std::size_t c = 0; c < 3; ++c) {
            std::size_t b = static_cast<std::size_t>(img.rgb[3 * p + c]) * bins / 256;
            ++counts[c * bins + b];
        }
    }
    std::vector<double> out(3 * bins);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(counts[i]) / static_cast<double>(npix);
    return out;
}

std::vector<double> spatial_histogram(const Image& img, const SpatialHistogramConfig& cfg) {
    img.validate();
    if (cfg.grid_rows < 1 || cfg.grid_cols < 1 || cfg.intensity_bins < 1) {
        throw ValidationError("spatial histogram grid and bins must be >= 1");
    }
    if (cfg.grid_rows > img.height || cfg.grid_cols > img.width) {
        throw ValidationError("spatial grid " + std::to_string(cfg.grid_rows) + "x" + std::to_string(cfg.grid_cols) +
                              " is larger than the " + std::to_string(img.width) + "x" +
                              std::to_string(img.height) + " image");
    }
    const auto gray = grayscale(img);
    const int bins = cfg.intensity_bins;
    std::vector<double> out(static_cast<std::size_t>(cfg.grid_rows) * cfg.grid_cols * bins, 0.0);
    for (int gr = 0; gr < cfg.grid_rows; ++gr) {
        int y0 = gr * img.height / cfg.grid_rows;
        int y1 = (gr + 1) * img.height / cfg.grid_rows;
        for (int gc = 0; gc < cfg.grid_cols; ++gc) {
            int x0 = gc * img.width / cfg.grid_cols;
            int x1 = (gc + 1) * img.width / cfg.grid_cols;
            double* hist = &out[(static_cast<std::size_t>(gr) * cfg.grid_cols + gc) * bins];
            std::size_t n = 0;
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    double g = gray[static_cast<std::size_t>(y) * img.width + x];
                    int b = std::min(static_cast<int>(std::floor(g * bins / 256.0)), bins - 1);
                    hist[b] += 1.0;
                    ++n;
                }
            }
            for (int b = 0; b < bins; ++b) hist[b] /= static_cast<double>(n);
        }
    }
    return out;
}

std::size_t multimodal_dim(int image_width, int image_height, const DescriptorConfig& cfg) {
    return hog_dim(image_width, image_height, cfg.hog) + 3 * static_cast<std::size_t>(cfg.color.bins) +
           static_cast<std::size_t>(cfg.spatial.grid_rows) * cfg.spatial.grid_cols * cfg.spatial.intensity_bins;
}

FeatureVector extract_multimodal(const Image& img, const DescriptorConfig& cfg) {
    cfg.validate();
    auto h = hog(img, cfg.hog);
    auto c = color_histogram(img, cfg.color);
    auto s = spatial_histogram(img, cfg.spatial);
    l2_normalize(h);
    l2_normalize(c);
    l2_normalize(s);
    FeatureVector f;
    f.source = FeatureSource::multimodal;
    f.config_hash = descriptor_config_hash(cfg, img.width, img.height);
    f.values.reserve(h.size() + c.size() + s.size());
    f.values.insert(f.values.end(), h.begin(), h.end());
    f.values.insert(f.values.end(), c.begin(), c.end());
    f.values.insert(f.values.end(), s.begin(), s.end());
    return f;
}

Matrix extract_batch(std::span<const Image> images, const DescriptorConfig& cfg, unsigned workers) {
    cfg.validate();
    if (images.empty()) return {};
    const std::size_t dim = multimodal_dim(images[0].width, images[0].height, cfg);
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].width != images[0].width || images[i].height != images[0].height) {
            throw ValidationError("image " + std::to_string(i) + " size differs from image 0");
        }
    }
    Matrix out(images.size(), dim);
    parallel_for(images.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            auto f = extract_multimodal(images[i], cfg);
            std::copy(f.values.begin(), f.values.end(), out.row(i).begin());
        }
    });
    return out;
}

std::vector<FeatureVector> parse_external_embeddings(const std::string& text,
                                                     const std::unordered_set<std::string>* known_keys) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("embedding file is empty");
    std::size_t dim = 0;
    {
        std::istringstream hdr(line);
        std::string magic, version, dim_field;
        hdr >> magic >> version >> dim_field;
        if (magic != "vpce-embeddings" || version != "v1" || dim_field.rfind("dim=", 0) != 0) {
            throw ValidationError("embedding header must read 'vpce-embeddings v1 dim=<D>'");
        }
        char* end = nullptr;
        unsigned long long d = std::strtoull(dim_field.c_str() + 4, &end, 10);
        if (*end != '\0' || d == 0) throw ValidationError("embedding header has an invalid dim");
        dim = static_cast<std::size_t>(d);
    }
    std::vector<FeatureVector> rows;
    std::unordered_set<std::string> seen;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream rec(line);
        FeatureVector f;
        f.source = FeatureSource::external;
        rec >> f.observation_ref;
        const std::string where = "embedding row " + std::to_string(lineno) + " ('" + f.observation_ref + "')";
        if (known_keys && !known_keys->contains(f.observation_ref)) {
            throw ValidationError(where + " references an observation missing from the manifest");
        }
        if (!seen.insert(f.observation_ref).second) throw ValidationError(where + " repeats a key");
        std::string tok;
        while (rec >> tok) {
            char* end = nullptr;
            double v = std::strtod(tok.c_str(), &end);
            if (*end != '\0') throw ValidationError(where + ": '" + tok + "' is not a number");
            if (!std::isfinite(v)) throw ValidationError(where + ": non-finite value");
            f.values.push_back(v);
        }
        if (f.values.size() != dim) {
            throw ValidationError(where + " has " + std::to_string(f.values.size()) + " values, header says " +
                                  std::to_string(dim));
        }
        f.config_hash = external_config_hash(dim);
        rows.push_back(std::move(f));
    }
    return rows;
}

std::vector<FeatureVector> load_external_embeddings(const std::filesystem::path& path,
                                                    const std::unordered_set<std::string>* known_keys) {
    return parse_external_embeddings(read_text_file(path), known_keys);
}

std::string format_external_embeddings(const std::vector<FeatureVector>& rows) {
    if (rows.empty()) throw ValidationError("no embeddings to write");
    const std::size_t dim = rows.front().dim();
    std::string out = "vpce-embeddings v1 dim=" + std::to_string(dim) + "\n";
    for (const auto& r : rows) {
        if (r.dim() != dim) throw ValidationError("embedding '" + r.observation_ref + "' has a different dim");
        out += r.observation_ref;
        for (double v : r.values) {
            out += ' ';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

void write_external_embeddings(const std::vector<FeatureVector>& rows, const std::filesystem::path& path) {
    write_text_file(path, format_external_embeddings(rows));
}

Matrix align_embeddings(const std::vector<FeatureVector>& rows, std::span<const std::string> keys) {
    std::unordered_map<std::string, std::size_t> by_key;
    for (std::size_t i = 0; i < rows.size(); ++i) by_key.emplace(rows[i].observation_ref, i);
    const std::size_t dim = rows.empty() ? 0 : rows.front().dim();
    Matrix out(keys.size(), dim);
    for (std::size_t i = 0; i < keys.size(); ++i) {
        auto it = by_key.find(keys[i]);
        if (it == by_key.end()) throw ValidationError("no embedding for manifest key '" + keys[i] + "'");
        const auto& v = rows[it->second].values;
        std::copy(v.begin(), v.end(), out.row(i).begin());
    }
    return out;
}

}  // namespace vpce
