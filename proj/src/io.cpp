#include "vpce/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace vpce {

using nlohmann::json;

namespace {

json rgb_json(Rgb c) { return json::array({c.r, c.g, c.b}); }

Rgb rgb_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw ValidationError(std::string(what) + " must be an [r,g,b] triple");
    Rgb c;
    std::uint8_t* dst[3] = {&c.r, &c.g, &c.b};
    for (std::size_t i = 0; i < 3; ++i) {
        int v = j[i].get<int>();
        if (v < 0 || v > 255) throw ValidationError(std::string(what) + " components must lie in [0,255]");
        *dst[i] = static_cast<std::uint8_t>(v);
    }
    return c;
}

Point point_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2) throw ValidationError(std::string(what) + " must be an [x,y] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::string arena_to_json(const ArenaSpec& arena) {
    json j;
    j["id"] = arena.id;
    j["width"] = arena.width;
    j["height"] = arena.height;
    j["floor_color"] = rgb_json(arena.floor_color);
    j["ceiling_color"] = rgb_json(arena.ceiling_color);
    j["wall_color"] = rgb_json(arena.wall_color);
    j["boundary_color"] = rgb_json(arena.boundary_color);
    j["walls"] = json::array();
    for (const auto& w : arena.walls) {
        j["walls"].push_back({{"a", {w.a.x, w.a.y}}, {"b", {w.b.x, w.b.y}}, {"thickness", w.thickness}});
    }
    j["landmarks"] = json::array();
    for (const auto& lm : arena.landmarks) {
        j["landmarks"].push_back(
            {{"center", {lm.center.x, lm.center.y}}, {"radius", lm.radius}, {"color", rgb_json(lm.color)}});
    }
    return j.dump(2) + "\n";
}

ArenaSpec arena_from_json(const std::string& text) {
    ArenaSpec a;
    try {
        json j = json::parse(text);
        a.id = j.value("id", std::string("arena"));
        a.width = j.at("width").get<double>();
        a.height = j.at("height").get<double>();
        if (j.contains("floor_color")) a.floor_color = rgb_from(j["floor_color"], "floor_color");
        if (j.contains("ceiling_color")) a.ceiling_color = rgb_from(j["ceiling_color"], "ceiling_color");
        if (j.contains("wall_color")) a.wall_color = rgb_from(j["wall_color"], "wall_color");
        if (j.contains("boundary_color")) a.boundary_color = rgb_from(j["boundary_color"], "boundary_color");
        for (const auto& w : j.value("walls", json::array())) {
            a.walls.push_back({point_from(w.at("a"), "wall.a"), point_from(w.at("b"), "wall.b"),
                               w.value("thickness", 0.1)});
        }
        for (const auto& lm : j.value("landmarks", json::array())) {
            a.landmarks.push_back(
                {point_from(lm.at("center"), "landmark.center"), lm.at("radius").get<double>(),
                 rgb_from(lm.at("color"), "landmark.color")});
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed arena file: ") + e.what());
    }
    a.validate();
    return a;
}

ArenaSpec load_arena(const fs::path& path) { return arena_from_json(read_text_file(path)); }

void save_arena(const ArenaSpec& arena, const fs::path& path) { write_text_file(path, arena_to_json(arena)); }

std::string encode_ppm(const Image& img) {
    img.validate();
    std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
    return out;
}

Image decode_ppm(const std::string& bytes) {
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> int {
        skip_space();
        std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
        if (start == pos) throw ValidationError("malformed PPM header");
        return std::stoi(bytes.substr(start, pos - start));
    };
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw ValidationError("not a binary PPM (P6)");
    pos = 2;
    int w = read_int();
    int h = read_int();
    int maxval = read_int();
    if (maxval != 255) throw ValidationError("only maxval 255 PPM files are supported");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        throw ValidationError("malformed PPM header");
    }
    ++pos;
    if (w <= 0 || h <= 0) throw ValidationError("PPM dimensions must be positive");
    if (bytes.size() - pos != 3 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {
        throw ValidationError("PPM pixel data has the wrong length");
    }
    Image img(w, h);
    std::memcpy(img.rgb.data(), bytes.data() + pos, img.rgb.size());
    return img;
}

void write_ppm(const Image& img, const fs::path& path) { write_text_file(path, encode_ppm(img)); }

Image read_ppm(const fs::path& path) { return decode_ppm(read_text_file(path)); }

std::string observation_key(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "obs_%06zu", index);
    return buf;
}

Image Dataset::load_image(std::size_t i) const { return read_ppm(root / entries.at(i).file); }

std::size_t Dataset::index_of(const std::string& key) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].key == key) return i;
    }
    throw ValidationError("unknown manifest key '" + key + "'");
}

Dataset write_dataset(const std::vector<Observation>& observations, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create dataset directory " + dir.string() + ": " + ec.message());
    Dataset ds;
    ds.root = dir;
    std::string manifest;
    for (std::size_t i = 0; i < observations.size(); ++i) {
        const auto& o = observations[i];
        ManifestEntry e{observation_key(i), observation_key(i) + ".ppm", o.pose, o.step_index, o.arena_id};
        write_ppm(o.image, dir / e.file);
        json rec = {{"key", e.key},           {"file", e.file},        {"x", e.pose.x},
                    {"y", e.pose.y},          {"theta", e.pose.theta}, {"step_index", e.step_index},
                    {"arena_id", e.arena_id}};
        manifest += rec.dump() + "\n";
        ds.entries.push_back(std::move(e));
    }
    write_text_file(dir / "manifest.jsonl", manifest);
    return ds;
}

Dataset read_dataset(const fs::path& dir) {
    Dataset ds;
    ds.root = dir;
    std::istringstream in(read_text_file(dir / "manifest.jsonl"));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            ManifestEntry e;
            e.file = j.at("file").get<std::string>();
            e.key = j.value("key", fs::path(e.file).stem().string());
            e.pose = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("theta").get<double>()};
            e.step_index = j.at("step_index").get<std::size_t>();
            e.arena_id = j.value("arena_id", std::string());
            ds.entries.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw ValidationError("manifest line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return ds;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

void write_f32_matrix(const Matrix& m, const fs::path& path) {
    std::string bytes(m.data().size() * 4, '\0');
    for (std::size_t i = 0; i < m.data().size(); ++i) {
        auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(m.data()[i]));
        for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
    write_text_file(path, bytes);
}

Matrix read_f32_matrix(const fs::path& path, std::size_t rows, std::size_t cols) {
    std::string bytes = read_text_file(path);
    if (bytes.size() != rows * cols * 4) {
        throw ValidationError(path.string() + " holds " + std::to_string(bytes.size()) + " bytes, expected " +
                              std::to_string(rows * cols * 4));
    }
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows * cols; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + b])) << (8 * b);
        m.data()[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    require_finite(m.data(), path.string());
    return m;
}

}  // namespace vpce
