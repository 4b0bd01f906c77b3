#pragma once

// Frame and stack serialization: CSV and 16-bit binary PGM frames, stack
// manifests, and the JSON documents exchanged by the command-line tool.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "thermofuse/core.hpp"
#include "thermofuse/metrics.hpp"
#include "thermofuse/optics.hpp"
#include "thermofuse/select.hpp"

namespace thermofuse {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Raw file access

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::FileNotFound, path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

inline void write_file(const fs::path& path, std::string_view bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::FileNotFound, "cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::FileNotFound, "write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// CSV frames: one image row per line, comma-separated, '.' decimal point.

/// Shortest decimal that parses back to exactly `value`.
inline std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

inline std::string format_csv(const ThermalImage& img) {
    std::string out;
    out.reserve(img.size() * 8);
    char buf[64];
    for (std::size_t y = 0; y < img.height(); ++y) {
        for (std::size_t x = 0; x < img.width(); ++x) {
            if (x > 0) out += ',';
            const auto res = std::to_chars(buf, buf + sizeof buf, img(x, y));
            out.append(buf, res.ptr);
        }
        out += '\n';
    }
    return out;
}

inline ThermalImage parse_csv(std::string_view text, const std::string& source = "<csv>") {
    std::vector<double> values;
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        auto line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        std::size_t count = 0;
        std::size_t field_start = 0;
        while (true) {
            auto comma = line.find(',', field_start);
            auto field = line.substr(field_start, comma == std::string_view::npos ? line.size() - field_start
                                                                                  : comma - field_start);
            while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
            while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
            if (!field.empty() && field.front() == '+') field.remove_prefix(1);
            double v = 0.0;
            const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
            if (field.empty() || res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
                throw Error(Errc::ParseError, source + ":" + std::to_string(line_no) + ": bad value '" +
                                                  std::string(field) + "' in column " + std::to_string(count + 1));
            }
            values.push_back(v);
            ++count;
            if (comma == std::string_view::npos) break;
            field_start = comma + 1;
        }
        if (height == 0) {
            width = count;
        } else if (count != width) {
            throw Error(Errc::ParseError, source + ":" + std::to_string(line_no) + ": expected " +
                                              std::to_string(width) + " values, found " + std::to_string(count));
        }
        ++height;
    }
    if (height == 0) throw Error(Errc::ParseError, source + ": no data rows");
    return ThermalImage(width, height, std::move(values));
}

inline ThermalImage read_csv_image(const fs::path& path) { return parse_csv(read_file(path), path.string()); }

inline void write_csv_image(const fs::path& path, const ThermalImage& img) { write_file(path, format_csv(img)); }

// ---------------------------------------------------------------------------
// 16-bit binary PGM (P5, maxval 65535, big-endian samples), mapped linearly
// onto a temperature range.

struct TempRange {
    double t_min = 0.0;
    double t_max = 0.0;

    double step() const noexcept { return (t_max - t_min) / 65535.0; }
};

inline void validate_range(const TempRange& range) {
    if (!std::isfinite(range.t_min) || !std::isfinite(range.t_max) || !(range.t_max > range.t_min)) {
        throw Error(Errc::ValidationError, "pgm16 temperature range needs finite t_max > t_min");
    }
}

inline std::uint16_t to_code(double temp, const TempRange& range) {
    const double scaled = (temp - range.t_min) / (range.t_max - range.t_min) * 65535.0;
    return static_cast<std::uint16_t>(std::clamp(std::lround(scaled), 0L, 65535L));
}

inline double from_code(std::uint16_t code, const TempRange& range) {
    return range.t_min + static_cast<double>(code) * (range.t_max - range.t_min) / 65535.0;
}

inline std::string encode_pgm16(const ThermalImage& img, const TempRange& range) {
    validate_range(range);
    std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n65535\n";
    out.reserve(out.size() + 2 * img.size());
    for (double t : img.values()) {
        const auto code = to_code(t, range);
        out += static_cast<char>(code >> 8);
        out += static_cast<char>(code & 0xff);
    }
    return out;
}

inline ThermalImage decode_pgm16(std::string_view bytes, const TempRange& range, const std::string& source = "<pgm>") {
    validate_range(range);
    std::size_t pos = 0;
    auto fail = [&](const std::string& what) {
        return Error(Errc::ParseError, source + ": byte " + std::to_string(pos) + ": " + what);
    };
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            const char c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_uint = [&](const char* name) {
        skip_space();
        std::size_t value = 0;
        const auto res = std::from_chars(bytes.data() + pos, bytes.data() + bytes.size(), value);
        if (res.ec != std::errc{}) throw fail(std::string("expected ") + name);
        pos = static_cast<std::size_t>(res.ptr - bytes.data());
        return value;
    };
    if (bytes.substr(0, 2) != "P5") throw fail("not a binary PGM (missing P5 magic)");
    pos = 2;
    const auto width = read_uint("width");
    const auto height = read_uint("height");
    const auto maxval = read_uint("maxval");
    if (width == 0 || height == 0) throw fail("zero image dimension");
    if (maxval != 65535) throw fail("maxval must be 65535, got " + std::to_string(maxval));
    if (pos >= bytes.size() || !(bytes[pos] == ' ' || bytes[pos] == '\n' || bytes[pos] == '\r' || bytes[pos] == '\t')) {
        throw fail("missing whitespace after maxval");
    }
    ++pos;
    const std::size_t need = 2 * width * height;
    if (bytes.size() - pos < need) {
        throw fail("truncated raster: need " + std::to_string(need) + " bytes, have " + std::to_string(bytes.size() - pos));
    }
    std::vector<double> values(width * height);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto hi = static_cast<unsigned char>(bytes[pos + 2 * i]);
        const auto lo = static_cast<unsigned char>(bytes[pos + 2 * i + 1]);
        values[i] = from_code(static_cast<std::uint16_t>((hi << 8) | lo), range);
    }
    return ThermalImage(width, height, std::move(values));
}

inline ThermalImage read_pgm16(const fs::path& path, const TempRange& range) {
    return decode_pgm16(read_file(path), range, path.string());
}

inline void write_pgm16(const fs::path& path, const ThermalImage& img, const TempRange& range) {
    write_file(path, encode_pgm16(img, range));
}

// ---------------------------------------------------------------------------
// Stack manifests

enum class FrameFormat { Csv, Pgm16 };

inline const char* to_string(FrameFormat f) noexcept { return f == FrameFormat::Csv ? "csv" : "pgm16"; }

inline FrameFormat parse_frame_format(std::string_view tag) {
    if (tag == "csv") return FrameFormat::Csv;
    if (tag == "pgm16") return FrameFormat::Pgm16;
    throw Error(Errc::ParseError, "unknown frame format '" + std::string(tag) + "' (expected csv or pgm16)");
}

/// Frame paths are stored as written in the manifest file; relative paths
/// resolve against the manifest's directory.
struct StackManifest {
    std::vector<std::string> frames;
    std::optional<std::vector<double>> lens_positions;
    FrameFormat format = FrameFormat::Csv;
    std::optional<TempRange> range;
};

inline json to_json(const StackManifest& m) {
    json j;
    j["format"] = to_string(m.format);
    j["frames"] = m.frames;
    if (m.lens_positions) j["lens_positions"] = *m.lens_positions;
    if (m.range) {
        j["t_min"] = m.range->t_min;
        j["t_max"] = m.range->t_max;
    }
    return j;
}

inline StackManifest manifest_from_json(const json& j, const std::string& source = "<manifest>") {
    StackManifest m;
    try {
        m.format = parse_frame_format(j.value("format", std::string("csv")));
        m.frames = j.at("frames").get<std::vector<std::string>>();
        if (j.contains("lens_positions")) m.lens_positions = j["lens_positions"].get<std::vector<double>>();
        if (j.contains("t_min") || j.contains("t_max")) {
            m.range = TempRange{j.at("t_min").get<double>(), j.at("t_max").get<double>()};
        }
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, source + ": " + e.what());
    }
    if (m.frames.empty()) throw Error(Errc::ValidationError, source + ": manifest lists no frames");
    if (m.format == FrameFormat::Pgm16) {
        if (!m.range) throw Error(Errc::ValidationError, source + ": pgm16 manifest needs t_min and t_max");
        validate_range(*m.range);
    }
    return m;
}

inline json parse_json(std::string_view text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::ParseError, source + ": byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

inline StackManifest read_manifest(const fs::path& path) {
    return manifest_from_json(parse_json(read_file(path), path.string()), path.string());
}

inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

inline void write_manifest(const fs::path& path, const StackManifest& m) { write_file(path, dump_json(to_json(m))); }

inline fs::path resolve_frame(const fs::path& manifest_path, const std::string& frame) {
    const fs::path p(frame);
    return p.is_absolute() ? p : manifest_path.parent_path() / p;
}

inline ThermalImage read_frame(const fs::path& path, FrameFormat format, const std::optional<TempRange>& range) {
    if (format == FrameFormat::Csv) return read_csv_image(path);
    if (!range) throw Error(Errc::ValidationError, "pgm16 frame needs a temperature range");
    return read_pgm16(path, *range);
}

inline void write_frame(const fs::path& path, const ThermalImage& img, FrameFormat format,
                        const std::optional<TempRange>& range) {
    if (format == FrameFormat::Csv) {
        write_csv_image(path, img);
        return;
    }
    if (!range) throw Error(Errc::ValidationError, "pgm16 frame needs a temperature range");
    write_pgm16(path, img, *range);
}

/// Reads every frame listed in the manifest and validates the stack.
inline FocalStack load_stack(const fs::path& manifest_path) {
    const auto manifest = read_manifest(manifest_path);
    FocalStack stack;
    stack.frames.reserve(manifest.frames.size());
    for (const auto& f : manifest.frames) {
        stack.frames.push_back(read_frame(resolve_frame(manifest_path, f), manifest.format, manifest.range));
    }
    stack.lens_positions = manifest.lens_positions;
    const auto report = validate_stack(stack);
    if (!report.ok()) throw Error(Errc::ValidationError, manifest_path.string() + ": " + report.summary());
    return stack;
}

// ---------------------------------------------------------------------------
// JSON documents

inline json to_json(const ProbePoint& p) { return json{{"x", p.x}, {"y", p.y}, {"true_temp", p.true_temp}}; }

inline json probes_to_json(std::span<const ProbePoint> probes) {
    json arr = json::array();
    for (const auto& p : probes) arr.push_back(to_json(p));
    return arr;
}

inline std::vector<ProbePoint> probes_from_json(const json& j, const std::string& source = "<probes>") {
    try {
        const json& arr = j.is_object() ? j.at("probes") : j;
        std::vector<ProbePoint> out;
        for (const auto& e : arr) {
            out.push_back({e.at("x").get<std::size_t>(), e.at("y").get<std::size_t>(), e.at("true_temp").get<double>()});
        }
        return out;
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, source + ": " + e.what());
    }
}

inline json to_json(const SelectionResult& s) {
    return json{{"peak_indices", s.peak_indices}, {"selected_indices", s.selected_indices}};
}

inline json to_json(const MetricsReport& r) {
    json j;
    j["cc"] = r.cc;
    j["rmse"] = r.rmse;
    j["mae"] = r.mae;
    j["hte"] = r.hte ? json(*r.hte) : json(nullptr);
    json frames = json::array();
    for (const auto& f : r.per_frame) frames.push_back(json{{"index", f.index}, {"rmse", f.rmse}, {"cc", f.cc}});
    j["per_frame"] = std::move(frames);
    return j;
}

inline json to_json(const Shape& shape) {
    if (const auto* rect = std::get_if<RectShape>(&shape)) {
        return json{{"type", "rect"}, {"x", rect->x}, {"y", rect->y}, {"width", rect->width}, {"height", rect->height}};
    }
    const auto& disc = std::get<DiscShape>(shape);
    return json{{"type", "disc"}, {"cx", disc.cx}, {"cy", disc.cy}, {"radius", disc.radius}};
}

inline Shape shape_from_json(const json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "rect") {
        return RectShape{j.at("x").get<std::size_t>(), j.at("y").get<std::size_t>(), j.at("width").get<std::size_t>(),
                         j.at("height").get<std::size_t>()};
    }
    if (type == "disc") {
        return DiscShape{j.at("cx").get<double>(), j.at("cy").get<double>(), j.at("radius").get<double>()};
    }
    throw Error(Errc::InvalidScene, "unknown shape type '" + type + "'");
}

inline json to_json(const SceneSpec& s) {
    json objects = json::array();
    for (const auto& o : s.objects) {
        objects.push_back(json{{"shape", to_json(o.shape)},
                               {"temp", o.temp},
                               {"focus_index", o.focus_index},
                               {"probe", o.probe},
                               {"texture", o.texture}});
    }
    json j{{"width", s.width},
           {"height", s.height},
           {"background_temp", s.background_temp},
           {"frames", s.frames},
           {"blur_slope", s.blur_slope},
           {"focus_tolerance", s.focus_tolerance},
           {"noise_sigma", s.noise_sigma},
           {"objects", std::move(objects)}};
    if (s.lens_step_mm) j["lens_step_mm"] = *s.lens_step_mm;
    return j;
}

/// A scene document either spells out every field or names a built-in
/// preset ("preset": 1..6) whose top-level fields it may override.
inline SceneSpec scene_from_json(const json& j, const std::string& source = "<scene>") {
    try {
        const json& doc = j.contains("scene") && j["scene"].is_object() ? j["scene"] : j;
        SceneSpec s = doc.contains("preset") ? preset_scene(doc["preset"].get<int>()) : SceneSpec{};
        if (doc.contains("width")) s.width = doc["width"].get<std::size_t>();
        if (doc.contains("height")) s.height = doc["height"].get<std::size_t>();
        if (doc.contains("background_temp")) s.background_temp = doc["background_temp"].get<double>();
        if (doc.contains("frames")) s.frames = doc["frames"].get<std::size_t>();
        if (doc.contains("blur_slope")) s.blur_slope = doc["blur_slope"].get<double>();
        if (doc.contains("focus_tolerance")) s.focus_tolerance = doc["focus_tolerance"].get<double>();
        if (doc.contains("noise_sigma")) s.noise_sigma = doc["noise_sigma"].get<double>();
        if (doc.contains("lens_step_mm")) {
            s.lens_step_mm = doc["lens_step_mm"].is_null() ? std::nullopt
                                                           : std::optional<double>(doc["lens_step_mm"].get<double>());
        }
        if (doc.contains("objects")) {
            s.objects.clear();
            for (const auto& o : doc["objects"]) {
                SceneObject obj;
                obj.shape = shape_from_json(o.at("shape"));
                obj.temp = o.at("temp").get<double>();
                obj.focus_index = o.at("focus_index").get<std::size_t>();
                obj.probe = o.value("probe", true);
                obj.texture = o.value("texture", 0.0);
                s.objects.push_back(std::move(obj));
            }
        }
        return s;
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidScene, source + ": " + e.what());
    }
}

} // namespace thermofuse
