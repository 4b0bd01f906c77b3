#pragma once

// Domain types shared by every thermofuse module: value-semantic grids,
// focal stacks, fusion configuration and the library error type.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace thermofuse {

enum class Errc {
    EmptyStack,
    WindowTooLarge,
    InvalidConfig,
    DimensionMismatch,
    DegenerateInput,
    ProbeOutOfBounds,
    NonPositiveInput,
    InvalidScene,
    FileNotFound,
    ParseError,
    ValidationError,
};

inline const char* to_string(Errc code) noexcept {
    switch (code) {
    case Errc::EmptyStack: return "EmptyStack";
    case Errc::WindowTooLarge: return "WindowTooLarge";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::ProbeOutOfBounds: return "ProbeOutOfBounds";
    case Errc::NonPositiveInput: return "NonPositiveInput";
    case Errc::InvalidScene: return "InvalidScene";
    case Errc::FileNotFound: return "FileNotFound";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Row-major 2D grid of doubles. The tag parameter keeps temperatures,
/// focus energies, activities and weights from being mixed up.
template <class Tag>
class Grid {
public:
    Grid() = default;

    Grid(std::size_t width, std::size_t height, double fill = 0.0)
        : width_(width), height_(height), values_(width * height, fill) {}

    Grid(std::size_t width, std::size_t height, std::vector<double> values)
        : width_(width), height_(height), values_(std::move(values)) {
        if (values_.size() != width_ * height_) {
            throw Error(Errc::DimensionMismatch,
                        "grid of " + std::to_string(width_) + "x" + std::to_string(height_) +
                            " needs " + std::to_string(width_ * height_) + " values, got " +
                            std::to_string(values_.size()));
        }
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double operator()(std::size_t x, std::size_t y) const noexcept { return values_[y * width_ + x]; }
    double& operator()(std::size_t x, std::size_t y) noexcept { return values_[y * width_ + x]; }

    /// Replicate-padded access: coordinates outside the grid clamp to the nearest edge.
    double clamped(std::ptrdiff_t x, std::ptrdiff_t y) const noexcept {
        const auto w = static_cast<std::ptrdiff_t>(width_);
        const auto h = static_cast<std::ptrdiff_t>(height_);
        x = x < 0 ? 0 : (x >= w ? w - 1 : x);
        y = y < 0 ? 0 : (y >= h ? h - 1 : y);
        return values_[static_cast<std::size_t>(y * w + x)];
    }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    template <class OtherTag>
    bool same_shape(const Grid<OtherTag>& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> values_;
};

struct TemperatureTag {};
struct ActivityTag {};
struct WeightTag {};

/// Radiometric image: temperatures in degrees Celsius.
using ThermalImage = Grid<TemperatureTag>;
/// Per-pixel activity level, non-negative.
using ActivityMap = Grid<ActivityTag>;
using WeightMap = Grid<WeightTag>;

/// Frames ordered by lens position. Lens positions (mm) are optional metadata.
struct FocalStack {
    std::vector<ThermalImage> frames;
    std::optional<std::vector<double>> lens_positions;

    std::size_t size() const noexcept { return frames.size(); }
    bool empty() const noexcept { return frames.empty(); }
    std::size_t width() const noexcept { return frames.empty() ? 0 : frames.front().width(); }
    std::size_t height() const noexcept { return frames.empty() ? 0 : frames.front().height(); }
};

enum class ZeroWeightPolicy {
    UniformFallback,
    MaxActivityWinner,
};

struct FusionConfig {
    std::size_t window = 5;
    std::size_t frames_per_peak = 4;
    std::size_t peak_min_separation = 8;
    double peak_threshold_frac = 0.10;
    ZeroWeightPolicy zero_weight_policy = ZeroWeightPolicy::UniformFallback;
};

inline void validate_config(const FusionConfig& cfg) {
    if (cfg.window < 3 || cfg.window % 2 == 0) {
        throw Error(Errc::InvalidConfig, "window must be odd and >= 3, got " + std::to_string(cfg.window));
    }
    if (cfg.frames_per_peak < 1) {
        throw Error(Errc::InvalidConfig, "frames_per_peak must be >= 1");
    }
    if (cfg.peak_min_separation < 1) {
        throw Error(Errc::InvalidConfig, "peak_min_separation must be >= 1");
    }
    if (!(cfg.peak_threshold_frac > 0.0 && cfg.peak_threshold_frac <= 1.0)) {
        throw Error(Errc::InvalidConfig, "peak_threshold_frac must lie in (0, 1]");
    }
}

struct Violation {
    std::optional<std::size_t> frame;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }

    std::string summary() const {
        std::string out;
        for (const auto& v : violations) {
            if (!out.empty()) out += "; ";
            out += v.message;
        }
        return out;
    }
};

/// Checks every FocalStack and ThermalImage invariant. Violations are
/// reported as data; frame dimensions are compared against frame 0.
inline ValidationReport validate_stack(const FocalStack& stack) {
    ValidationReport report;
    if (stack.frames.empty()) {
        report.violations.push_back({std::nullopt, "empty stack"});
        return report;
    }
    const auto w = stack.frames.front().width();
    const auto h = stack.frames.front().height();
    for (std::size_t i = 0; i < stack.frames.size(); ++i) {
        const auto& frame = stack.frames[i];
        if (frame.width() == 0 || frame.height() == 0) {
            report.violations.push_back({i, "empty frame at frame " + std::to_string(i)});
            continue;
        }
        if (frame.width() != w || frame.height() != h) {
            report.violations.push_back(
                {i, "dimension mismatch at frame " + std::to_string(i) + ": " + std::to_string(frame.width()) +
                        "x" + std::to_string(frame.height()) + ", expected " + std::to_string(w) + "x" +
                        std::to_string(h)});
        }
        std::size_t bad = 0;
        std::size_t first = 0;
        const auto values = frame.values();
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (!std::isfinite(values[k])) {
                if (bad == 0) first = k;
                ++bad;
            }
        }
        if (bad > 0) {
            const auto x = first % frame.width();
            const auto y = first / frame.width();
            std::string msg = "non-finite value at frame " + std::to_string(i) + ", pixel (" + std::to_string(x) +
                              "," + std::to_string(y) + ")";
            if (bad > 1) msg += " and " + std::to_string(bad - 1) + " more";
            report.violations.push_back({i, std::move(msg)});
        }
    }
    if (stack.lens_positions) {
        const auto& lp = *stack.lens_positions;
        if (lp.size() != stack.frames.size()) {
            report.violations.push_back({std::nullopt, "lens position count " + std::to_string(lp.size()) +
                                                           " differs from frame count " +
                                                           std::to_string(stack.frames.size())});
        }
        for (std::size_t i = 1; i < lp.size(); ++i) {
            if (!(lp[i] > lp[i - 1])) {
                report.violations.push_back(
                    {i, "lens positions not strictly increasing at frame " + std::to_string(i)});
            }
        }
    }
    return report;
}

/// Throws ValidationError carrying every violation if the stack is invalid.
inline void require_valid(const FocalStack& stack) {
    if (stack.frames.empty()) throw Error(Errc::EmptyStack, "focal stack has no frames");
    auto report = validate_stack(stack);
    if (!report.ok()) throw Error(Errc::ValidationError, report.summary());
}

} // namespace thermofuse
