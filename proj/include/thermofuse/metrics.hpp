#pragma once

// Reference-based fusion quality measures and probe temperature errors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thermofuse/core.hpp"

namespace thermofuse {

/// A measurement point with the object's true temperature.
struct ProbePoint {
    std::size_t x = 0;
    std::size_t y = 0;
    double true_temp = 0.0;
};

struct FrameScore {
    std::size_t index = 0;
    double rmse = 0.0;
    double cc = 0.0;
};

struct MetricsReport {
    double cc = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    std::optional<double> hte;
    std::vector<FrameScore> per_frame;
};

inline constexpr std::size_t kDefaultProbeRadius = 2;

namespace detail {

inline void require_same_shape(const ThermalImage& a, const ThermalImage& b) {
    if (!a.same_shape(b)) {
        throw Error(Errc::DimensionMismatch, std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                                                 std::to_string(b.width()) + "x" + std::to_string(b.height()));
    }
}

} // namespace detail

/// Uncentred fusion correlation: 2 sum(RF) / (sum(R^2) + sum(F^2)).
/// Not Pearson; no mean is subtracted.
inline double cross_correlation(const ThermalImage& ref, const ThermalImage& fused) {
    detail::require_same_shape(ref, fused);
    double rf = 0.0, rr = 0.0, ff = 0.0;
    const auto r = ref.values();
    const auto f = fused.values();
    for (std::size_t i = 0; i < r.size(); ++i) {
        rf += r[i] * f[i];
        rr += r[i] * r[i];
        ff += f[i] * f[i];
    }
    const double denom = rr + ff;
    if (!(denom > 0.0)) throw Error(Errc::DegenerateInput, "both images are identically zero");
    return 2.0 * rf / denom;
}

inline double rmse(const ThermalImage& ref, const ThermalImage& fused) {
    detail::require_same_shape(ref, fused);
    const auto r = ref.values();
    const auto f = fused.values();
    double sum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double d = r[i] - f[i];
        sum += d * d;
    }
    return r.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(r.size()));
}

/// Mean absolute pixel difference over the flattened image.
inline double mae(const ThermalImage& ref, const ThermalImage& fused) {
    detail::require_same_shape(ref, fused);
    const auto r = ref.values();
    const auto f = fused.values();
    double sum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) sum += std::abs(r[i] - f[i]);
    return r.empty() ? 0.0 : sum / static_cast<double>(r.size());
}

/// Temperature read at a probe: the hottest pixel within the (2r+1)^2
/// window centred on it, clipped to the image.
inline double probe_reading(const ThermalImage& image, const ProbePoint& probe,
                            std::size_t radius = kDefaultProbeRadius) {
    if (probe.x >= image.width() || probe.y >= image.height()) {
        throw Error(Errc::ProbeOutOfBounds, "probe (" + std::to_string(probe.x) + "," + std::to_string(probe.y) +
                                                ") outside " + std::to_string(image.width()) + "x" +
                                                std::to_string(image.height()));
    }
    const std::size_t x0 = probe.x >= radius ? probe.x - radius : 0;
    const std::size_t y0 = probe.y >= radius ? probe.y - radius : 0;
    const std::size_t x1 = std::min(image.width() - 1, probe.x + radius);
    const std::size_t y1 = std::min(image.height() - 1, probe.y + radius);
    double best = image(x0, y0);
    for (std::size_t y = y0; y <= y1; ++y) {
        for (std::size_t x = x0; x <= x1; ++x) best = std::max(best, image(x, y));
    }
    return best;
}

/// Mean absolute probe error. With two probes this is the half total error
/// (e1 + e2) / 2; more objects generalize it to the arithmetic mean.
inline double hte(const ThermalImage& image, std::span<const ProbePoint> probes,
                  std::size_t radius = kDefaultProbeRadius) {
    if (probes.empty()) throw Error(Errc::ProbeOutOfBounds, "no probes given");
    double total = 0.0;
    for (const auto& p : probes) total += std::abs(probe_reading(image, p, radius) - p.true_temp);
    return total / static_cast<double>(probes.size());
}

/// RMSE and CC of every stack frame against `reference`.
inline std::vector<FrameScore> compare_against_stack(const FocalStack& stack, const ThermalImage& reference) {
    std::vector<FrameScore> scores;
    scores.reserve(stack.size());
    for (std::size_t i = 0; i < stack.size(); ++i) {
        scores.push_back({i, rmse(reference, stack.frames[i]), cross_correlation(reference, stack.frames[i])});
    }
    return scores;
}

inline MetricsReport evaluate(const ThermalImage& ref, const ThermalImage& fused,
                              std::span<const ProbePoint> probes = {},
                              std::size_t probe_radius = kDefaultProbeRadius) {
    MetricsReport report;
    report.cc = cross_correlation(ref, fused);
    report.rmse = rmse(ref, fused);
    report.mae = mae(ref, fused);
    if (!probes.empty()) report.hte = hte(fused, probes, probe_radius);
    return report;
}

} // namespace thermofuse
