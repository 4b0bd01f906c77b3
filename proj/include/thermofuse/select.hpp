#pragma once

// Frame pre-selection: the max-activity curve over the stack, its peaks, and
// the frames kept around each peak.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "thermofuse/core.hpp"

namespace thermofuse {

/// Maximum activity of each frame, index-aligned with the stack.
struct ActivityCurve {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
};

struct SelectionResult {
    std::vector<std::size_t> peak_indices;
    std::vector<std::size_t> selected_indices;
};

inline ActivityCurve max_activity_curve(std::span<const ActivityMap> maps) {
    if (maps.empty()) throw Error(Errc::EmptyStack, "no activity maps");
    ActivityCurve curve;
    curve.values.reserve(maps.size());
    for (const auto& m : maps) {
        if (!m.same_shape(maps.front())) {
            throw Error(Errc::DimensionMismatch, "activity maps differ in size");
        }
        const auto v = m.values();
        curve.values.push_back(v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()));
    }
    return curve;
}

/// Strict local maxima (a plateau counts once, at its leftmost index) that
/// reach `peak_threshold_frac` of the global maximum, thinned greedily from
/// the highest so accepted peaks are at least `peak_min_separation` apart.
inline std::vector<std::size_t> find_peaks(const ActivityCurve& curve, const FusionConfig& cfg) {
    const auto& v = curve.values;
    const std::size_t n = v.size();
    if (n == 0) return {};
    const double global_max = *std::max_element(v.begin(), v.end());
    if (!(global_max > 0.0)) return {};
    const double threshold = cfg.peak_threshold_frac * global_max;

    std::vector<std::size_t> candidates;
    for (std::size_t a = 0; a < n;) {
        std::size_t b = a;
        while (b + 1 < n && v[b + 1] == v[a]) ++b;
        const bool left_lower = a == 0 || v[a - 1] < v[a];
        const bool right_lower = b + 1 == n || v[b + 1] < v[a];
        if (left_lower && right_lower && v[a] > 0.0 && v[a] >= threshold) candidates.push_back(a);
        a = b + 1;
    }

    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t l, std::size_t r) { return v[l] > v[r]; });
    std::vector<std::size_t> accepted;
    for (auto c : candidates) {
        const bool clear = std::all_of(accepted.begin(), accepted.end(), [&](std::size_t p) {
            const std::size_t d = c > p ? c - p : p - c;
            return d >= cfg.peak_min_separation;
        });
        if (clear) accepted.push_back(c);
    }
    std::sort(accepted.begin(), accepted.end());
    return accepted;
}

/// The `count` indices in [0, n) nearest to `peak`, ordered by (distance, index).
inline std::vector<std::size_t> frames_around(std::size_t peak, std::size_t count, std::size_t n) {
    const std::size_t limit = std::min(count, n);
    std::vector<std::size_t> picked;
    picked.reserve(limit);
    if (peak >= n || limit == 0) return picked;
    picked.push_back(peak);
    for (std::size_t d = 1; picked.size() < limit; ++d) {
        if (peak >= d) picked.push_back(peak - d);
        if (picked.size() < limit && peak + d < n) picked.push_back(peak + d);
    }
    return picked;
}

inline SelectionResult select_frames(const ActivityCurve& curve, const FusionConfig& cfg) {
    if (curve.size() == 0) throw Error(Errc::EmptyStack, "empty activity curve");
    SelectionResult result;
    result.peak_indices = find_peaks(curve, cfg);
    std::vector<std::size_t> selected;
    for (auto p : result.peak_indices) {
        auto around = frames_around(p, cfg.frames_per_peak, curve.size());
        selected.insert(selected.end(), around.begin(), around.end());
    }
    if (selected.empty()) {
        const auto it = std::max_element(curve.values.begin(), curve.values.end());
        selected.push_back(static_cast<std::size_t>(std::distance(curve.values.begin(), it)));
    }
    std::sort(selected.begin(), selected.end());
    selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
    result.selected_indices = std::move(selected);
    return result;
}

} // namespace thermofuse
