#pragma once

// Pixel-level weighted averaging of focal-stack frames, with optional
// reduction of the stack to the frames around max-activity peaks.

#include <cstddef>
#include <span>
#include <vector>

#include "thermofuse/activity.hpp"
#include "thermofuse/core.hpp"
#include "thermofuse/parallel.hpp"
#include "thermofuse/select.hpp"

namespace thermofuse {

/// Per-frame weights; at every pixel they lie in [0, 1] and sum to 1.
struct WeightField {
    std::vector<WeightMap> weights;

    std::size_t size() const noexcept { return weights.size(); }
};

inline WeightField normalize_weights(std::span<const ActivityMap> maps,
                                     ZeroWeightPolicy policy = ZeroWeightPolicy::UniformFallback) {
    if (maps.empty()) throw Error(Errc::EmptyStack, "no activity maps to normalize");
    const auto w = maps.front().width();
    const auto h = maps.front().height();
    for (const auto& m : maps) {
        if (!m.same_shape(maps.front())) throw Error(Errc::DimensionMismatch, "activity maps differ in size");
    }
    const std::size_t n = maps.size();
    WeightField field;
    field.weights.assign(n, WeightMap(w, h));
    const double uniform = 1.0 / static_cast<double>(n);
    for (std::size_t p = 0; p < w * h; ++p) {
        double total = 0.0;
        for (const auto& m : maps) total += m.values()[p];
        if (total > 0.0) {
            for (std::size_t i = 0; i < n; ++i) field.weights[i].values()[p] = maps[i].values()[p] / total;
        } else if (policy == ZeroWeightPolicy::UniformFallback) {
            for (std::size_t i = 0; i < n; ++i) field.weights[i].values()[p] = uniform;
        } else {
            field.weights[0].values()[p] = 1.0;
        }
    }
    return field;
}

inline ThermalImage fuse_stack(std::span<const ThermalImage> frames, const WeightField& weights) {
    if (frames.empty()) throw Error(Errc::EmptyStack, "no frames to fuse");
    if (frames.size() != weights.size()) {
        throw Error(Errc::DimensionMismatch, std::to_string(frames.size()) + " frames but " +
                                                 std::to_string(weights.size()) + " weight maps");
    }
    const auto& first = frames.front();
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (!frames[i].same_shape(first) || !weights.weights[i].same_shape(first)) {
            throw Error(Errc::DimensionMismatch, "frame or weight map " + std::to_string(i) + " differs in size");
        }
    }
    ThermalImage fused(first.width(), first.height());
    auto out = fused.values();
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto img = frames[i].values();
        const auto wt = weights.weights[i].values();
        for (std::size_t p = 0; p < out.size(); ++p) out[p] += wt[p] * img[p];
    }
    return fused;
}

struct FusionResult {
    ThermalImage fused;
    SelectionResult selection;
    ActivityCurve curve;
};

/// Activity of every frame, computed on up to `jobs` threads (0 = all cores).
inline std::vector<ActivityMap> compute_stack_activity(const FocalStack& stack, const FusionConfig& cfg,
                                                       unsigned jobs = 1) {
    validate_config(cfg);
    std::vector<ActivityMap> maps(stack.size());
    parallel_for(stack.size(), jobs, [&](std::size_t i) { maps[i] = compute_activity(stack.frames[i], cfg); });
    return maps;
}

/// Full pipeline: activity, optional pre-selection around curve peaks,
/// weight normalization and combination. Without pre-selection every frame
/// enters the combination; the selection is still reported.
inline FusionResult fuse_pipeline(const FocalStack& stack, const FusionConfig& cfg, bool preselect,
                                  unsigned jobs = 1) {
    require_valid(stack);
    validate_config(cfg);
    auto maps = compute_stack_activity(stack, cfg, jobs);

    FusionResult result;
    result.curve = max_activity_curve(maps);
    result.selection = select_frames(result.curve, cfg);

    if (!preselect) {
        result.fused = fuse_stack(stack.frames, normalize_weights(maps, cfg.zero_weight_policy));
        return result;
    }
    std::vector<ThermalImage> frames;
    std::vector<ActivityMap> kept;
    for (auto i : result.selection.selected_indices) {
        frames.push_back(stack.frames[i]);
        kept.push_back(std::move(maps[i]));
    }
    result.fused = fuse_stack(frames, normalize_weights(kept, cfg.zero_weight_policy));
    return result;
}

} // namespace thermofuse
