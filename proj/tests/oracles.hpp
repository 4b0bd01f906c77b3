#pragma once

// Slow, independent reference implementations and random generators shared
// by the unit and acceptance suites. Nothing here calls library code other
// than the plain data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "thermofuse/core.hpp"

namespace oracle {

using thermofuse::ThermalImage;

struct Field {
    std::size_t w = 0;
    std::size_t h = 0;
    std::vector<double> v;

    double at_clamped(long x, long y) const {
        x = std::clamp<long>(x, 0, static_cast<long>(w) - 1);
        y = std::clamp<long>(y, 0, static_cast<long>(h) - 1);
        return v[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
    }
};

inline Field from_image(const ThermalImage& img) {
    return {img.width(), img.height(), std::vector<double>(img.values().begin(), img.values().end())};
}

// EOL with the 8-neighbour kernel spelled out term by term.
inline Field eol(const Field& in) {
    Field out{in.w, in.h, std::vector<double>(in.v.size())};
    for (long y = 0; y < static_cast<long>(in.h); ++y) {
        for (long x = 0; x < static_cast<long>(in.w); ++x) {
            const double corners = in.at_clamped(x - 1, y - 1) + in.at_clamped(x + 1, y - 1) +
                                   in.at_clamped(x - 1, y + 1) + in.at_clamped(x + 1, y + 1);
            const double edges = in.at_clamped(x, y - 1) + in.at_clamped(x, y + 1) + in.at_clamped(x - 1, y) +
                                 in.at_clamped(x + 1, y);
            const double r = 20.0 * in.at_clamped(x, y) - 4.0 * edges - corners;
            out.v[static_cast<std::size_t>(y) * in.w + static_cast<std::size_t>(x)] = r * r;
        }
    }
    return out;
}

// Windowed population mean times windowed population variance.
inline Field activity(const Field& e, std::size_t window) {
    const long half = static_cast<long>(window / 2);
    Field out{e.w, e.h, std::vector<double>(e.v.size())};
    std::vector<double> samples;
    for (long y = 0; y < static_cast<long>(e.h); ++y) {
        for (long x = 0; x < static_cast<long>(e.w); ++x) {
            samples.clear();
            for (long dy = -half; dy <= half; ++dy) {
                for (long dx = -half; dx <= half; ++dx) samples.push_back(e.at_clamped(x + dx, y + dy));
            }
            long double sum = 0;
            for (double s : samples) sum += s;
            const long double mean = sum / samples.size();
            long double ss = 0;
            for (double s : samples) ss += (s - mean) * (s - mean);
            const long double var = ss / samples.size();
            out.v[static_cast<std::size_t>(y) * e.w + static_cast<std::size_t>(x)] = static_cast<double>(mean * var);
        }
    }
    return out;
}

// Every strict local maximum (plateaus at their leftmost index) above the
// threshold, then greedy suppression from the largest value down.
inline std::vector<std::size_t> peaks(const std::vector<double>& c, double frac, std::size_t sep) {
    const std::size_t n = c.size();
    double gmax = 0.0;
    for (double v : c) gmax = std::max(gmax, v);
    if (gmax <= 0.0) return {};
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && c[i - 1] == c[i]) continue; // not the leftmost of a plateau
        std::size_t j = i;
        while (j + 1 < n && c[j + 1] == c[i]) ++j;
        const bool left = i == 0 || c[i - 1] < c[i];
        const bool right = j == n - 1 || c[j + 1] < c[i];
        if (left && right && c[i] > 0.0 && c[i] >= frac * gmax) cand.push_back(i);
    }
    std::vector<std::size_t> order = cand;
    for (std::size_t a = 0; a < order.size(); ++a) {
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            const bool swap = c[order[b]] > c[order[a]] || (c[order[b]] == c[order[a]] && order[b] < order[a]);
            if (swap) std::swap(order[a], order[b]);
        }
    }
    std::vector<std::size_t> kept;
    for (auto i : order) {
        bool ok = true;
        for (auto k : kept) {
            const std::size_t d = i > k ? i - k : k - i;
            if (d < sep) ok = false;
        }
        if (ok) kept.push_back(i);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

// All indices sorted by (|i - p|, i); the first `count` of them.
inline std::vector<std::size_t> nearest(std::size_t p, std::size_t count, std::size_t n) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    std::sort(all.begin(), all.end(), [p](std::size_t a, std::size_t b) {
        const std::size_t da = a > p ? a - p : p - a;
        const std::size_t db = b > p ? b - p : p - b;
        return da != db ? da < db : a < b;
    });
    all.resize(std::min(count, n));
    return all;
}

inline std::vector<std::size_t> selection(const std::vector<double>& c, double frac, std::size_t sep,
                                          std::size_t count) {
    std::vector<bool> mark(c.size(), false);
    const auto ps = peaks(c, frac, sep);
    for (auto p : ps) {
        for (auto i : nearest(p, count, c.size())) mark[i] = true;
    }
    if (ps.empty()) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < c.size(); ++i) {
            if (c[i] > c[best]) best = i;
        }
        mark[best] = true;
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (mark[i]) out.push_back(i);
    }
    return out;
}

// Per-pixel weighted average with uniform fallback, one pixel at a time.
inline std::vector<double> fuse(const std::vector<std::vector<double>>& frames,
                                const std::vector<std::vector<double>>& activity) {
    const std::size_t n = frames.size();
    const std::size_t px = frames.front().size();
    std::vector<double> out(px, 0.0);
    for (std::size_t p = 0; p < px; ++p) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += activity[i][p];
        for (std::size_t i = 0; i < n; ++i) {
            const double wgt = total > 0.0 ? activity[i][p] / total : 1.0 / static_cast<double>(n);
            out[p] += wgt * frames[i][p];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Generators

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    std::size_t index(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
    }
    bool coin() { return index(0, 1) == 1; }

    ThermalImage image(std::size_t w, std::size_t h, double lo = 15.0, double hi = 60.0) {
        std::vector<double> v(w * h);
        for (auto& x : v) x = uniform(lo, hi);
        return ThermalImage(w, h, std::move(v));
    }

    std::vector<double> curve(std::size_t n, double hi = 100.0) {
        std::vector<double> c(n);
        for (auto& x : c) x = coin() ? uniform(0.0, hi) : std::floor(uniform(0.0, 4.0));
        return c;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline std::filesystem::path scratch_dir(const std::string& name) {
#ifdef THERMOFUSE_TEST_TMP
    std::filesystem::path root = THERMOFUSE_TEST_TMP;
#else
    std::filesystem::path root = std::filesystem::temp_directory_path() / "thermofuse_tests";
#endif
    auto dir = root / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace oracle
