#pragma once

// Activity level of a frame: energy of Laplacian, then the windowed mean of
// that energy multiplied by its windowed (population) variance.

#include <cstddef>
#include <string>
#include <vector>

#include "thermofuse/core.hpp"

namespace thermofuse {

struct EolTag {};
/// Squared response of the 3x3 second-derivative kernel. Non-negative.
using EolMap = Grid<EolTag>;

/// 3x3 focus kernel, row-major: corners -1, edges -4, centre +20. Sums to zero.
inline constexpr double kLaplacianKernel[3][3] = {
    {-1.0, -4.0, -1.0},
    {-4.0, 20.0, -4.0},
    {-1.0, -4.0, -1.0},
};

/// Borders use replicate padding.
inline EolMap energy_of_laplacian(const ThermalImage& img) {
    const auto w = static_cast<std::ptrdiff_t>(img.width());
    const auto h = static_cast<std::ptrdiff_t>(img.height());
    EolMap out(img.width(), img.height());
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            double response = 0.0;
            for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
                for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
                    response += kLaplacianKernel[dy + 1][dx + 1] * img.clamped(x + dx, y + dy);
                }
            }
            out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = response * response;
        }
    }
    return out;
}

namespace detail {

// Copy of `src` with a replicate border of `r` pixels on every side.
template <class Tag>
std::vector<double> replicate_pad(const Grid<Tag>& src, std::size_t r) {
    const auto pw = src.width() + 2 * r;
    const auto ph = src.height() + 2 * r;
    std::vector<double> padded(pw * ph);
    const auto off = static_cast<std::ptrdiff_t>(r);
    for (std::size_t y = 0; y < ph; ++y) {
        for (std::size_t x = 0; x < pw; ++x) {
            padded[y * pw + x] = src.clamped(static_cast<std::ptrdiff_t>(x) - off, static_cast<std::ptrdiff_t>(y) - off);
        }
    }
    return padded;
}

} // namespace detail

/// Windowed mean x windowed population variance of an energy map, over a
/// centred odd window of side `window` with replicate padding.
inline ActivityMap activity_from_eol(const EolMap& eol, std::size_t window) {
    if (window < 3 || window % 2 == 0) {
        throw Error(Errc::InvalidConfig, "window must be odd and >= 3, got " + std::to_string(window));
    }
    if (window > eol.width() || window > eol.height()) {
        throw Error(Errc::WindowTooLarge, "window " + std::to_string(window) + " exceeds image " +
                                              std::to_string(eol.width()) + "x" + std::to_string(eol.height()));
    }
    const std::size_t r = window / 2;
    const std::size_t pw = eol.width() + 2 * r;
    const auto padded = detail::replicate_pad(eol, r);
    const double n = static_cast<double>(window * window);

    ActivityMap out(eol.width(), eol.height());
    for (std::size_t y = 0; y < eol.height(); ++y) {
        for (std::size_t x = 0; x < eol.width(); ++x) {
            // Window rows start at padded (x, y) since the pad offset equals r.
            double sum = 0.0;
            for (std::size_t j = 0; j < window; ++j) {
                const double* row = &padded[(y + j) * pw + x];
                for (std::size_t i = 0; i < window; ++i) sum += row[i];
            }
            const double mean = sum / n;
            double sq = 0.0;
            for (std::size_t j = 0; j < window; ++j) {
                const double* row = &padded[(y + j) * pw + x];
                for (std::size_t i = 0; i < window; ++i) {
                    const double d = row[i] - mean;
                    sq += d * d;
                }
            }
            out(x, y) = mean * (sq / n);
        }
    }
    return out;
}

inline ActivityMap compute_activity(const ThermalImage& img, const FusionConfig& cfg) {
    validate_config(cfg);
    if (cfg.window > img.width() || cfg.window > img.height()) {
        throw Error(Errc::WindowTooLarge, "window " + std::to_string(cfg.window) + " exceeds image " +
                                              std::to_string(img.width()) + "x" + std::to_string(img.height()));
    }
    return activity_from_eol(energy_of_laplacian(img), cfg.window);
}

} // namespace thermofuse
