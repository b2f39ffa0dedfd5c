#pragma once

// Quantities extracted from sampled series: log-linear growth fits, fit-window
// search, Ehrenfest time and the quantum/classical-limit correspondence time.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "otoc/error.hpp"
#include "otoc/series.hpp"

namespace otoc {

struct ExpFit {
    double rate = 0.0;           ///< slope of ln(values) against t
    double log_intercept = 0.0;  ///< ln(values) at t = 0 on the fitted line
    double r_squared = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    int samples = 0;
};

inline constexpr int kMinFitSamples = 5;

namespace detail {

/// Index range [first, last] of samples with lo <= t <= hi (small tolerance on both ends).
inline std::pair<std::size_t, std::size_t> window_indices(const TimeSeries& s, double lo,
                                                          double hi) {
    const double eps = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
    std::size_t first = s.size(), last = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double t = s.time(i);
        if (t >= lo - eps && t <= hi + eps) {
            first = std::min(first, i);
            last = i;
        }
    }
    return {first, last};
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least squares y = a + b x using centred sums.
inline LineFit fit_line(const double* x, const double* y, std::size_t n) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
    }
    f.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return f;
}

inline void require_positive(const TimeSeries& s, std::size_t first, std::size_t last) {
    for (std::size_t i = first; i <= last; ++i) {
        if (!(s.value(i) > 0.0)) {
            fail(ErrorKind::NonPositiveValues, "series '" + s.label() + "' has value " +
                                                   std::to_string(s.value(i)) + " at t=" +
                                                   std::to_string(s.time(i)));
        }
    }
}

}  // namespace detail

/// Least-squares line through ln(values) for samples with t in [lo, hi].
inline ExpFit fit_exponential(const TimeSeries& series, std::pair<double, double> window) {
    const auto [lo, hi] = window;
    require(lo < hi, ErrorKind::InvalidArgument, "fit window needs t_lo < t_hi");
    const auto [first, last] = detail::window_indices(series, lo, hi);
    if (first >= series.size() || last + 1 - first < static_cast<std::size_t>(kMinFitSamples)) {
        fail(ErrorKind::WindowTooSparse, "fit window [" + std::to_string(lo) + ", " +
                                             std::to_string(hi) + "] holds fewer than 5 samples");
    }
    detail::require_positive(series, first, last);
    const std::size_t n = last + 1 - first;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = std::log(series.value(first + i));
    const auto line = detail::fit_line(series.times().data() + first, y.data(), n);
    return {line.slope, line.intercept, line.r_squared, lo, hi, static_cast<int>(n)};
}

/// Contiguous sample window of span >= min_span (and >= 5 samples) inside `bounds` with the
/// highest r^2 of the log-linear fit. Windows within 1e-12 of the best r^2 are tied and the
/// longest of them wins.
inline std::pair<double, double> auto_window(
    const TimeSeries& series, double min_span,
    std::pair<double, double> bounds = {-std::numeric_limits<double>::infinity(),
                                        std::numeric_limits<double>::infinity()}) {
    require(min_span > 0.0, ErrorKind::InvalidArgument, "min_span must be > 0");
    const auto [first, last] = detail::window_indices(series, bounds.first, bounds.second);
    if (first >= series.size() || last <= first) {
        fail(ErrorKind::WindowTooSparse, "no samples inside the auto-window bounds");
    }
    detail::require_positive(series, first, last);

    const std::size_t n = last + 1 - first;
    const double* t = series.times().data() + first;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = std::log(series.value(first + i));

    // Prefix sums of the shifted data keep each window fit O(1).
    const double t0 = t[0], y0 = y[0];
    std::vector<double> sx(n + 1, 0.0), sy(n + 1, 0.0), sxx(n + 1, 0.0), sxy(n + 1, 0.0),
        syy(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = t[i] - t0, v = y[i] - y0;
        sx[i + 1] = sx[i] + x;
        sy[i + 1] = sy[i] + v;
        sxx[i + 1] = sxx[i] + x * x;
        sxy[i + 1] = sxy[i] + x * v;
        syy[i + 1] = syy[i] + v * v;
    }
    auto r2 = [&](std::size_t i, std::size_t j) {
        const double m = static_cast<double>(j - i + 1);
        const double ax = sx[j + 1] - sx[i], ay = sy[j + 1] - sy[i];
        const double cxx = (sxx[j + 1] - sxx[i]) - ax * ax / m;
        const double cxy = (sxy[j + 1] - sxy[i]) - ax * ay / m;
        const double cyy = (syy[j + 1] - syy[i]) - ay * ay / m;
        if (cyy <= 0.0) return 1.0;
        return std::clamp(cxy * cxy / (cxx * cyy), 0.0, 1.0);
    };

    const double span_eps = 1e-12 * std::max(1.0, std::abs(t[n - 1]));
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + kMinFitSamples - 1; j < n; ++j) {
            if (t[j] - t[i] < min_span - span_eps) continue;
            best = std::max(best, r2(i, j));
        }
    }
    if (best < 0.0) {
        fail(ErrorKind::WindowTooSparse,
             "no window of span " + std::to_string(min_span) + " with 5 samples fits the bounds");
    }
    std::pair<std::size_t, std::size_t> pick{0, 0};
    double pick_span = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + kMinFitSamples - 1; j < n; ++j) {
            const double span = t[j] - t[i];
            if (span < min_span - span_eps) continue;
            if (r2(i, j) >= best - 1e-12 && span > pick_span) {
                pick = {i, j};
                pick_span = span;
            }
        }
    }
    return {t[pick.first], t[pick.second]};
}

/// tau = ln(N_p) / rate
inline double ehrenfest_time(double rate, double n_p) {
    require(rate > 0.0 && std::isfinite(rate), ErrorKind::InvalidRate,
            "Ehrenfest time needs a positive growth rate, got " + std::to_string(rate));
    require(n_p >= 2.0, ErrorKind::InvalidArgument, "Ehrenfest time needs N_p >= 2");
    return std::log(n_p) / rate;
}

struct Timescales {
    double ehrenfest = 0.0;
    std::optional<double> correspondence;
};

/// First time with |run - reference| > epsilon * max(1, |reference|); nullopt if never.
inline std::optional<double> correspondence_time(const TimeSeries& run,
                                                 const TimeSeries& reference, double epsilon) {
    require(epsilon > 0.0, ErrorKind::InvalidArgument, "epsilon must be > 0");
    if (run.size() != reference.size()) {
        fail(ErrorKind::GridMismatch, "series lengths differ");
    }
    for (std::size_t i = 0; i < run.size(); ++i) {
        const double t = run.time(i);
        if (std::abs(t - reference.time(i)) > 1e-12 * std::max(1.0, std::abs(t))) {
            fail(ErrorKind::GridMismatch, "time grids differ at sample " + std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < run.size(); ++i) {
        const double ref = reference.value(i);
        if (std::abs(run.value(i) - ref) > epsilon * std::max(1.0, std::abs(ref))) {
            return run.time(i);
        }
    }
    return std::nullopt;
}

}  // namespace otoc
