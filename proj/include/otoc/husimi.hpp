#pragma once

// Husimi Q function of a pure Fock-space state on a rectangular phase-space grid.
//
// Q(q, p) = |<alpha|psi>|^2 / pi with alpha = (q + i p)/sqrt(2), so 0 <= Q <= 1/pi.
// The phase-space measure that normalizes Q is d^2 alpha = dq dp / 2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "otoc/error.hpp"
#include "otoc/fock.hpp"

namespace otoc {

/// Uniform grid, endpoints inclusive.
struct PhaseGrid {
    double q_min = -1.0;
    double q_max = 1.0;
    int n_q = 2;
    double p_min = -1.0;
    double p_max = 1.0;
    int n_p = 2;

    void validate() const {
        require(q_min < q_max && p_min < p_max, ErrorKind::InvalidArgument,
                "phase grid needs q_min < q_max and p_min < p_max");
        require(n_q >= 2 && n_p >= 2, ErrorKind::InvalidArgument,
                "phase grid needs at least 2 samples per axis");
    }

    double dq() const { return (q_max - q_min) / (n_q - 1); }
    double dp() const { return (p_max - p_min) / (n_p - 1); }
    double q_at(int i) const { return q_min + i * dq(); }
    double p_at(int j) const { return p_min + j * dp(); }

    /// Largest |alpha|^2 = (q^2 + p^2)/2 over the grid (attained at a corner).
    double max_alpha2() const {
        const double qm = std::max(std::abs(q_min), std::abs(q_max));
        const double pm = std::max(std::abs(p_min), std::abs(p_max));
        return 0.5 * (qm * qm + pm * pm);
    }

    friend bool operator==(const PhaseGrid&, const PhaseGrid&) = default;
};

/// Q values, row-major with the q index outermost: value(i, j) = Q(q_i, p_j).
class HusimiGrid {
public:
    HusimiGrid(PhaseGrid grid, std::vector<double> values)
        : grid_(grid), values_(std::move(values)) {
        grid_.validate();
        require(values_.size() == static_cast<std::size_t>(grid_.n_q) * grid_.n_p,
                ErrorKind::DimMismatch, "Husimi value count does not match grid");
    }

    const PhaseGrid& grid() const noexcept { return grid_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double value(int i, int j) const { return values_[static_cast<std::size_t>(i) * grid_.n_p + j]; }
    double max() const { return *std::max_element(values_.begin(), values_.end()); }

private:
    PhaseGrid grid_;
    std::vector<double> values_;
};

/// Grid points may reach out to twice the radius of the Fock disk |alpha|^2 <= D.
inline constexpr double kHusimiReachFactor = 4.0;

/// |<alpha|psi>|^2 / pi at one point; log-domain weights e^{-|alpha|^2/2} |alpha|^n / sqrt(n!).
inline double husimi_point(const FockState& state, double q, double p,
                           const std::vector<double>& half_lgamma) {
    const cplx alpha = cplx(q, p) / std::sqrt(2.0);
    const double r2 = std::norm(alpha);
    const CVector& c = state.amplitudes();
    if (r2 == 0.0) return std::norm(c(0)) / std::numbers::pi;
    const double log_r = 0.5 * std::log(r2);
    const cplx step = std::conj(alpha) / std::abs(alpha);
    cplx phase = 1.0;
    cplx acc = 0.0;
    for (Eigen::Index n = 0; n < c.size(); ++n) {
        const double mag = std::exp(-0.5 * r2 + static_cast<double>(n) * log_r -
                                    half_lgamma[static_cast<std::size_t>(n)]);
        acc += c(n) * mag * phase;
        phase *= step;
    }
    return std::norm(acc) / std::numbers::pi;
}

inline std::vector<double> half_lgamma_table(int d) {
    std::vector<double> t(static_cast<std::size_t>(d));
    for (int n = 0; n < d; ++n) t[static_cast<std::size_t>(n)] = 0.5 * std::lgamma(n + 1.0);
    return t;
}

/// Q on every grid point. Throws TailTooHeavy if the grid reaches beyond
/// |alpha|^2 = 4 D, i.e. far outside what the truncated basis can represent.
inline HusimiGrid husimi_q(const FockState& state, const PhaseGrid& grid) {
    grid.validate();
    const double reach = kHusimiReachFactor * state.size();
    if (grid.max_alpha2() > reach) {
        const double bound = std::sqrt(reach);
        fail(ErrorKind::TailTooHeavy,
             "Husimi grid reaches |alpha|^2=" + std::to_string(grid.max_alpha2()) +
                 " beyond the Fock support of D=" + std::to_string(state.size()) +
                 "; keep q^2 + p^2 <= " + std::to_string(2.0 * reach) + " (e.g. |q|,|p| <= " +
                 std::to_string(bound) + ")");
    }
    const auto lg = half_lgamma_table(state.size());
    std::vector<double> values(static_cast<std::size_t>(grid.n_q) * grid.n_p);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
    for (int i = 0; i < grid.n_q; ++i) {
        const double q = grid.q_at(i);
        for (int j = 0; j < grid.n_p; ++j) {
            values[static_cast<std::size_t>(i) * grid.n_p + j] =
                husimi_point(state, q, grid.p_at(j), lg);
        }
    }
    return {grid, std::move(values)};
}

namespace detail {

/// 2-D trapezoid of f(q, p) * Q(q, p) over the grid in dq dp.
template <typename F>
double trapezoid(const HusimiGrid& hg, F&& f) {
    const auto& g = hg.grid();
    double acc = 0.0;
    for (int i = 0; i < g.n_q; ++i) {
        const double wq = (i == 0 || i == g.n_q - 1) ? 0.5 : 1.0;
        const double q = g.q_at(i);
        for (int j = 0; j < g.n_p; ++j) {
            const double wp = (j == 0 || j == g.n_p - 1) ? 0.5 : 1.0;
            acc += wq * wp * f(q, g.p_at(j)) * hg.value(i, j);
        }
    }
    return acc * g.dq() * g.dp();
}

}  // namespace detail

/// Integral of Q over the covered region in the alpha plane (dq dp / 2); 1 for a grid
/// covering the whole packet.
inline double husimi_norm(const HusimiGrid& hg) {
    return 0.5 * detail::trapezoid(hg, [](double, double) { return 1.0; });
}

inline constexpr double kCentroidMinNorm = 0.99;

struct PhaseMoments {
    double mean_q = 0.0;
    double mean_p = 0.0;
    double var_q = 0.0;
    double var_p = 0.0;
    double cov_qp = 0.0;
};

namespace detail {

inline void require_captured(const HusimiGrid& hg, double norm) {
    if (norm < kCentroidMinNorm) {
        const auto& g = hg.grid();
        const double cq = 0.5 * (g.q_min + g.q_max), hq = 0.75 * (g.q_max - g.q_min);
        const double cp = 0.5 * (g.p_min + g.p_max), hp = 0.75 * (g.p_max - g.p_min);
        fail(ErrorKind::GridTooSmall,
             "grid captures only " + std::to_string(norm) +
                 " of the packet; try q in [" + std::to_string(cq - hq) + ", " +
                 std::to_string(cq + hq) + "], p in [" + std::to_string(cp - hp) + ", " +
                 std::to_string(cp + hp) + "]");
    }
}

}  // namespace detail

/// First and second moments of Q in (q, p), normalized by the captured mass.
inline PhaseMoments husimi_moments(const HusimiGrid& hg) {
    const double norm = husimi_norm(hg);
    detail::require_captured(hg, norm);
    const double mass = 2.0 * norm;
    PhaseMoments m;
    m.mean_q = detail::trapezoid(hg, [](double q, double) { return q; }) / mass;
    m.mean_p = detail::trapezoid(hg, [](double, double p) { return p; }) / mass;
    const double qq = m.mean_q, pp = m.mean_p;
    m.var_q = detail::trapezoid(hg, [qq](double q, double) { return (q - qq) * (q - qq); }) / mass;
    m.var_p = detail::trapezoid(hg, [pp](double, double p) { return (p - pp) * (p - pp); }) / mass;
    m.cov_qp = detail::trapezoid(hg, [qq, pp](double q, double p) { return (q - qq) * (p - pp); }) /
               mass;
    return m;
}

/// Normalized first moments; requires husimi_norm >= 0.99.
inline std::pair<double, double> husimi_centroid(const HusimiGrid& hg) {
    const double norm = husimi_norm(hg);
    detail::require_captured(hg, norm);
    const double mass = 2.0 * norm;
    return {detail::trapezoid(hg, [](double q, double) { return q; }) / mass,
            detail::trapezoid(hg, [](double, double p) { return p; }) / mass};
}

/// Strict local maxima (against all existing 8-neighbours) with Q >= rel * max Q.
inline int count_local_maxima(const HusimiGrid& hg, double rel = 0.1) {
    const auto& g = hg.grid();
    const double floor = rel * hg.max();
    int count = 0;
    for (int i = 0; i < g.n_q; ++i) {
        for (int j = 0; j < g.n_p; ++j) {
            const double v = hg.value(i, j);
            if (v < floor || v <= 0.0) continue;
            bool peak = true;
            for (int di = -1; di <= 1 && peak; ++di) {
                for (int dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    const int ii = i + di, jj = j + dj;
                    if (ii < 0 || jj < 0 || ii >= g.n_q || jj >= g.n_p) continue;
                    if (hg.value(ii, jj) >= v) {
                        peak = false;
                        break;
                    }
                }
            }
            if (peak) ++count;
        }
    }
    return count;
}

}  // namespace otoc
