#pragma once

// Classical flows of the two inverted oscillators.
//
//   IHO:  H = p^2/2 - q^2/2                       (m = omega = 1)
//   HIHO: H = P^2 - gamma^2 Q^2/4 + g Q^4 + gamma^4/(64 g)
//
// Fixed-step RK4 integration with an energy-drift guard, linearization at a
// point, Benettin tangent-space Lyapunov exponents and IHO manifold labels.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "otoc/error.hpp"
#include "otoc/fock.hpp"

namespace otoc {

struct ClassicalState {
    double q = 0.0;
    double p = 0.0;

    friend bool operator==(const ClassicalState&, const ClassicalState&) = default;
};

inline double distance(const ClassicalState& a, const ClassicalState& b) {
    return std::hypot(a.q - b.q, a.p - b.p);
}

enum class SystemKind { IHO, HIHO };

inline std::string to_string(SystemKind k) { return k == SystemKind::IHO ? "IHO" : "HIHO"; }

class HamSystem {
public:
    static HamSystem iho() { return HamSystem(SystemKind::IHO, std::nullopt); }
    static HamSystem hiho(const HihoParams& params) { return HamSystem(SystemKind::HIHO, params); }

    SystemKind kind() const noexcept { return kind_; }
    const HihoParams& params() const {
        require(params_.has_value(), ErrorKind::InvalidArgument, "IHO has no HIHO parameters");
        return *params_;
    }

private:
    HamSystem(SystemKind kind, std::optional<HihoParams> params) : kind_(kind), params_(params) {}
    SystemKind kind_;
    std::optional<HihoParams> params_;
};

inline double energy(const HamSystem& sys, const ClassicalState& s) {
    if (sys.kind() == SystemKind::IHO) return 0.5 * (s.p * s.p - s.q * s.q);
    const auto& hp = sys.params();
    const double q2 = s.q * s.q;
    return s.p * s.p - 0.25 * hp.gamma() * hp.gamma() * q2 + hp.g() * q2 * q2 + hp.offset();
}

/// Sum of the magnitudes of the terms of H; sets the round-off floor of energy checks.
inline double energy_scale(const HamSystem& sys, const ClassicalState& s) {
    if (sys.kind() == SystemKind::IHO) return 0.5 * (s.p * s.p + s.q * s.q);
    const auto& hp = sys.params();
    const double q2 = s.q * s.q;
    return s.p * s.p + 0.25 * hp.gamma() * hp.gamma() * q2 + hp.g() * q2 * q2 + hp.offset();
}

struct PhaseVelocity {
    double dq = 0.0;
    double dp = 0.0;
};

/// (dH/dp, -dH/dq)
inline PhaseVelocity hamilton_rhs(const HamSystem& sys, const ClassicalState& s) {
    if (sys.kind() == SystemKind::IHO) return {s.p, s.q};
    const auto& hp = sys.params();
    return {2.0 * s.p, 0.5 * hp.gamma() * hp.gamma() * s.q - 4.0 * hp.g() * s.q * s.q * s.q};
}

/// Closed-form IHO flow: q(t) = q0 cosh t + p0 sinh t, p(t) = p0 cosh t + q0 sinh t.
inline ClassicalState flow_iho_analytic(const ClassicalState& s0, double t) {
    const double c = std::cosh(t), sh = std::sinh(t);
    return {s0.q * c + s0.p * sh, s0.p * c + s0.q * sh};
}

inline ClassicalState rk4_step(const HamSystem& sys, const ClassicalState& s, double h) {
    const auto k1 = hamilton_rhs(sys, s);
    const auto k2 = hamilton_rhs(sys, {s.q + 0.5 * h * k1.dq, s.p + 0.5 * h * k1.dp});
    const auto k3 = hamilton_rhs(sys, {s.q + 0.5 * h * k2.dq, s.p + 0.5 * h * k2.dp});
    const auto k4 = hamilton_rhs(sys, {s.q + h * k3.dq, s.p + h * k3.dp});
    return {s.q + h / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq),
            s.p + h / 6.0 * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp)};
}

struct Trajectory {
    std::vector<double> times;
    std::vector<ClassicalState> states;
    double energy0 = 0.0;

    std::size_t size() const noexcept { return times.size(); }
    const ClassicalState& back() const { return states.back(); }
};

inline constexpr double kEnergyDriftTol = 1e-8;

namespace detail {

inline void check_drift(const HamSystem& sys, const ClassicalState& s, double e0, double t) {
    const double scale = std::max({1.0, std::abs(e0), energy_scale(sys, s)});
    const double drift = std::abs(energy(sys, s) - e0);
    if (!(drift <= kEnergyDriftTol * scale)) {
        fail(ErrorKind::StepTooLarge, "energy drift " + std::to_string(drift) + " at t=" +
                                          std::to_string(t) + " exceeds 1e-8 relative; reduce dt");
    }
}

/// Integrates over [0, duration] (duration may be negative) with |h| <= dt, landing
/// exactly on the endpoint.
inline Trajectory integrate_signed(const HamSystem& sys, const ClassicalState& s0, double duration,
                                   double dt, int record_every) {
    require(dt > 0.0 && std::isfinite(dt), ErrorKind::InvalidArgument, "dt must be > 0");
    require(record_every >= 1, ErrorKind::InvalidArgument, "record_every must be >= 1");
    const long steps = std::max(1L, static_cast<long>(std::ceil(std::abs(duration) / dt - 1e-9)));
    const double h = duration / static_cast<double>(steps);
    Trajectory tr;
    tr.energy0 = energy(sys, s0);
    tr.times.push_back(0.0);
    tr.states.push_back(s0);
    ClassicalState s = s0;
    for (long k = 1; k <= steps; ++k) {
        s = rk4_step(sys, s, h);
        const double t = static_cast<double>(k) * h;
        if (!std::isfinite(s.q) || !std::isfinite(s.p)) {
            fail(ErrorKind::StepTooLarge, "trajectory diverged at t=" + std::to_string(t));
        }
        detail::check_drift(sys, s, tr.energy0, t);
        if (k % record_every == 0 || k == steps) {
            tr.times.push_back(t);
            tr.states.push_back(s);
        }
    }
    return tr;
}

}  // namespace detail

/// RK4 trajectory on [0, t_end]; every state stays within 1e-8 relative of the initial
/// energy or StepTooLarge is thrown.
inline Trajectory integrate(const HamSystem& sys, const ClassicalState& s0, double t_end, double dt,
                            int record_every = 1) {
    require(t_end > 0.0, ErrorKind::InvalidArgument, "t_end must be > 0");
    return detail::integrate_signed(sys, s0, t_end, dt, record_every);
}

/// Eigenvalues of the 2x2 linearized flow at s.
inline std::pair<cplx, cplx> jacobian_eigen(const HamSystem& sys, const ClassicalState& s) {
    // J = [[0, b], [c, 0]] for both systems, eigenvalues +-sqrt(b c).
    double b = 1.0, c = 1.0;
    if (sys.kind() == SystemKind::HIHO) {
        const auto& hp = sys.params();
        b = 2.0;
        c = 0.5 * hp.gamma() * hp.gamma() - 12.0 * hp.g() * s.q * s.q;
    }
    const cplx root = std::sqrt(cplx(b * c, 0.0));
    return {root, -root};
}

struct LyapunovEstimate {
    double exponent = 0.0;
    /// Standard error of the per-interval stretching rates entering the estimate.
    double std_error = 0.0;
};

/// Benettin tangent-space estimate of the maximal Lyapunov exponent.
///
/// The tangent vector starts along (1, 0) and is co-integrated with the flow by
/// RK4; it is renormalized every `renorm_every` steps. The exponent is the accumulated log
/// stretching over the final (1 - discard_fraction) of the run divided by that duration;
/// the leading part aligns the tangent vector and is discarded.
inline LyapunovEstimate lyapunov_tangent(const HamSystem& sys, const ClassicalState& s0,
                                         double t_total, double dt, int renorm_every,
                                         double discard_fraction = 0.5) {
    require(t_total > 0.0 && dt > 0.0, ErrorKind::InvalidArgument,
            "t_total and dt must be positive");
    require(renorm_every >= 1, ErrorKind::InvalidArgument, "renorm_every must be >= 1");
    require(discard_fraction >= 0.0 && discard_fraction < 1.0, ErrorKind::InvalidArgument,
            "discard_fraction must lie in [0, 1)");

    const long steps = std::max(1L, static_cast<long>(std::ceil(t_total / dt - 1e-9)));
    const double h = t_total / static_cast<double>(steps);
    const double e0 = energy(sys, s0);
    const double t_start = discard_fraction * t_total;

    // Augmented state (q, p, dq, dp); the tangent obeys d' = J(q) d.
    auto rhs = [&sys](const std::array<double, 4>& y) {
        const auto f = hamilton_rhs(sys, {y[0], y[1]});
        double b = 1.0, c = 1.0;
        if (sys.kind() == SystemKind::HIHO) {
            const auto& hp = sys.params();
            b = 2.0;
            c = 0.5 * hp.gamma() * hp.gamma() - 12.0 * hp.g() * y[0] * y[0];
        }
        return std::array<double, 4>{f.dq, f.dp, b * y[3], c * y[2]};
    };
    auto axpy = [](const std::array<double, 4>& y, double a, const std::array<double, 4>& k) {
        return std::array<double, 4>{y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2],
                                     y[3] + a * k[3]};
    };

    std::array<double, 4> y{s0.q, s0.p, 1.0, 0.0};
    double interval_start = 0.0;
    double log_sum = 0.0, span = 0.0;
    std::vector<double> rates;
    for (long k = 1; k <= steps; ++k) {
        const auto k1 = rhs(y);
        const auto k2 = rhs(axpy(y, 0.5 * h, k1));
        const auto k3 = rhs(axpy(y, 0.5 * h, k2));
        const auto k4 = rhs(axpy(y, h, k3));
        for (int i = 0; i < 4; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

        if (k % renorm_every == 0 || k == steps) {
            const double t = static_cast<double>(k) * h;
            detail::check_drift(sys, {y[0], y[1]}, e0, t);
            const double n = std::hypot(y[2], y[3]);
            require(n > 0.0 && std::isfinite(n), ErrorKind::StepTooLarge,
                    "tangent vector degenerated");
            const double growth = std::log(n);
            y[2] /= n;
            y[3] /= n;
            if (interval_start >= t_start - 1e-12 * t_total) {
                log_sum += growth;
                span += t - interval_start;
                rates.push_back(growth / (t - interval_start));
            }
            interval_start = t;
        }
    }
    require(span > 0.0, ErrorKind::InvalidArgument, "no accumulation interval after transient");

    LyapunovEstimate est;
    est.exponent = log_sum / span;
    if (rates.size() > 1) {
        double mean = 0.0;
        for (double r : rates) mean += r;
        mean /= static_cast<double>(rates.size());
        double var = 0.0;
        for (double r : rates) var += (r - mean) * (r - mean);
        var /= static_cast<double>(rates.size() - 1);
        est.std_error = std::sqrt(var / static_cast<double>(rates.size()));
    }
    return est;
}

enum class IhoRegion { Saddle, StableManifold, UnstableManifold, Generic };

inline std::string to_string(IhoRegion r) {
    switch (r) {
        case IhoRegion::Saddle: return "SADDLE";
        case IhoRegion::StableManifold: return "STABLE_MANIFOLD";
        case IhoRegion::UnstableManifold: return "UNSTABLE_MANIFOLD";
        case IhoRegion::Generic: return "GENERIC";
    }
    return "GENERIC";
}

/// Saddle at the origin, stable manifold p = -q, unstable manifold p = q.
inline IhoRegion classify_iho_point(const ClassicalState& s, double tol = 1e-9) {
    require(tol > 0.0, ErrorKind::InvalidArgument, "tolerance must be > 0");
    if (std::abs(s.q) <= tol && std::abs(s.p) <= tol) return IhoRegion::Saddle;
    const double scale = tol * std::max(1.0, std::abs(s.q));
    if (std::abs(s.p + s.q) <= scale) return IhoRegion::StableManifold;
    if (std::abs(s.p - s.q) <= scale) return IhoRegion::UnstableManifold;
    return IhoRegion::Generic;
}

/// One trajectory per seed covering [-t_end, t_end].
inline std::vector<Trajectory> phase_portrait(const HamSystem& sys,
                                              std::span<const ClassicalState> seeds, double t_end,
                                              double dt) {
    require(!seeds.empty(), ErrorKind::InvalidArgument, "phase portrait needs at least one seed");
    require(t_end > 0.0, ErrorKind::InvalidArgument, "t_end must be > 0");
    std::vector<Trajectory> out;
    out.reserve(seeds.size());
    for (const auto& seed : seeds) {
        const Trajectory back = detail::integrate_signed(sys, seed, -t_end, dt, 1);
        const Trajectory fwd = detail::integrate_signed(sys, seed, t_end, dt, 1);
        Trajectory tr;
        tr.energy0 = fwd.energy0;
        for (std::size_t i = back.size(); i-- > 1;) {
            tr.times.push_back(back.times[i]);
            tr.states.push_back(back.states[i]);
        }
        tr.times.insert(tr.times.end(), fwd.times.begin(), fwd.times.end());
        tr.states.insert(tr.states.end(), fwd.states.begin(), fwd.states.end());
        out.push_back(std::move(tr));
    }
    return out;
}

/// Return time of a closed orbit through s0, located on the section through s0 normal to
/// the flow and refined by Newton steps in time. nullopt if no return before t_max.
inline std::optional<double> find_period(const HamSystem& sys, const ClassicalState& s0, double dt,
                                         double t_max) {
    const auto v0 = hamilton_rhs(sys, s0);
    require(std::hypot(v0.dq, v0.dp) > 0.0, ErrorKind::InvalidArgument,
            "fixed points have no period");
    auto section = [&](const ClassicalState& s) {
        return (s.q - s0.q) * v0.dq + (s.p - s0.p) * v0.dp;
    };
    ClassicalState s = s0;
    double t = 0.0;
    double prev = 0.0;
    bool left = false;
    const double reach = 0.5 * std::hypot(v0.dq, v0.dp) * dt;
    while (t < t_max) {
        const ClassicalState next = rk4_step(sys, s, dt);
        const double g = section(next);
        if (distance(next, s0) > 10.0 * reach) left = true;
        if (left && prev < 0.0 && g >= 0.0) {
            // Newton on the section function with partial RK4 steps from s.
            double tau = 0.0;
            ClassicalState x = s;
            for (int it = 0; it < 8; ++it) {
                const auto f = hamilton_rhs(sys, x);
                const double slope = f.dq * v0.dq + f.dp * v0.dp;
                const double dtau = -section(x) / slope;
                tau += dtau;
                x = rk4_step(sys, s, tau);
                if (std::abs(dtau) < 1e-15 * std::max(1.0, t)) break;
            }
            return t + tau;
        }
        prev = g;
        s = next;
        t += dt;
    }
    return std::nullopt;
}

}  // namespace otoc
