#pragma once

// Exact unitary evolution for time-independent Hamiltonians via a one-time
// Hermitian eigendecomposition, plus the observables built on it: expectation
// values, the momentum-variance OTOC, its explicit commutator form, mean photon
// number and truncation-edge population.

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#if defined(OTOC_USE_LAPACKE)
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#include <lapacke.h>
#endif

#include "otoc/error.hpp"
#include "otoc/fock.hpp"
#include "otoc/series.hpp"

namespace otoc {

/// Spectral decomposition H = V diag(lambda) V^dag with ascending eigenvalues.
/// Real symmetric Hamiltonians (both inverted oscillators) keep a real V.
class Propagator {
public:
    Propagator(FockDim dim, RVector eigenvalues, RMatrix vectors)
        : dim_(dim), lambda_(std::move(eigenvalues)), vr_(std::move(vectors)), real_(true) {}
    Propagator(FockDim dim, RVector eigenvalues, CMatrix vectors)
        : dim_(dim), lambda_(std::move(eigenvalues)), vc_(std::move(vectors)), real_(false) {}

    FockDim dim() const noexcept { return dim_; }
    const RVector& eigenvalues() const noexcept { return lambda_; }
    bool is_real() const noexcept { return real_; }

    CMatrix eigenvectors() const { return real_ ? CMatrix(vr_.cast<cplx>()) : vc_; }

    /// V^dag psi
    CVector to_eigenbasis(const CVector& psi) const {
        if (real_) {
            CVector out(psi.size());
            out.real() = vr_.transpose() * psi.real();
            out.imag() = vr_.transpose() * psi.imag();
            return out;
        }
        return vc_.adjoint() * psi;
    }

    /// V * coeffs, column-wise.
    CMatrix from_eigenbasis(const CMatrix& coeffs) const {
        if (real_) {
            CMatrix out(coeffs.rows(), coeffs.cols());
            out.real() = vr_ * coeffs.real();
            out.imag() = vr_ * coeffs.imag();
            return out;
        }
        return vc_ * coeffs;
    }

    /// U(t) = V diag(e^{-i lambda t}) V^dag as a dense matrix.
    CMatrix unitary(double t) const {
        const CMatrix v = eigenvectors();
        CMatrix scaled = v;
        for (int k = 0; k < lambda_.size(); ++k) scaled.col(k) *= std::polar(1.0, -lambda_(k) * t);
        return scaled * v.adjoint();
    }

private:
    FockDim dim_;
    RVector lambda_;
    RMatrix vr_;
    CMatrix vc_;
    bool real_;
};

inline constexpr double kHermitianTol = 1e-12;

namespace detail {

inline void require_hermitian(const FockOperator& m, const char* who) {
    if (!m.is_hermitian(kHermitianTol)) {
        fail(ErrorKind::NotHermitian, std::string(who) + ": operator is not Hermitian (defect " +
                                          std::to_string(m.hermiticity_defect()) + ")");
    }
}

inline void require_same_dim(FockDim a, FockDim b, const char* who) {
    if (!(a == b)) {
        fail(ErrorKind::DimMismatch, std::string(who) + ": dimension " + std::to_string(a.dim()) +
                                         " vs " + std::to_string(b.dim()));
    }
}

#if defined(OTOC_USE_LAPACKE)
inline Propagator diagonalize_real(FockDim dim, RMatrix h) {
    const int d = dim.dim();
    RVector w(d);
    const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', d, h.data(), d, w.data());
    require(info == 0, ErrorKind::InvalidArgument, "dsyevd failed, info=" + std::to_string(info));
    return {dim, std::move(w), std::move(h)};
}
inline Propagator diagonalize_complex(FockDim dim, CMatrix h) {
    const int d = dim.dim();
    RVector w(d);
    const int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'U', d, h.data(), d, w.data());
    require(info == 0, ErrorKind::InvalidArgument, "zheevd failed, info=" + std::to_string(info));
    return {dim, std::move(w), std::move(h)};
}
#else
inline Propagator diagonalize_real(FockDim dim, const RMatrix& h) {
    Eigen::SelfAdjointEigenSolver<RMatrix> es(h);
    require(es.info() == Eigen::Success, ErrorKind::InvalidArgument, "eigensolver failed");
    return {dim, es.eigenvalues(), RMatrix(es.eigenvectors())};
}
inline Propagator diagonalize_complex(FockDim dim, const CMatrix& h) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    require(es.info() == Eigen::Success, ErrorKind::InvalidArgument, "eigensolver failed");
    return {dim, es.eigenvalues(), CMatrix(es.eigenvectors())};
}
#endif

/// P psi for the truncated momentum quadrature, using its tridiagonal structure:
/// (P psi)_n = (i/sqrt 2) (sqrt(n) psi_{n-1} - sqrt(n+1) psi_{n+1}).
template <typename Vec>
CVector apply_momentum(const Vec& psi) {
    const Eigen::Index d = psi.size();
    CVector out(d);
    const cplx pre(0.0, 1.0 / std::sqrt(2.0));
    for (Eigen::Index n = 0; n < d; ++n) {
        cplx acc = 0.0;
        if (n > 0) acc += std::sqrt(static_cast<double>(n)) * psi(n - 1);
        if (n + 1 < d) acc -= std::sqrt(static_cast<double>(n + 1)) * psi(n + 1);
        out(n) = pre * acc;
    }
    return out;
}

}  // namespace detail

/// Eigendecomposition; throws NotHermitian when max|H - H^dag| > 1e-12 max|H|.
inline Propagator diagonalize(const FockOperator& h) {
    detail::require_hermitian(h, "diagonalize");
    // Symmetrize so the solver sees an exactly Hermitian matrix.
    if (h.is_real()) {
        RMatrix re = h.matrix().real();
        re = 0.5 * (re + re.transpose()).eval();
        return detail::diagonalize_real(h.dim(), std::move(re));
    }
    CMatrix m = 0.5 * (h.matrix() + h.matrix().adjoint());
    return detail::diagonalize_complex(h.dim(), std::move(m));
}

/// psi(t) = V diag(e^{-i lambda t}) V^dag psi0.
inline FockState evolve(const Propagator& prop, const FockState& psi0, double t) {
    detail::require_same_dim(prop.dim(), psi0.dim(), "evolve");
    CVector c = prop.to_eigenbasis(psi0.amplitudes());
    for (int k = 0; k < c.size(); ++k) c(k) *= std::polar(1.0, -prop.eigenvalues()(k) * t);
    CMatrix out = prop.from_eigenbasis(c);
    return {psi0.dim(), out.col(0)};
}

/// Calls fn(index, psi_t) for every requested time, evolving in blocks so the
/// expensive basis change is a matrix-matrix product.
template <typename Fn>
void for_each_evolved(const Propagator& prop, const FockState& psi0, std::span<const double> times,
                      Fn&& fn, int block = 64) {
    detail::require_same_dim(prop.dim(), psi0.dim(), "evolve");
    const CVector c0 = prop.to_eigenbasis(psi0.amplitudes());
    const int d = psi0.size();
    const auto& lambda = prop.eigenvalues();
    const std::size_t n = times.size();
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(block)) {
        const std::size_t stop = std::min(n, start + static_cast<std::size_t>(block));
        const int width = static_cast<int>(stop - start);
        CMatrix coeffs(d, width);
        for (int j = 0; j < width; ++j) {
            const double t = times[start + static_cast<std::size_t>(j)];
            for (int k = 0; k < d; ++k) coeffs(k, j) = c0(k) * std::polar(1.0, -lambda(k) * t);
        }
        const CMatrix states = prop.from_eigenbasis(coeffs);
        for (int j = 0; j < width; ++j) fn(start + static_cast<std::size_t>(j), states.col(j));
    }
}

/// <psi|M|psi> for Hermitian M; the (round-off) imaginary part is discarded.
inline double expect(const FockState& state, const FockOperator& m) {
    detail::require_same_dim(state.dim(), m.dim(), "expect");
    detail::require_hermitian(m, "expect");
    const cplx v = state.amplitudes().dot(m.matrix() * state.amplitudes());
    return v.real();
}

/// sum_{n >= k} |c_n|^2
inline double tail_population(const FockState& state, int k) {
    require(k >= 0 && k < state.size(), ErrorKind::IndexOutOfRange,
            "tail index " + std::to_string(k) + " outside [0, D)");
    return state.amplitudes().tail(state.size() - k).squaredNorm();
}

/// First index of the truncation-edge band watched by the guard: D - ceil(D/10).
inline int guard_index(FockDim dim) {
    const int d = dim.dim();
    return d - (d + 9) / 10;
}

inline constexpr double kTruncationGuardLimit = 1e-6;

namespace detail {

inline double momentum_variance(const CVector& psi) {
    const CVector pp = apply_momentum(psi);
    const double mean = psi.dot(pp).real();
    return std::max(0.0, pp.squaredNorm() - mean * mean);
}

inline double photon_number(const CVector& psi) {
    double acc = 0.0;
    for (Eigen::Index n = 1; n < psi.size(); ++n) acc += static_cast<double>(n) * std::norm(psi(n));
    return acc;
}

}  // namespace detail

/// Series produced by a single pass over the evolved states.
struct Observables {
    TimeSeries otoc;       ///< Var[P](t)
    TimeSeries photon;     ///< <a^dag a>(t)
    TimeSeries edge_tail;  ///< population at n >= guard_index(D)
    TimeSeries norm;       ///< ||psi(t)||
};

inline Observables observe(const Propagator& prop, const FockState& psi0,
                           std::span<const double> times) {
    const std::size_t n = times.size();
    std::vector<double> c(n), ph(n), tail(n), nrm(n);
    const int edge = guard_index(psi0.dim());
    for_each_evolved(prop, psi0, times, [&](std::size_t i, const auto& psi) {
        const CVector v = psi;
        c[i] = detail::momentum_variance(v);
        ph[i] = detail::photon_number(v);
        tail[i] = v.tail(v.size() - edge).squaredNorm();
        nrm[i] = v.norm();
    });
    std::vector<double> t(times.begin(), times.end());
    return {TimeSeries(t, std::move(c), "otoc"), TimeSeries(t, std::move(ph), "mean_photon"),
            TimeSeries(t, std::move(tail), "edge_tail"), TimeSeries(t, std::move(nrm), "norm")};
}

/// C(t) = <psi(t)|P^2|psi(t)> - <psi(t)|P|psi(t)>^2, evaluated in the Schroedinger picture.
inline TimeSeries variance_otoc(const Propagator& prop, const FockState& psi0,
                                std::span<const double> times) {
    return observe(prop, psi0, times).otoc;
}

inline TimeSeries photon_series(const Propagator& prop, const FockState& psi0,
                                std::span<const double> times) {
    return observe(prop, psi0, times).photon;
}

/// Reference implementation of C(t) = <[W(t),V]^dag [W(t),V]> with W = P and
/// V = |psi0><psi0|, built from the explicit Heisenberg operator. O(D^3) per call;
/// used to cross-check variance_otoc.
inline double commutator_otoc(const Propagator& prop, const FockState& psi0, const FockOperator& p,
                              double t) {
    detail::require_same_dim(prop.dim(), psi0.dim(), "commutator_otoc");
    detail::require_same_dim(prop.dim(), p.dim(), "commutator_otoc");
    const CMatrix u = prop.unitary(t);
    const CMatrix w_t = u.adjoint() * p.matrix() * u;
    const CVector& psi = psi0.amplitudes();
    const CMatrix proj = psi * psi.adjoint();
    const CMatrix comm = w_t * proj - proj * w_t;
    const CMatrix kk = comm.adjoint() * comm;
    return psi.dot(kk * psi).real();
}

/// Throws TruncationGuard if any sample with time <= t_limit puts more than 1e-6 of the
/// population in the top tenth of the Fock ladder.
inline void enforce_truncation_guard(const TimeSeries& edge_tail, double t_limit,
                                     const std::string& context) {
    for (std::size_t i = 0; i < edge_tail.size(); ++i) {
        if (edge_tail.time(i) > t_limit) break;
        if (edge_tail.value(i) >= kTruncationGuardLimit) {
            fail(ErrorKind::TruncationGuard,
                 context + ": truncation-edge population " + std::to_string(edge_tail.value(i)) +
                     " at t=" + std::to_string(edge_tail.time(i)) +
                     " exceeds 1e-6; the run needs a larger N_p");
        }
    }
}

}  // namespace otoc
