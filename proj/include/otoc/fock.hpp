#pragma once

// Truncated single-mode bosonic Fock space: ladder and quadrature operators,
// the inverted-oscillator Hamiltonians and Glauber coherent states.
//
// Units: hbar = m = omega = 1. Quadratures are X = (a^dag + a)/sqrt(2),
// P = i(a^dag - a)/sqrt(2), so a coherent state centred at (q, p) has
// beta = (q + i p)/sqrt(2).

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "otoc/error.hpp"

namespace otoc {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Number of retained Fock states |0>..|D-1>, with D = N_p + 1.
class FockDim {
public:
    static FockDim from_photons(int n_p) {
        require(n_p >= 1, ErrorKind::InvalidArgument,
                "photon number N_p must be >= 1, got " + std::to_string(n_p));
        return FockDim(n_p + 1);
    }
    static FockDim from_dim(int dim) {
        require(dim >= 2, ErrorKind::InvalidArgument,
                "Fock dimension must be >= 2, got " + std::to_string(dim));
        return FockDim(dim);
    }

    int dim() const noexcept { return dim_; }
    int n_p() const noexcept { return dim_ - 1; }

    friend bool operator==(FockDim, FockDim) = default;

private:
    explicit FockDim(int dim) : dim_(dim) {}
    int dim_;
};

/// Dense complex matrix on the truncated Fock space, indexed by photon number.
class FockOperator {
public:
    FockOperator(FockDim dim, CMatrix entries) : dim_(dim), m_(std::move(entries)) {
        require(m_.rows() == dim.dim() && m_.cols() == dim.dim(), ErrorKind::DimMismatch,
                "operator shape does not match Fock dimension");
    }

    static FockOperator zero(FockDim dim) {
        return {dim, CMatrix::Zero(dim.dim(), dim.dim())};
    }
    static FockOperator identity(FockDim dim) {
        return {dim, CMatrix::Identity(dim.dim(), dim.dim())};
    }

    FockDim dim() const noexcept { return dim_; }
    int size() const noexcept { return dim_.dim(); }
    const CMatrix& matrix() const noexcept { return m_; }
    cplx operator()(int row, int col) const { return m_(row, col); }

    FockOperator adjoint() const { return {dim_, m_.adjoint()}; }

    double max_abs() const { return m_.cwiseAbs().maxCoeff(); }

    /// max |M - M^dag|
    double hermiticity_defect() const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff(); }

    bool is_hermitian(double rel_tol = 1e-12) const {
        return hermiticity_defect() <= rel_tol * std::max(max_abs(), 1e-300);
    }

    bool is_real() const { return m_.imag().cwiseAbs().maxCoeff() == 0.0; }

    FockOperator operator+(const FockOperator& o) const {
        check_same(o);
        return {dim_, m_ + o.m_};
    }
    FockOperator operator-(const FockOperator& o) const {
        check_same(o);
        return {dim_, m_ - o.m_};
    }
    FockOperator operator*(const FockOperator& o) const {
        check_same(o);
        return {dim_, m_ * o.m_};
    }
    FockOperator operator*(cplx s) const { return {dim_, m_ * s}; }
    friend FockOperator operator*(cplx s, const FockOperator& op) { return op * s; }

private:
    void check_same(const FockOperator& o) const {
        require(dim_ == o.dim_, ErrorKind::DimMismatch, "operator dimensions differ");
    }

    FockDim dim_;
    CMatrix m_;
};

/// Pure state as amplitudes c_n over |0>..|D-1>.
class FockState {
public:
    FockState(FockDim dim, CVector amplitudes) : dim_(dim), c_(std::move(amplitudes)) {
        require(c_.size() == dim.dim(), ErrorKind::DimMismatch,
                "amplitude vector length does not match Fock dimension");
    }

    static FockState basis(FockDim dim, int n) {
        require(n >= 0 && n < dim.dim(), ErrorKind::IndexOutOfRange,
                "basis index " + std::to_string(n) + " outside [0, D)");
        CVector c = CVector::Zero(dim.dim());
        c(n) = 1.0;
        return {dim, std::move(c)};
    }
    static FockState vacuum(FockDim dim) { return basis(dim, 0); }

    FockDim dim() const noexcept { return dim_; }
    int size() const noexcept { return dim_.dim(); }
    const CVector& amplitudes() const noexcept { return c_; }
    cplx operator[](int n) const { return c_(n); }

    double norm() const { return c_.norm(); }
    RVector probabilities() const { return c_.cwiseAbs2(); }

private:
    FockDim dim_;
    CVector c_;
};

/// Phase-space centre of a coherent state.
struct CoherentParams {
    double q = 0.0;
    double p = 0.0;

    cplx beta() const { return cplx(q, p) / std::sqrt(2.0); }
    /// |beta|^2 = (q^2 + p^2)/2, the mean photon number.
    double beta_abs2() const { return 0.5 * (q * q + p * p); }
};

/// Parameters of the Higgs-confined inverted oscillator; both strictly positive.
class HihoParams {
public:
    static HihoParams make(double gamma, double g) {
        require(gamma > 0.0 && std::isfinite(gamma), ErrorKind::InvalidArgument,
                "HIHO gamma must be > 0");
        require(g > 0.0 && std::isfinite(g), ErrorKind::InvalidArgument, "HIHO g must be > 0");
        return HihoParams(gamma, g);
    }
    /// gamma = 3, g = 1/25: the parameter set used throughout the figures.
    static HihoParams standard() { return HihoParams(3.0, 1.0 / 25.0); }

    double gamma() const noexcept { return gamma_; }
    double g() const noexcept { return g_; }
    /// gamma^4 / (64 g), lifts the bottom of the double well to zero.
    double offset() const noexcept { return std::pow(gamma_, 4) / (64.0 * g_); }

    friend bool operator==(const HihoParams&, const HihoParams&) = default;

private:
    HihoParams(double gamma, double g) : gamma_(gamma), g_(g) {}
    double gamma_;
    double g_;
};

struct Ladder {
    FockOperator a;
    FockOperator a_dag;
};

/// a[n-1][n] = sqrt(n); a_dag = a^dag.
inline Ladder make_ladder(FockDim dim) {
    const int d = dim.dim();
    CMatrix a = CMatrix::Zero(d, d);
    for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    CMatrix ad = a.adjoint();
    return {FockOperator(dim, std::move(a)), FockOperator(dim, std::move(ad))};
}

struct Quadratures {
    FockOperator x;
    FockOperator p;
};

inline Quadratures quadratures(FockDim dim) {
    const auto [a, ad] = make_ladder(dim);
    const double s = 1.0 / std::sqrt(2.0);
    return {(ad + a) * cplx(s, 0.0), (ad - a) * cplx(0.0, s)};
}

inline FockOperator number_operator(FockDim dim) {
    CMatrix n = CMatrix::Zero(dim.dim(), dim.dim());
    for (int k = 0; k < dim.dim(); ++k) n(k, k) = static_cast<double>(k);
    return {dim, std::move(n)};
}

namespace detail {

using SparseC = Eigen::SparseMatrix<cplx>;

/// Sparse annihilation operator; products of ladder operators stay banded, so the
/// Hamiltonians are assembled sparse and densified once.
inline SparseC sparse_lowering(int d) {
    std::vector<Eigen::Triplet<cplx>> entries;
    entries.reserve(static_cast<std::size_t>(d));
    for (int n = 1; n < d; ++n) entries.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
    SparseC a(d, d);
    a.setFromTriplets(entries.begin(), entries.end());
    return a;
}

}  // namespace detail

/// Quantum inverted oscillator H = -(a^2 + a^dag^2)/2.
inline FockOperator build_iho(FockDim dim) {
    const detail::SparseC a = detail::sparse_lowering(dim.dim());
    const detail::SparseC ad = a.adjoint();
    const detail::SparseC h = (a * a + ad * ad) * cplx(-0.5, 0.0);
    return {dim, CMatrix(h)};
}

/// H' = -(a^dag - a)^2/2 - gamma^2 (a^dag + a)^2/8 + (g/4)(a^dag + a)^4 + gamma^4/(64 g),
/// assembled term by term from the truncated ladder matrices.
inline FockOperator build_hiho(FockDim dim, const HihoParams& params) {
    const detail::SparseC a = detail::sparse_lowering(dim.dim());
    const detail::SparseC ad = a.adjoint();
    const detail::SparseC minus = ad - a;
    const detail::SparseC plus = ad + a;
    const detail::SparseC plus2 = plus * plus;
    const double gamma2 = params.gamma() * params.gamma();
    const detail::SparseC h = (minus * minus) * cplx(-0.5, 0.0) + plus2 * cplx(-gamma2 / 8.0, 0.0) +
                              (plus2 * plus2) * cplx(params.g() / 4.0, 0.0);
    CMatrix m(h);
    m.diagonal().array() += params.offset();
    return {dim, std::move(m)};
}

namespace detail {

/// ln of the Poisson weight e^{-lambda} lambda^n / n!, with lambda = 0 handled.
inline double log_poisson(double lambda, int n) {
    if (lambda == 0.0) return n == 0 ? 0.0 : -INFINITY;
    return -lambda + n * std::log(lambda) - std::lgamma(n + 1.0);
}

}  // namespace detail

/// Population sum_{n >= D} e^{-|beta|^2} |beta|^{2n}/n! that truncation to D states discards.
inline double coherent_tail(double beta_abs2, int dim) {
    if (beta_abs2 == 0.0) return 0.0;
    double tail = 0.0;
    for (int n = dim;; ++n) {
        const double term = std::exp(detail::log_poisson(beta_abs2, n));
        tail += term;
        if (n > beta_abs2 && term <= 1e-17 * tail) break;
        if (n > beta_abs2 && term == 0.0) break;
        if (n - dim > 100000) break;
    }
    return tail;
}

inline constexpr double kCoherentTailLimit = 1e-10;

/// Coherent state c_n = e^{-|beta|^2/2} beta^n / sqrt(n!), magnitudes accumulated in log domain.
/// Throws TailTooHeavy when truncation would discard >= 1e-10 of the population.
inline FockState coherent_state(FockDim dim, const CoherentParams& cp) {
    const int d = dim.dim();
    const double b2 = cp.beta_abs2();
    const double tail = coherent_tail(b2, d);
    if (!(tail < kCoherentTailLimit)) {
        fail(ErrorKind::TailTooHeavy,
             "coherent state at (q,p)=(" + std::to_string(cp.q) + "," + std::to_string(cp.p) +
                 ") loses " + std::to_string(tail) + " of its population at D=" +
                 std::to_string(d) + "; increase N_p");
    }
    CVector c = CVector::Zero(d);
    if (b2 == 0.0) {
        c(0) = 1.0;
        return {dim, std::move(c)};
    }
    const double log_r = std::log(std::sqrt(b2));
    const double theta = std::arg(cp.beta());
    for (int n = 0; n < d; ++n) {
        const double log_mag = -0.5 * b2 + n * log_r - 0.5 * std::lgamma(n + 1.0);
        c(n) = std::polar(std::exp(log_mag), n * theta);
    }
    c /= c.norm();
    return {dim, std::move(c)};
}

/// <a^dag a> = sum n |c_n|^2.
inline double mean_photon(const FockState& state) {
    const RVector prob = state.probabilities();
    double acc = 0.0;
    for (int n = 1; n < prob.size(); ++n) acc += n * prob(n);
    return acc;
}

}  // namespace otoc
