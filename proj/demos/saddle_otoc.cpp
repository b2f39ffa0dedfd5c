// OTOC of a coherent state at the IHO saddle: fitted rate vs 2*lambda_O.
#include <cmath>
#include <cstdio>

#include "otoc/otoc.hpp"

int main() {
    using namespace otoc;
    const auto dim = FockDim::from_photons(300);
    const auto prop = diagonalize(build_iho(dim));
    const auto psi0 = coherent_state(dim, {0.0, 0.0});
    const auto times = uniform_times(4.0, 401);
    const auto c = variance_otoc(prop, psi0, times);

    const auto fit = fit_exponential(c, {0.5, 2.5});
    const double lambda = lyapunov_tangent(HamSystem::iho(), {-4.267, 5.643}, 20.0, 1e-3, 10).exponent;
    std::printf("rate %.4f  (2*lambda_O = %.4f)  r2 %.6f\n", fit.rate, 2.0 * lambda, fit.r_squared);
    std::printf("Ehrenfest time %.3f\n", ehrenfest_time(fit.rate, dim.n_p()));
    for (std::size_t i = 0; i < c.size(); i += 50) std::printf("t=%.2f  C=%.6g\n", c.time(i), c.value(i));
}
