// A regular HIHO orbit (lambda_F = 0) still shows fast early OTOC growth.
#include <cstdio>

#include "otoc/otoc.hpp"

int main() {
    using namespace otoc;
    const auto params = HihoParams::standard();
    const auto dim = FockDim::from_photons(250);
    const auto prop = diagonalize(build_hiho(dim, params));
    const ClassicalState f{8.0, 9.0};
    const auto c = variance_otoc(prop, coherent_state(dim, {f.q, f.p}), uniform_times(0.3, 301));

    const auto window = auto_window(c, 0.08, {0.0, 0.25});
    const auto fit = fit_exponential(c, window);
    const auto sys = HamSystem::hiho(params);
    const auto lf = lyapunov_tangent(sys, f, 200.0, 1e-3, 10);
    std::printf("window [%.3f, %.3f]  rate %.3f  r2 %.5f  tau %.3f\n", fit.t_lo, fit.t_hi, fit.rate,
                fit.r_squared, ehrenfest_time(fit.rate, dim.n_p()));
    std::printf("classical exponent at F: %.4f +- %.4f\n", lf.exponent, lf.std_error);
    if (const auto period = find_period(sys, f, 1e-3, 10.0)) std::printf("orbit period %.4f\n", *period);
}
