#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "otoc/analysis.hpp"

using namespace otoc;

namespace {

TimeSeries sampled(double t_end, int n, auto&& f) {
    auto t = uniform_times(t_end, n);
    std::vector<double> v(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) v[i] = f(t[i]);
    return {std::move(t), std::move(v), "synthetic"};
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no otoc::Error thrown";
    return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(TimeSeries, RejectsBadGrids) {
    EXPECT_THROW(TimeSeries({0.0, 0.0}, {1.0, 1.0}), Error);
    EXPECT_THROW(TimeSeries({0.0, 1.0}, {1.0}), Error);
    EXPECT_THROW(uniform_times(1.0, 1), Error);
}

TEST(FitExponential, ExactExponential) {
    const auto s = sampled(3.0, 61, [](double t) { return std::exp(2.0 * t); });
    const auto fit = fit_exponential(s, {0.0, 3.0});
    EXPECT_NEAR(fit.rate, 2.0, 1e-9);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
    EXPECT_NEAR(fit.log_intercept, 0.0, 1e-9);
    EXPECT_EQ(fit.samples, 61);
}

TEST(FitExponential, ScaleInvariance) {
    const auto a = sampled(2.0, 41, [](double t) { return std::cosh(2.0 * t) / 2.0; });
    const auto b = sampled(2.0, 41, [](double t) { return 37.0 * std::cosh(2.0 * t) / 2.0; });
    const auto fa = fit_exponential(a, {0.5, 2.0});
    const auto fb = fit_exponential(b, {0.5, 2.0});
    EXPECT_NEAR(fa.rate, fb.rate, 1e-12);
    EXPECT_NEAR(fb.log_intercept - fa.log_intercept, std::log(37.0), 1e-12);
}

TEST(FitExponential, Errors) {
    const auto s = sampled(1.0, 11, [](double t) { return t; });
    EXPECT_EQ(kind_of([&] { fit_exponential(s, {0.0, 1.0}); }), ErrorKind::NonPositiveValues);
    EXPECT_EQ(kind_of([&] { fit_exponential(s, {0.5, 0.8}); }), ErrorKind::WindowTooSparse);
}

TEST(AutoWindow, PureExponentialSpansDomain) {
    const auto s = sampled(3.0, 61, [](double t) { return 0.5 * std::exp(2.0 * t); });
    const auto [lo, hi] = auto_window(s, 0.5);
    EXPECT_NEAR(lo, 0.0, 0.05 + 1e-12);
    EXPECT_NEAR(hi, 3.0, 0.05 + 1e-12);
}

TEST(AutoWindow, StopsAtPlateauKnee) {
    const double knee = 1.5;
    const auto s = sampled(3.0, 61, [&](double t) { return std::exp(2.0 * std::min(t, knee)); });
    const auto [lo, hi] = auto_window(s, 0.5);
    EXPECT_LE(hi, knee + 0.05 + 1e-12);
    EXPECT_GE(hi, knee - 0.05 - 1e-12);
    EXPECT_NEAR(lo, 0.0, 1e-12);
}

TEST(AutoWindow, NoisyExponential) {
    std::mt19937_64 rng(123);
    std::normal_distribution<double> noise(0.0, 0.01);
    const auto s = sampled(3.0, 301, [&](double t) { return std::exp(2.0 * t) * (1.0 + noise(rng)); });
    const auto window = auto_window(s, 1.0);
    const auto fit = fit_exponential(s, window);
    EXPECT_NEAR(fit.rate, 2.0, 0.04);
}

TEST(AutoWindow, RespectsBounds) {
    const auto s = sampled(1.0, 101, [](double t) { return std::exp(3.0 * t * t); });
    const auto [lo, hi] = auto_window(s, 0.2, {0.1, 0.6});
    EXPECT_GE(lo, 0.1 - 1e-12);
    EXPECT_LE(hi, 0.6 + 1e-12);
    EXPECT_GE(hi - lo, 0.2 - 1e-12);
}

TEST(AutoWindow, Errors) {
    const auto s = sampled(1.0, 11, [](double t) { return t - 0.5; });
    EXPECT_EQ(kind_of([&] { auto_window(s, 0.2); }), ErrorKind::NonPositiveValues);
    const auto e = sampled(1.0, 11, [](double t) { return std::exp(t); });
    EXPECT_EQ(kind_of([&] { auto_window(e, 5.0); }), ErrorKind::WindowTooSparse);
}

TEST(EhrenfestTime, Examples) {
    EXPECT_NEAR(ehrenfest_time(2.0, 300), std::log(300.0) / 2.0, 1e-15);
    EXPECT_NEAR(ehrenfest_time(2.0, 300), 2.852, 1e-3);
    EXPECT_NEAR(ehrenfest_time(25.52, 250), 0.216, 1e-3);
    EXPECT_DOUBLE_EQ(ehrenfest_time(1.0, 7.0), std::log(7.0));
    EXPECT_EQ(kind_of([] { ehrenfest_time(0.0, 100); }), ErrorKind::InvalidRate);
    EXPECT_EQ(kind_of([] { ehrenfest_time(-1.0, 100); }), ErrorKind::InvalidRate);
}

TEST(EhrenfestTime, Monotonicity) {
    for (double r = 0.5; r < 30.0; r *= 1.7) {
        EXPECT_GT(ehrenfest_time(r, 100), ehrenfest_time(r * 1.1, 100));
        EXPECT_LT(ehrenfest_time(r, 100), ehrenfest_time(r, 150));
    }
}

TEST(CorrespondenceTime, IdenticalSeriesNeverDepart) {
    const auto s = sampled(2.0, 21, [](double t) { return 1.0 + t; });
    EXPECT_FALSE(correspondence_time(s, s, 0.01).has_value());
}

TEST(CorrespondenceTime, DetectsStep) {
    const auto ref = sampled(2.0, 21, [](double t) { return 5.0 + t; });
    const auto run = sampled(2.0, 21, [](double t) { return t < 1.2 - 1e-9 ? 5.0 + t : 9.0 + t; });
    const auto tp = correspondence_time(run, ref, 0.02);
    ASSERT_TRUE(tp.has_value());
    EXPECT_DOUBLE_EQ(*tp, 1.2);
}

TEST(CorrespondenceTime, GridMismatch) {
    const auto a = sampled(2.0, 21, [](double t) { return t; });
    const auto b = sampled(2.1, 21, [](double t) { return t; });
    const auto c = sampled(2.0, 11, [](double t) { return t; });
    EXPECT_EQ(kind_of([&] { correspondence_time(a, b, 0.1); }), ErrorKind::GridMismatch);
    EXPECT_EQ(kind_of([&] { correspondence_time(a, c, 0.1); }), ErrorKind::GridMismatch);
}

TEST(CorrespondenceTime, MonotoneInEpsilon) {
    const auto ref = sampled(3.0, 61, [](double t) { return std::exp(t); });
    const auto run = sampled(3.0, 61, [](double t) { return std::exp(t) * (1.0 + 0.01 * t * t); });
    double prev = -1.0;
    for (double eps : {0.001, 0.005, 0.01, 0.02, 0.05}) {
        const auto tp = correspondence_time(run, ref, eps);
        const double v = tp.value_or(1e9);
        EXPECT_GE(v, prev);
        prev = v;
    }
}
