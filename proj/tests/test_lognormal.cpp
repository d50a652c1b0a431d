#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "strokelab/lognormal.hpp"

using namespace strokelab;

TEST_CASE("erf approximation stays within its published error bound") {
    for (double x = -4.0; x <= 4.0; x += 0.001)
        REQUIRE(std::abs(erf_approx(x) - std::erf(x)) <= 1.5e-7);
    REQUIRE(std::abs(erf_approx(0.0)) <= 1.5e-7);
    REQUIRE(erf_approx(-1.3) == -erf_approx(1.3));
}

TEST_CASE("lognormal value: support boundary and mode") {
    LognormalComponent c{1.0, 0.2, -1.5, 0.4, 0.0, 0.0};
    REQUIRE(lognormal_value(0.2, c) == 0.0);
    REQUIRE(lognormal_value(0.1, c) == 0.0);

    // argmax over a fine grid sits at t0 + exp(mu - sigma^2) within one step
    const double step = 1e-4;
    double best_t = 0.0, best_v = -1.0;
    for (double t = 0.2; t < 2.0; t += step) {
        const double v = lognormal_value(t, c);
        if (v > best_v) {
            best_v = v;
            best_t = t;
        }
    }
    const double analytic_mode = 0.2 + std::exp(-1.5 - 0.16);
    REQUIRE(std::abs(best_t - analytic_mode) <= step);
}

TEST_CASE("lognormal integrates to one (trapezoid quadrature)") {
    LognormalComponent c{1.0, 0.0, -1.5, 0.4, 0.0, 0.0};
    const double h = 1e-4;
    double integral = 0.0;
    double prev = lognormal_value(0.0, c);
    for (double t = h; t <= 20.0; t += h) {
        const double cur = lognormal_value(t, c);
        integral += 0.5 * (prev + cur) * h;
        prev = cur;
    }
    REQUIRE(integral == Catch::Approx(1.0).margin(1e-4));
}

TEST_CASE("synthesize: degenerate angle keeps motion on the x axis") {
    LognormalComponent c{4.0, 0.05, -1.8, 0.25, 0.0, 0.0};
    const auto syn = synthesize({&c, 1}, 1.0, 200.0);
    for (std::size_t i = 0; i < syn.velocity.size(); ++i) {
        REQUIRE(syn.velocity.vy[i] == 0.0);
        REQUIRE(syn.velocity.vx[i] ==
                Catch::Approx(4.0 * lognormal_value(syn.velocity.t[i], c)).margin(1e-12));
    }
}

TEST_CASE("synthesize: path length equals D within 0.5%") {
    LognormalComponent c{4.0, 0.05, -1.8, 0.25, -0.4, 1.1};
    const double fs = 400.0;
    const auto syn = synthesize({&c, 1}, 1.5, fs);
    double length = 0.0;
    for (std::size_t i = 1; i < syn.velocity.size(); ++i)
        length += 0.5 * (syn.velocity.speed[i - 1] + syn.velocity.speed[i]) / fs;
    REQUIRE(length == Catch::Approx(4.0).epsilon(0.005));
}

TEST_CASE("synthesize: disjoint components add their path lengths") {
    std::vector<LognormalComponent> cs{{3.0, 0.05, -2.0, 0.15, 0.2, 0.5},
                                       {4.0, 1.0, -2.0, 0.15, -0.8, -0.2}};
    const double fs = 400.0;
    const auto syn = synthesize(cs, 2.2, fs);
    double length = 0.0;
    for (std::size_t i = 1; i < syn.velocity.size(); ++i)
        length += 0.5 * (syn.velocity.speed[i - 1] + syn.velocity.speed[i]) / fs;
    REQUIRE(length == Catch::Approx(7.0).epsilon(0.005));
}

TEST_CASE("synthesize is linear in each component's amplitude") {
    std::vector<LognormalComponent> cs{{2.0, 0.05, -1.9, 0.2, 0.1, 0.7},
                                       {3.0, 0.4, -1.9, 0.2, -0.5, 0.0}};
    const auto base = synthesize(cs, 1.5, 200.0);
    auto doubled = cs;
    doubled[0].D *= 2.0;
    const auto twice = synthesize(doubled, 1.5, 200.0);
    // doubling D of component 0 doubles its pointwise contribution
    std::vector<LognormalComponent> only0{cs[0]};
    const auto part = synthesize(only0, 1.5, 200.0);
    for (std::size_t i = 0; i < base.velocity.size(); ++i) {
        REQUIRE(twice.velocity.vx[i] - base.velocity.vx[i] ==
                Catch::Approx(part.velocity.vx[i]).margin(1e-9));
        REQUIRE(twice.velocity.vy[i] - base.velocity.vy[i] ==
                Catch::Approx(part.velocity.vy[i]).margin(1e-9));
    }
}

TEST_CASE("angle interpolation is monotone from theta_s to theta_e") {
    LognormalComponent c{1.0, 0.1, -1.7, 0.3, -0.5, 1.3};
    double prev = 0.0;
    for (double t = 0.10001; t < 2.0; t += 0.001) {
        const double frac = lognormal_fraction(t, c);
        REQUIRE(frac >= prev - 1e-12);  // non-decreasing fraction drives the angle
        REQUIRE(frac <= 1.0 + 1e-12);
        prev = frac;
    }
}

TEST_CASE("snr: caps, zero reconstruction, constructed ratio") {
    LognormalComponent c{5.0, 0.05, -1.8, 0.3, 0.0, 0.9};
    auto obs = synthesize({&c, 1}, 1.2, 200.0).velocity;

    REQUIRE(snr_db(obs, obs) == 100.0);

    VelocityProfile zero = obs;
    std::fill(zero.vx.begin(), zero.vx.end(), 0.0);
    std::fill(zero.vy.begin(), zero.vy.end(), 0.0);
    std::fill(zero.speed.begin(), zero.speed.end(), 0.0);
    REQUIRE(snr_db(obs, zero) == Catch::Approx(0.0).margin(1e-12));

    // residual scaled for an exact power ratio of 10^3 -> 30 dB
    double sig = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i)
        sig += obs.vx[i] * obs.vx[i] + obs.vy[i] * obs.vy[i];
    VelocityProfile recon = obs;
    // perturb with a copy of the signal scaled to power sig / 1000
    const double scale = std::sqrt(1.0 / 1000.0);
    for (std::size_t i = 0; i < obs.size(); ++i) {
        recon.vx[i] = obs.vx[i] * (1.0 - scale);
        recon.vy[i] = obs.vy[i] * (1.0 - scale);
    }
    REQUIRE(snr_db(obs, recon) == Catch::Approx(30.0).margin(1e-6));

    REQUIRE_THROWS_WITH(snr_db(zero, zero), Catch::Matchers::ContainsSubstring("empty motion"));
}

TEST_CASE("component validation enforces the documented ranges") {
    REQUIRE_THROWS_AS(synthesize(std::vector<LognormalComponent>{{-1, 0, -1, 0.3, 0, 0}}, 1, 100),
                      ValidationError);
    REQUIRE_THROWS_AS(synthesize(std::vector<LognormalComponent>{{1, 0, -1, 3.5, 0, 0}}, 1, 100),
                      ValidationError);
    REQUIRE_THROWS_AS(synthesize(std::vector<LognormalComponent>{{1, 2, -1, 0.3, 0, 0}}, 1, 100),
                      ValidationError);
    REQUIRE_THROWS_AS(synthesize(std::vector<LognormalComponent>{}, 1, 100), ValidationError);
}
