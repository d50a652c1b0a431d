// Step-by-step greedy trace for one round-trip stroke (diagnostic).

#include <cstdio>

#include "strokelab/strokelab.hpp"
#include "test_util.hpp"

using namespace strokelab;

int main(int argc, char** argv) {
    const int s = argc > 1 ? std::atoi(argv[1]) : 17;
    rng::Stream gen(rng::derive_key(4242, "roundtrip", s));
    const int k = 1 + s % 5;
    std::vector<LognormalComponent> comps(k);
    double onset = 0.06;
    double theta = gen.uniform(-kPi, kPi);
    for (auto& c : comps) {
        c.t0 = onset;
        onset += gen.uniform(0.14, 0.20);
        c.mu = gen.uniform(-2.0, -1.7);
        c.sigma = gen.uniform(0.12, 0.22);
        c.D = gen.uniform(4.0, 9.0);
        c.theta_s = theta;
        theta += gen.uniform(-0.9, 0.9);
        c.theta_e = theta;
    }
    std::printf("truth:\n");
    for (const auto& c : comps)
        std::printf("  t0=%.3f mu=%.3f sigma=%.3f D=%.2f mode=%.3f peak=%.1f\n", c.t0, c.mu,
                    c.sigma, c.D, lognormal_mode_time(c),
                    test_util::analytic_peak_speed(c));

    double end = 0.0;
    for (const auto& c : comps) end = std::max(end, lognormal_fraction_time(c, kZ999));
    const Stroke stroke = test_util::make_stroke(comps, end + 0.05, 200.0, "dbg");

    // replicate the greedy loop with tracing
    const std::size_t n = stroke.size();
    const double fs = stroke.fs;
    VelocityProfile obs;
    obs.t.resize(n);
    for (std::size_t i = 0; i < n; ++i) obs.t[i] = stroke.t[i] - stroke.t[0];
    obs.vx = stroke.vx;
    obs.vy = stroke.vy;
    obs.speed = stroke.speed;

    ExtractorConfig cfg;
    std::vector<double> rvx = obs.vx, rvy = obs.vy, rspeed = obs.speed;
    std::vector<LognormalComponent> fit_set;

    double sig_power = 0.0;
    for (std::size_t i = 0; i < n; ++i) sig_power += rvx[i] * rvx[i] + rvy[i] * rvy[i];
    double res_power = sig_power;

    for (int iter = 0; iter < 10; ++iter) {
        const double snr = res_power < 1e-12 * sig_power
                               ? 100.0
                               : 10.0 * std::log10(sig_power / res_power);
        std::printf("iter %d: snr=%.1f dB\n", iter, snr);
        if (snr >= cfg.snr_target_db) break;
        const auto modes = detect_modes(rspeed, fs, cfg);
        std::printf("  modes:");
        for (const auto& m : modes) std::printf(" (%.3fs, %.1f)", m.first / fs, m.second);
        std::printf("\n");
        if (modes.empty()) break;
        bool accepted = false;
        for (const auto& mode : modes) {
            auto cand = estimate_initial(rspeed, rvx, rvy, fs, mode, cfg);
            if (!cand) {
                std::printf("  mode %.3f: initializer rejected\n", mode.first / fs);
                continue;
            }
            std::printf("  init: t0=%.3f mu=%.3f sigma=%.3f D=%.2f\n", cand->t0, cand->mu,
                        cand->sigma, cand->D);
            const auto w = detail::component_window(*cand, fs, static_cast<int>(n));
            const auto box =
                detail::ShapeBox::around(detail::shape_from_component(*cand), obs.t.back());
            const LognormalComponent fit = detail::nelder_mead_component(
                *cand, box, obs.t, rvx, rvy, w, cfg.refine_iters);
            std::printf("  nm:   t0=%.3f mu=%.3f sigma=%.3f D=%.2f\n", fit.t0, fit.mu,
                        fit.sigma, fit.D);
            std::vector<double> cvx(n, 0.0), cvy(n, 0.0);
            accumulate_component(fit, obs.t, cvx, cvy);
            double new_power = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double ex = rvx[j] - cvx[j];
                const double ey = rvy[j] - cvy[j];
                new_power += ex * ex + ey * ey;
            }
            if (new_power < res_power * (1.0 - 1e-4)) {
                fit_set.push_back(fit);
                res_power = detail::refine_pass(obs, fit_set, cfg);
                eval_components(fit_set, obs.t, cvx, cvy);
                for (std::size_t j = 0; j < n; ++j) {
                    rvx[j] = obs.vx[j] - cvx[j];
                    rvy[j] = obs.vy[j] - cvy[j];
                    rspeed[j] = std::hypot(rvx[j], rvy[j]);
                }
                accepted = true;
                std::printf("  accepted; after backfit:\n");
                for (const auto& c : fit_set)
                    std::printf("    t0=%.3f mu=%.3f sigma=%.3f D=%.2f\n", c.t0, c.mu, c.sigma,
                                c.D);
                break;
            }
            std::printf("  rejected (power %.3g -> %.3g)\n", res_power, new_power);
        }
        if (!accepted) break;
    }
    return 0;
}
