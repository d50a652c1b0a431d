#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "strokelab/error.hpp"
#include "strokelab/lognormal.hpp"
#include "strokelab/rng.hpp"
#include "strokelab/types.hpp"

namespace strokelab {

/// Synthetic cohort layout and coupling strength. effect = 0 produces a
/// null corpus; effect > 0 scales the per-stroke jitter dispersion by
/// (1 + effect * (1 - r)) where r is the day's latent recovery, so poor
/// recovery shows up as less consistent motor commands.
struct CohortConfig {
    int users = 13;
    int days = 28;
    int timings = 3;  // fixed by the sample schema
    int tasks = 5;    // fixed by the sample schema
    double effect = 0.0;
    std::uint64_t seed = 1;
    double fs = 200.0;

    void validate() const {
        if (users < 1 || days < 8) throw ValidationError("cohort: users >= 1 and days >= 8");
        if (timings != 3 || tasks != 5)
            throw ValidationError("cohort: schema is fixed at 3 timings x 5 tasks");
        if (!(effect >= 0.0)) throw ValidationError("cohort: effect must be >= 0");
        if (!(fs > 0.0)) throw ValidationError("cohort: fs must be > 0");
    }
};

/// Exact components behind one generated stroke, for round-trip scoring.
struct StrokeTruth {
    SampleKey key;
    int stroke_index = 0;
    double duration = 0.0;
    std::vector<LognormalComponent> components;
};

struct CohortData {
    std::vector<SleepRecord> sleep;
    std::vector<RawTrace> traces;
    std::vector<StrokeTruth> truth;
};

namespace detail {

// Population statistics the per-user baselines are drawn around.
struct SleepPopulation {
    double ts_mean = 6.6, ts_user_sd = 0.5;
    double hrv_mean = 56.3, hrv_user_sd = 10.0;
    double lhr_mean = 51.8, lhr_user_sd = 4.0;
    double ahr_mean = 57.4, ahr_user_sd = 4.0;
};

// Affine spans over r in [0, 1] and nightly noise. Recovery raises sleep
// duration and HRV, lowers both heart rates.
struct SleepCoupling {
    double ts_span = 2.4, ts_noise = 0.25;
    double hrv_span = 24.0, hrv_noise = 2.5;
    double lhr_span = -9.0, lhr_noise = 1.0;
    double ahr_span = -9.0, ahr_noise = 1.0;
};

// Handwriting jitter baselines (dispersion before the effect factor).
struct JitterScale {
    double d_lognorm_sd = 0.18;  // multiplicative: D' = D * exp(N(0, sd * factor))
    double t0_sd = 0.010;        // additive seconds
};

inline std::string user_name(int u) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "u%02d", u + 1);
    return buf;
}

inline std::vector<LognormalComponent> task_template(const CohortConfig& cfg, int u, int task) {
    rng::Stream s(rng::derive_key(cfg.seed, "template", u, task));
    const bool phrase = task >= 3;
    const int n_comp = phrase ? 8 + static_cast<int>(s.next_below(7))   // 8..14
                              : 3 + static_cast<int>(s.next_below(3));  // 3..5
    std::vector<LognormalComponent> comps(n_comp);
    double onset = 0.05;
    double theta = s.uniform(-kPi, kPi);
    for (auto& c : comps) {
        c.t0 = onset;
        onset += s.uniform(0.085, 0.125);
        c.mu = s.uniform(-2.1, -1.6);
        c.sigma = s.uniform(0.12, 0.25);
        c.D = s.uniform(5.0, 8.0);
        c.theta_s = theta;
        theta += s.uniform(-1.0, 1.0);
        c.theta_e = theta;
    }
    return comps;
}

} // namespace detail

/// Deterministic one-pass generation of sleep records, traces, and
/// per-stroke ground truth. Every random quantity comes from a stream
/// keyed by (seed, entity), so corpus growth never reshuffles existing
/// entities.
inline CohortData generate_cohort_data(const CohortConfig& cfg) {
    cfg.validate();
    const detail::SleepPopulation pop;
    const detail::SleepCoupling coupling;
    const detail::JitterScale jitter;

    CohortData out;
    for (int u = 0; u < cfg.users; ++u) {
        const std::string user = detail::user_name(u);

        rng::Stream us(rng::derive_key(cfg.seed, "user", u));
        const double base_ts = us.normal(pop.ts_mean, pop.ts_user_sd);
        const double base_hrv = us.normal(pop.hrv_mean, pop.hrv_user_sd);
        const double base_lhr = us.normal(pop.lhr_mean, pop.lhr_user_sd);
        const double base_ahr = us.normal(pop.ahr_mean, pop.ahr_user_sd);

        std::vector<std::vector<LognormalComponent>> templates;
        templates.reserve(kTasks.size());
        for (int task = 0; task < static_cast<int>(kTasks.size()); ++task)
            templates.push_back(detail::task_template(cfg, u, task));

        for (int d = 0; d < cfg.days; ++d) {
            rng::Stream ds(rng::derive_key(cfg.seed, "day", u, d));
            const double r = ds.beta22();

            rng::Stream ss(rng::derive_key(cfg.seed, "sleep", u, d));
            SleepRecord rec;
            rec.user = user;
            rec.day = d + 1;
            rec.total_sleep_h =
                std::max(0.5, base_ts + coupling.ts_span * (r - 0.5) + ss.normal(0.0, coupling.ts_noise));
            rec.avg_hrv_ms =
                std::max(5.0, base_hrv + coupling.hrv_span * (r - 0.5) + ss.normal(0.0, coupling.hrv_noise));
            rec.lowest_hr_bpm =
                std::max(30.0, base_lhr + coupling.lhr_span * (r - 0.5) + ss.normal(0.0, coupling.lhr_noise));
            rec.avg_hr_bpm =
                std::max(30.0, base_ahr + coupling.ahr_span * (r - 0.5) + ss.normal(0.0, coupling.ahr_noise));
            out.sleep.push_back(std::move(rec));

            const double factor = 1.0 + cfg.effect * (1.0 - r);
            for (int ti = 0; ti < static_cast<int>(kTimings.size()); ++ti) {
                for (int task = 0; task < static_cast<int>(kTasks.size()); ++task) {
                    SampleKey key{user, d + 1, kTimings[ti], kTasks[task]};
                    const bool phrase = task >= 3;
                    const int strokes = phrase ? 1 : 2;
                    for (int k = 0; k < strokes; ++k) {
                        rng::Stream js(
                            rng::derive_key(cfg.seed, "stroke", u, d, ti, task, k));
                        StrokeTruth truth;
                        truth.key = key;
                        truth.stroke_index = k;
                        truth.components = templates[task];
                        for (auto& c : truth.components) {
                            c.D *= std::exp(js.normal(0.0, jitter.d_lognorm_sd * factor));
                            c.t0 += js.normal(0.0, jitter.t0_sd * factor);
                        }
                        std::sort(truth.components.begin(), truth.components.end(),
                                  [](const auto& a, const auto& b) { return a.t0 < b.t0; });

                        double end = 0.0;
                        for (const auto& c : truth.components)
                            end = std::max(end, lognormal_fraction_time(c, kZ999));
                        truth.duration = end + 0.05;

                        const Synthesis syn =
                            synthesize(truth.components, truth.duration, cfg.fs);
                        RawTrace trace;
                        trace.source_id = sample_id(key);
                        trace.stroke_index = k;
                        trace.samples.resize(syn.velocity.size());
                        for (std::size_t i = 0; i < syn.velocity.size(); ++i) {
                            trace.samples[i].t = syn.velocity.t[i];
                            trace.samples[i].x = syn.x[i];
                            trace.samples[i].y = syn.y[i];
                            trace.samples[i].pressure = 1.0;
                        }
                        out.traces.push_back(std::move(trace));
                        out.truth.push_back(std::move(truth));
                    }
                }
            }
        }
    }
    return out;
}

/// Ground-truth components as decomposition records (snr pinned at the
/// 100 dB cap: the trace was synthesized from exactly these components).
inline std::vector<StrokeDecomposition> gen_ground_truth(const CohortConfig& cfg) {
    const CohortData data = generate_cohort_data(cfg);
    std::vector<StrokeDecomposition> out;
    out.reserve(data.truth.size());
    for (const auto& t : data.truth) {
        StrokeDecomposition d;
        d.stroke_id = sample_id(t.key) + "#" + std::to_string(t.stroke_index);
        d.nblog = static_cast<int>(t.components.size());
        d.snr_db = 100.0;
        d.components = t.components;
        out.push_back(std::move(d));
    }
    return out;
}

} // namespace strokelab
