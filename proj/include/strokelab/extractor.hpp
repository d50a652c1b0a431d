#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "strokelab/error.hpp"
#include "strokelab/lognormal.hpp"
#include "strokelab/types.hpp"

namespace strokelab {

struct ExtractorConfig {
    double snr_target_db = 25.0;      // greedy stopping quality
    int max_components = 40;
    double peak_floor = 0.05;         // fraction of the stroke's max speed
    double min_peak_separation_s = 0.02;
    int refine_iters = 200;           // Nelder-Mead iteration cap per component
    int sigma_grid_size = 30;         // log-spaced sigma candidates
    double sigma_grid_min = 0.05;
    double sigma_grid_max = 1.0;
    bool snr_on_speed = false;        // false: 2-D velocity SNR (default)

    std::vector<double> sigma_grid() const {
        std::vector<double> g(sigma_grid_size);
        const double lmin = std::log(sigma_grid_min), lmax = std::log(sigma_grid_max);
        for (int i = 0; i < sigma_grid_size; ++i)
            g[i] = std::exp(lmin + (lmax - lmin) * i / (sigma_grid_size - 1));
        return g;
    }
};

/// Local maxima of a uniform series strictly above peak_floor * max,
/// at least min_peak_separation apart, strongest first.
inline std::vector<std::pair<int, double>> detect_modes(std::span<const double> speed, double fs,
                                                        const ExtractorConfig& cfg) {
    const int n = static_cast<int>(speed.size());
    if (n < 3) return {};
    double global_max = 0.0;
    for (double v : speed) global_max = std::max(global_max, v);
    if (global_max <= 0.0) return {};
    const double floor = cfg.peak_floor * global_max;

    std::vector<std::pair<int, double>> peaks;
    for (int i = 1; i + 1 < n; ++i)
        if (speed[i] > speed[i - 1] && speed[i] > speed[i + 1] && speed[i] > floor)
            peaks.emplace_back(i, speed[i]);
    std::sort(peaks.begin(), peaks.end(),
              [](const auto& a, const auto& b) {
                  return a.second != b.second ? a.second > b.second : a.first < b.first;
              });

    const double min_sep = cfg.min_peak_separation_s * fs;
    std::vector<std::pair<int, double>> kept;
    for (const auto& p : peaks) {
        bool ok = true;
        for (const auto& q : kept)
            if (std::abs(p.first - q.first) < min_sep) { ok = false; break; }
        if (ok) kept.push_back(p);
    }
    return kept;
}

namespace detail {

// Sub-sample time where the series crosses `level`, walking outward from
// a peak but never past the mode's own basin (the walk stops where the
// series starts rising again, i.e. at the valley before a neighboring
// pulse). Returns nullopt when the flank is truncated by the basin edge
// or the series end before dropping below the level.
inline std::optional<double> half_crossing(std::span<const double> s, double fs, int peak,
                                           double level, int dir) {
    int i = peak;
    const int n = static_cast<int>(s.size());
    while (true) {
        const int j = i + dir;
        if (j < 0 || j >= n) return std::nullopt;
        if (s[j] < level) {
            const double frac = (s[i] - level) / (s[i] - s[j]);
            return (static_cast<double>(i) + dir * frac) / fs;
        }
        if (s[j] > s[i] && i != peak) return std::nullopt;  // left the basin
        i = j;
    }
}

struct FitWindow {
    int begin = 0, end = 0;  // [begin, end)
    bool empty() const { return end <= begin; }
};

inline FitWindow component_window(const LognormalComponent& c, double fs, int n) {
    const double t_lo = lognormal_fraction_time(c, kZ001);
    const double t_hi = lognormal_fraction_time(c, kZ999);
    const double pad = 0.3 * (t_hi - t_lo);
    FitWindow w;
    w.begin = std::max(0, static_cast<int>(std::floor((t_lo - pad) * fs)));
    w.end = std::min(n, static_cast<int>(std::ceil((t_hi + pad) * fs)) + 1);
    return w;
}

// Squared 2-D velocity error of component c against target on [w.begin, w.end).
// t[] is the stroke-relative grid.
inline double component_sse(const LognormalComponent& c, std::span<const double> t,
                            std::span<const double> tvx, std::span<const double> tvy,
                            const FitWindow& w) {
    double sse = 0.0;
    const double dtheta = c.theta_e - c.theta_s;
    for (int i = w.begin; i < w.end; ++i) {
        double mx = 0.0, my = 0.0;
        const double dt = t[i] - c.t0;
        if (dt > 0.0) {
            const double l = std::log(dt);
            const double z = (l - c.mu) / c.sigma;
            const double lam = std::exp(-0.5 * z * z - l) / (c.sigma * kSqrt2Pi);
            if (lam != 0.0) {
                const double frac = 0.5 * (1.0 + erf_approx(z * 0.70710678118654752440));
                const double ang = c.theta_s + dtheta * frac;
                mx = c.D * std::cos(ang) * lam;
                my = c.D * std::sin(ang) * lam;
            }
        }
        const double ex = tvx[i] - mx;
        const double ey = tvy[i] - my;
        sse += ex * ex + ey * ey;
    }
    return sse;
}

// The raw (t0, mu, sigma) coordinates are poorly identified: shifting the
// onset earlier while raising mu leaves the pulse almost unchanged, so a
// simplex wanders along that valley. The refinement therefore optimizes
// the observable shape coordinates -- mode time, log half-height width,
// log skew -- where the weak direction is axis-aligned, and converts back.
constexpr double kHalfWidthC = 1.17741002251547469101;  // sqrt(2 ln 2)

struct ShapeParams {
    double D, t_mode, ln_w, ln_sigma, theta_s, theta_e;
};

inline ShapeParams shape_from_component(const LognormalComponent& c) {
    const double scale = std::exp(c.mu - c.sigma * c.sigma);
    return {c.D,
            c.t0 + scale,
            std::log(2.0 * scale * std::sinh(c.sigma * kHalfWidthC)),
            std::log(c.sigma),
            c.theta_s,
            c.theta_e};
}

// Returns false when the shape maps outside the component's valid ranges.
inline bool component_from_shape(const ShapeParams& p, LognormalComponent& out) {
    const double sigma = std::exp(p.ln_sigma);
    const double w = std::exp(p.ln_w);
    const double scale = w / (2.0 * std::sinh(sigma * kHalfWidthC));
    const double mu = std::log(scale) + sigma * sigma;
    if (!(mu >= -6.0 && mu <= 2.0) || !std::isfinite(mu)) return false;
    out.D = p.D;
    out.t0 = p.t_mode - scale;
    out.mu = mu;
    out.sigma = sigma;
    out.theta_s = p.theta_s;
    out.theta_e = p.theta_e;
    return true;
}

// A motor command belongs to the stroke that recorded it: its onset may
// precede pen-down only by a short grace interval and its support may
// not run far past pen-up. Without these constraints two degenerate fits
// dominate symmetric-looking evidence: a sigma -> 0 pulse whose onset
// drifts seconds before the stroke, and a fat-tail sigma ~ 1 pulse whose
// mass extends long after it.
inline constexpr double kOnsetGraceS = 0.15;

inline double support_limit(double duration) {
    return duration + std::max(0.1, 0.2 * duration);
}

inline bool component_supported(const LognormalComponent& c, double duration) {
    if (c.t0 < -kOnsetGraceS) return false;
    return lognormal_fraction_time(c, kZ999) <= support_limit(duration);
}

// Trust box around an initial estimate: the component must keep
// explaining the mode it was seeded on. Boxes are anchored once, when
// the component is seeded; re-deriving them from drifted parameters
// would let a bad fit ratchet itself wider sweep after sweep.
struct ShapeBox {
    std::array<double, 6> lo, hi;
    double duration = 1e9;

    static ShapeBox around(const ShapeParams& p, double duration) {
        ShapeBox b;
        const double w = std::exp(p.ln_w);
        b.lo = {p.D / 4.0, p.t_mode - 0.35 * w, p.ln_w - 1.0,
                std::max(p.ln_sigma - 1.35, std::log(0.01)), p.theta_s - 3.2, p.theta_e - 3.2};
        b.hi = {p.D * 4.0, p.t_mode + 0.35 * w, p.ln_w + 1.0,
                std::min(p.ln_sigma + 1.35, std::log(3.0)), p.theta_s + 3.2, p.theta_e + 3.2};
        b.duration = duration;
        return b;
    }

    void clamp(std::array<double, 6>& x) const {
        for (int i = 0; i < 6; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
    }
};

inline double shape_sse(const std::array<double, 6>& x, const ShapeBox& box,
                        std::span<const double> t, std::span<const double> tvx,
                        std::span<const double> tvy, const FitWindow& w) {
    std::array<double, 6> p = x;
    box.clamp(p);
    LognormalComponent c;
    if (!component_from_shape({p[0], p[1], p[2], p[3], p[4], p[5]}, c))
        return 1e300;
    if (!component_supported(c, box.duration)) return 1e300;
    return component_sse(c, t, tvx, tvy, w);
}

// Nelder-Mead with classic coefficients over the shape coordinates; the
// simplex is rebuilt at the incumbent after collapse (up to two
// restarts). The best vertex is monotone non-increasing throughout.
inline LognormalComponent nelder_mead_component(
    const LognormalComponent& start, const ShapeBox& box, std::span<const double> t,
    std::span<const double> tvx, std::span<const double> tvy, const FitWindow& w, int max_iters,
    double* out_f = nullptr) {
    constexpr int N = 6;
    using Point = std::array<double, N>;

    auto eval = [&](const Point& p) { return shape_sse(p, box, t, tvx, tvy, w); };

    const ShapeParams s0 = shape_from_component(start);
    Point incumbent{s0.D, s0.t_mode, s0.ln_w, s0.ln_sigma, s0.theta_s, s0.theta_e};
    box.clamp(incumbent);
    double incumbent_f = eval(incumbent);

    const double w0 = std::exp(s0.ln_w);
    const Point steps{0.08 * s0.D, 0.06 * w0, 0.10, 0.12, 0.12, 0.12};

    std::array<Point, N + 1> xs;
    std::array<double, N + 1> fs{};
    std::array<int, N + 1> order;
    auto sort_order = [&] {
        for (int i = 0; i <= N; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    };

    for (int restart = 0; restart < 3; ++restart) {
        xs[0] = incumbent;
        fs[0] = incumbent_f;
        const double shrink = restart == 0 ? 1.0 : 0.25;
        for (int i = 0; i < N; ++i) {
            xs[i + 1] = incumbent;
            xs[i + 1][i] += steps[i] * shrink;
            fs[i + 1] = eval(xs[i + 1]);
        }

        for (int iter = 0; iter < max_iters; ++iter) {
            sort_order();
            const int best = order[0], worst = order[N], second_worst = order[N - 1];
            if (fs[worst] - fs[best] <= 1e-13 * (std::abs(fs[best]) + 1e-300)) break;

            Point centroid{};
            for (int i = 0; i <= N; ++i) {
                if (i == worst) continue;
                for (int d = 0; d < N; ++d) centroid[d] += xs[i][d];
            }
            for (double& c : centroid) c /= N;

            auto blend = [&](double coef) {
                Point p;
                for (int d = 0; d < N; ++d)
                    p[d] = centroid[d] + coef * (centroid[d] - xs[worst][d]);
                return p;
            };

            const Point refl = blend(1.0);
            const double f_refl = eval(refl);
            if (f_refl < fs[order[0]]) {
                const Point exp_p = blend(2.0);
                const double f_exp = eval(exp_p);
                if (f_exp < f_refl) {
                    xs[worst] = exp_p;
                    fs[worst] = f_exp;
                } else {
                    xs[worst] = refl;
                    fs[worst] = f_refl;
                }
            } else if (f_refl < fs[second_worst]) {
                xs[worst] = refl;
                fs[worst] = f_refl;
            } else {
                const bool outside = f_refl < fs[worst];
                const Point contr = blend(outside ? 0.5 : -0.5);
                const double f_contr = eval(contr);
                if (f_contr < std::min(f_refl, fs[worst])) {
                    xs[worst] = contr;
                    fs[worst] = f_contr;
                } else {
                    for (int i = 0; i <= N; ++i) {
                        if (i == best) continue;
                        for (int d = 0; d < N; ++d)
                            xs[i][d] = xs[best][d] + 0.5 * (xs[i][d] - xs[best][d]);
                        fs[i] = eval(xs[i]);
                    }
                }
            }
        }
        sort_order();
        const double improved = incumbent_f - fs[order[0]];
        if (fs[order[0]] < incumbent_f) {
            incumbent = xs[order[0]];
            incumbent_f = fs[order[0]];
        }
        if (improved <= 1e-12 * (std::abs(incumbent_f) + 1e-300)) break;
    }

    box.clamp(incumbent);
    LognormalComponent result = start;
    component_from_shape(
        {incumbent[0], incumbent[1], incumbent[2], incumbent[3], incumbent[4], incumbent[5]},
        result);
    if (out_f) *out_f = incumbent_f;
    return result;
}

inline double residual_power(std::span<const double> rvx, std::span<const double> rvy) {
    double p = 0.0;
    for (std::size_t i = 0; i < rvx.size(); ++i) p += rvx[i] * rvx[i] + rvy[i] * rvy[i];
    return p;
}

} // namespace detail

/// An initial estimate together with the quarter-peak basin it was
/// measured on; greedy fitting stays inside that basin so overlapping
/// neighbor pulses cannot pull a component away from its own mode.
struct InitialCandidate {
    LognormalComponent component;
    int basin_begin = 0, basin_end = 0;  // [begin, end)
};

/// Closed-form initial estimate at a detected mode: for each grid sigma,
/// mu and t0 follow from the measured half-peak width and the mode time,
/// D from the peak height; the candidate with least squared speed
/// residual on the >= 25%-of-peak window wins. Angles are the velocity
/// direction where the candidate's cumulative fraction is 0.01 / 0.99.
/// Returns nullopt when the mode's flanks are truncated or the window is
/// narrower than 3 samples.
inline std::vector<InitialCandidate> estimate_initial_candidates(
    std::span<const double> speed, std::span<const double> vx, std::span<const double> vy,
    double fs, std::pair<int, double> mode, const ExtractorConfig& cfg) {
    const int n = static_cast<int>(speed.size());
    const int m = mode.first;
    if (m <= 0 || m >= n - 1 || mode.second <= 0.0) return std::nullopt;

    // Sub-sample mode position and height by parabolic interpolation
    // through the peak sample and its neighbors.
    double delta = 0.0;
    double v_peak = mode.second;
    {
        const double a = speed[m - 1], b = speed[m], c = speed[m + 1];
        const double denom = a - 2.0 * b + c;
        if (denom < 0.0) {
            delta = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
            v_peak = b - 0.25 * (a - c) * delta;
        }
    }

    // Quarter-peak fit window around the mode, restricted to its basin.
    int wl = m, wr = m;
    const double quarter = 0.25 * v_peak;
    while (wl > 0 && speed[wl - 1] >= quarter && speed[wl - 1] <= speed[wl]) --wl;
    while (wr + 1 < n && speed[wr + 1] >= quarter && speed[wr + 1] <= speed[wr]) ++wr;
    if (wr - wl + 1 < 3) return std::nullopt;

    const double t_mode = (static_cast<double>(m) + delta) / fs;
    const auto t_left = detail::half_crossing(speed, fs, m, 0.5 * v_peak, -1);
    const auto t_right = detail::half_crossing(speed, fs, m, 0.5 * v_peak, +1);
    if (!t_left && !t_right) return std::nullopt;  // both flanks truncated
    const double wl_time = t_left ? t_mode - *t_left : -1.0;
    const double wr_time = t_right ? *t_right - t_mode : -1.0;
    if ((t_left && !(wl_time > 0.0)) || (t_right && !(wr_time > 0.0))) return std::nullopt;

    const double duration = static_cast<double>(n - 1) / fs;

    std::optional<LognormalComponent> best;
    double best_sse = 0.0;
    for (double sigma : cfg.sigma_grid()) {
        // In log-time the pulse is Gaussian with std sigma; with the mode
        // offset m0 = exp(mu - sigma^2) the half-height flanks sit at
        // m0 (1 - exp(-sigma c)) left and m0 (exp(sigma c) - 1) right.
        // Overlap can truncate one flank; the other then determines m0.
        const double cl = 1.0 - std::exp(-sigma * detail::kHalfWidthC);
        const double cr = std::exp(sigma * detail::kHalfWidthC) - 1.0;
        double scale;
        if (t_left && t_right) scale = (wl_time + wr_time) / (cl + cr);
        else if (t_left) scale = wl_time / cl;
        else scale = wr_time / cr;
        const double mu = std::log(scale) + sigma * sigma;
        if (!(mu >= -6.0 && mu <= 2.0)) continue;
        LognormalComponent c;
        c.sigma = sigma;
        c.mu = mu;
        c.t0 = t_mode - scale;  // mode sits at t0 + exp(mu - sigma^2)
        if (!(c.t0 < duration) || !detail::component_supported(c, duration)) continue;
        c.D = v_peak * sigma * kSqrt2Pi * std::exp(mu - 0.5 * sigma * sigma);
        if (!(c.D > 0.0) || !std::isfinite(c.D)) continue;

        double sse = 0.0;
        for (int i = wl; i <= wr; ++i) {
            const double e = speed[i] - c.D * lognormal_value(static_cast<double>(i) / fs, c);
            sse += e * e;
        }
        if (!best || sse < best_sse) {
            best = c;
            best_sse = sse;
        }
    }
    if (!best) return std::nullopt;

    auto direction_at = [&](double tq) {
        int i = std::clamp(static_cast<int>(std::lround(tq * fs)), 0, n - 1);
        return std::atan2(vy[i], vx[i]);
    };
    best->theta_s = direction_at(lognormal_fraction_time(*best, kZ01));
    best->theta_e = direction_at(lognormal_fraction_time(*best, kZ99));

    InitialCandidate out;
    out.component = *best;
    out.basin_begin = wl;
    out.basin_end = wr + 1;
    return out;
}

inline std::optional<LognormalComponent> estimate_initial(
    std::span<const double> speed, std::span<const double> vx, std::span<const double> vy,
    double fs, std::pair<int, double> mode, const ExtractorConfig& cfg) {
    const auto cand = estimate_initial_candidate(speed, vx, vy, fs, mode, cfg);
    if (!cand) return std::nullopt;
    return cand->component;
}

namespace detail {

// One coordinate-descent sweep: each component refitted against the
// observed velocity minus the current others. When anchors/windows are
// supplied (the greedy path), each component is clamped to the trust box
// and basin window it was seeded with; otherwise both derive from the
// component's current parameters (the standalone refine op and the final
// polish). Rolls back if the sweep raised the global residual; returns
// that residual power.
inline double refine_pass(const VelocityProfile& observed,
                          std::vector<LognormalComponent>& comps, const ExtractorConfig& cfg,
                          const std::vector<ShapeBox>* anchors = nullptr,
                          const std::vector<FitWindow>* windows = nullptr) {
    const std::size_t n = observed.size();
    const int ni = static_cast<int>(n);
    const double fs = n > 1 ? 1.0 / (observed.t[1] - observed.t[0]) : 1.0;

    std::vector<double> recon_vx(n), recon_vy(n), tvx(n), tvy(n);
    eval_components(comps, observed.t, recon_vx, recon_vy);

    auto global_residual = [&] {
        double p = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double ex = observed.vx[k] - recon_vx[k];
            const double ey = observed.vy[k] - recon_vy[k];
            p += ex * ex + ey * ey;
        }
        return p;
    };

    const std::vector<LognormalComponent> before = comps;
    const double res_before = global_residual();

    std::vector<double> own_vx(n), own_vy(n);
    for (std::size_t i = 0; i < comps.size(); ++i) {
        std::fill(own_vx.begin(), own_vx.end(), 0.0);
        std::fill(own_vy.begin(), own_vy.end(), 0.0);
        accumulate_component(comps[i], observed.t, own_vx, own_vy);
        for (std::size_t k = 0; k < n; ++k) {
            tvx[k] = observed.vx[k] - (recon_vx[k] - own_vx[k]);
            tvy[k] = observed.vy[k] - (recon_vy[k] - own_vy[k]);
        }
        const FitWindow w = windows ? (*windows)[i] : component_window(comps[i], fs, ni);
        if (w.empty()) continue;
        const ShapeBox box =
            anchors ? (*anchors)[i]
                    : ShapeBox::around(shape_from_component(comps[i]), observed.t.back());
        const LognormalComponent updated = nelder_mead_component(
            comps[i], box, observed.t, tvx, tvy, w, cfg.refine_iters);
        for (std::size_t k = 0; k < n; ++k) {
            recon_vx[k] -= own_vx[k];
            recon_vy[k] -= own_vy[k];
        }
        comps[i] = updated;
        accumulate_component(comps[i], observed.t, recon_vx, recon_vy);
    }

    const double res_after = global_residual();
    if (res_after > res_before) {
        comps = before;
        return res_before;
    }
    return res_after;
}

} // namespace detail

/// Per-component bounded Nelder-Mead against the observed velocity minus
/// all other components, then one joint sequential pass with updated
/// neighbors. The global residual never increases: a sweep that would
/// raise it is rolled back.
inline std::vector<LognormalComponent> refine(const VelocityProfile& observed,
                                              std::vector<LognormalComponent> comps,
                                              const ExtractorConfig& cfg) {
    if (comps.empty()) throw ValidationError("refine: no components");
    detail::refine_pass(observed, comps, cfg);
    detail::refine_pass(observed, comps, cfg);
    return comps;
}

/// Greedy mode extraction: detect the strongest residual mode, estimate,
/// refine against the residual, subtract; stop at the SNR target, when no
/// mode rises above the floor, or at max_components. One joint refinement
/// sweep finishes the fit. Deterministic; components sorted by t0.
inline StrokeDecomposition extract_stroke(const Stroke& stroke, const ExtractorConfig& cfg) {
    const std::size_t n = stroke.size();
    VelocityProfile obs;
    obs.t.resize(n);
    for (std::size_t i = 0; i < n; ++i) obs.t[i] = stroke.t[i] - stroke.t[0];
    obs.vx = stroke.vx;
    obs.vy = stroke.vy;
    obs.speed = stroke.speed;

    double sig_power = 0.0, global_max_speed = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sig_power += obs.vx[i] * obs.vx[i] + obs.vy[i] * obs.vy[i];
        global_max_speed = std::max(global_max_speed, obs.speed[i]);
    }
    if (sig_power <= 0.0) throw ValidationError("extract_stroke: empty motion");

    const double fs = stroke.fs;
    const double floor_abs = cfg.peak_floor * global_max_speed;

    std::vector<double> rvx = obs.vx, rvy = obs.vy, rspeed = obs.speed;
    std::vector<LognormalComponent> comps;
    std::vector<detail::ShapeBox> anchors;
    std::vector<detail::FitWindow> basins;
    double res_power = sig_power;

    auto snr_now = [&] {
        if (res_power < 1e-12 * sig_power) return 100.0;
        return std::min(100.0, 10.0 * std::log10(sig_power / res_power));
    };

    auto padded_basin = [&](const InitialCandidate& c) {
        const int pad = std::max(2, (c.basin_end - c.basin_begin) / 4);
        detail::FitWindow w;
        w.begin = std::max(0, c.basin_begin - pad);
        w.end = std::min(static_cast<int>(n), c.basin_end + pad);
        return w;
    };

    while (static_cast<int>(comps.size()) < cfg.max_components &&
           snr_now() < cfg.snr_target_db) {
        const auto modes = detect_modes(rspeed, fs, cfg);
        bool accepted = false;
        for (const auto& mode : modes) {
            if (mode.second < floor_abs) break;  // modes are sorted by height
            auto cand = estimate_initial_candidate(rspeed, rvx, rvy, fs, mode, cfg);
            if (!cand) continue;
            const detail::FitWindow w = padded_basin(*cand);
            if (w.empty()) continue;
            const auto box = detail::ShapeBox::around(
                detail::shape_from_component(cand->component), obs.t.back());
            const LognormalComponent fit = detail::nelder_mead_component(
                cand->component, box, obs.t, rvx, rvy, w, cfg.refine_iters);

            // accept only on a material drop of the global residual
            std::vector<double> cvx(n, 0.0), cvy(n, 0.0);
            accumulate_component(fit, obs.t, cvx, cvy);
            double new_power = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double ex = rvx[k] - cvx[k];
                const double ey = rvy[k] - cvy[k];
                new_power += ex * ex + ey * ey;
            }
            if (new_power < res_power * (1.0 - 1e-4)) {
                comps.push_back(fit);
                anchors.push_back(box);
                basins.push_back(w);
                // backfit: one anchored sweep so earlier components adapt
                // to the newly explained structure
                res_power = detail::refine_pass(obs, comps, cfg, &anchors, &basins);
                eval_components(comps, obs.t, cvx, cvy);
                for (std::size_t k = 0; k < n; ++k) {
                    rvx[k] = obs.vx[k] - cvx[k];
                    rvy[k] = obs.vy[k] - cvy[k];
                    rspeed[k] = std::hypot(rvx[k], rvy[k]);
                }
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }

    if (!comps.empty()) {
        // Final joint polish over each component's full support; the
        // residual is locally clean by now, and the pass rolls itself
        // back if it cannot improve.
        detail::refine_pass(obs, comps, cfg);
        std::sort(comps.begin(), comps.end(),
                  [](const auto& a, const auto& b) { return a.t0 < b.t0; });
    }

    StrokeDecomposition out;
    out.stroke_id = stroke.id;
    out.components = std::move(comps);
    out.nblog = static_cast<int>(out.components.size());
    if (out.nblog > 0) {
        VelocityProfile recon;
        recon.t = obs.t;
        recon.vx.resize(n);
        recon.vy.resize(n);
        recon.speed.resize(n);
        eval_components(out.components, recon.t, recon.vx, recon.vy);
        for (std::size_t i = 0; i < n; ++i) recon.speed[i] = std::hypot(recon.vx[i], recon.vy[i]);
        out.snr_db = cfg.snr_on_speed ? snr_db_speed(obs, recon) : snr_db(obs, recon);
    } else {
        out.snr_db = 0.0;
    }
    return out;
}

} // namespace strokelab
