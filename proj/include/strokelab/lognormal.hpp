#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "strokelab/error.hpp"
#include "strokelab/types.hpp"

namespace strokelab {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2Pi = 2.50662827463100050241;

/// erf via the Abramowitz & Stegun 7.1.26 rational approximation,
/// |error| <= 1.5e-7. Pinned coefficients keep the angular law
/// bit-identical across platforms and libms.
inline double erf_approx(double x) {
    constexpr double p = 0.3275911;
    constexpr double a1 = 0.254829592;
    constexpr double a2 = -0.284496736;
    constexpr double a3 = 1.421413741;
    constexpr double a4 = -1.453152027;
    constexpr double a5 = 1.061405429;
    const double ax = std::fabs(x);
    const double t = 1.0 / (1.0 + p * ax);
    const double poly = ((((a5 * t + a4) * t + a3) * t + a2) * t + a1) * t;
    const double y = 1.0 - poly * std::exp(-ax * ax);
    return x < 0 ? -y : y;
}

/// Lognormal impulse response: unit-area bell over log-time support
/// t > t0, exactly 0 for t <= t0.
inline double lognormal_value(double t, const LognormalComponent& c) {
    const double dt = t - c.t0;
    if (dt <= 0.0) return 0.0;
    const double z = (std::log(dt) - c.mu) / c.sigma;
    return std::exp(-0.5 * z * z) / (c.sigma * kSqrt2Pi * dt);
}

/// Cumulative fraction Phi of the component's lognormal: 0 at onset,
/// 1 at completion. Used as the angular interpolation law.
inline double lognormal_fraction(double t, const LognormalComponent& c) {
    const double dt = t - c.t0;
    if (dt <= 0.0) return 0.0;
    const double z = (std::log(dt) - c.mu) / (c.sigma * 1.41421356237309504880);
    return 0.5 * (1.0 + erf_approx(z));
}

/// Time of the lognormal mode: t0 + exp(mu - sigma^2).
inline double lognormal_mode_time(const LognormalComponent& c) {
    return c.t0 + std::exp(c.mu - c.sigma * c.sigma);
}

/// Peak value of D * Lambda: D * exp(sigma^2/2 - mu) / (sigma * sqrt(2*pi)).
inline double lognormal_peak_value(const LognormalComponent& c) {
    return c.D * std::exp(0.5 * c.sigma * c.sigma - c.mu) / (c.sigma * kSqrt2Pi);
}

/// Time at which the cumulative fraction reaches q: t0 + exp(mu + sigma * z_q)
/// with z_q the standard normal quantile.
inline double lognormal_fraction_time(const LognormalComponent& c, double z_q) {
    return c.t0 + std::exp(c.mu + c.sigma * z_q);
}

// Standard normal quantiles used for component support windows.
inline constexpr double kZ001 = -3.090232306167813;   // q = 0.001
inline constexpr double kZ999 = 3.090232306167813;    // q = 0.999
inline constexpr double kZ01 = -2.326347874040841;    // q = 0.01
inline constexpr double kZ99 = 2.326347874040841;     // q = 0.99

/// Accumulates one component's planar velocity onto vx/vy sampled at t[].
inline void accumulate_component(const LognormalComponent& c, std::span<const double> t,
                                 std::span<double> vx, std::span<double> vy) {
    const double dtheta = c.theta_e - c.theta_s;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double lam = lognormal_value(t[i], c);
        if (lam == 0.0) continue;
        const double ang = c.theta_s + dtheta * lognormal_fraction(t[i], c);
        vx[i] += c.D * std::cos(ang) * lam;
        vy[i] += c.D * std::sin(ang) * lam;
    }
}

/// Velocity of a component set evaluated on an existing grid.
inline void eval_components(std::span<const LognormalComponent> comps, std::span<const double> t,
                            std::span<double> vx, std::span<double> vy) {
    std::fill(vx.begin(), vx.end(), 0.0);
    std::fill(vy.begin(), vy.end(), 0.0);
    for (const auto& c : comps) accumulate_component(c, t, vx, vy);
}

/// Forward synthesis result: the velocity profile plus the integrated
/// trajectory (cumulative trapezoid of velocity).
struct Synthesis {
    VelocityProfile velocity;
    std::vector<double> x, y;  // mm, same grid as velocity.t
};

inline void validate_component(const LognormalComponent& c, double duration) {
    if (!(c.D > 0.0)) throw ValidationError("lognormal component: D must be > 0");
    if (!(c.sigma > 0.0) || c.sigma > 3.0)
        throw ValidationError("lognormal component: sigma must be in (0, 3]");
    if (!(c.mu >= -6.0 && c.mu <= 2.0))
        throw ValidationError("lognormal component: mu must be in [-6, 2]");
    if (!(c.t0 < duration)) throw ValidationError("lognormal component: t0 beyond stroke duration");
}

/// Superposition of lognormal components sampled at fs over [0, duration].
inline Synthesis synthesize(std::span<const LognormalComponent> comps, double duration, double fs) {
    if (comps.empty()) throw ValidationError("synthesize: no components");
    if (!(fs > 0.0) || !(duration > 0.0)) throw ValidationError("synthesize: bad duration or fs");
    for (const auto& c : comps) validate_component(c, duration);

    const std::size_t n = static_cast<std::size_t>(std::floor(duration * fs + 1e-9)) + 1;
    Synthesis out;
    auto& v = out.velocity;
    v.t.resize(n);
    v.vx.assign(n, 0.0);
    v.vy.assign(n, 0.0);
    v.speed.resize(n);
    for (std::size_t i = 0; i < n; ++i) v.t[i] = static_cast<double>(i) / fs;
    for (const auto& c : comps) accumulate_component(c, v.t, v.vx, v.vy);
    for (std::size_t i = 0; i < n; ++i) v.speed[i] = std::hypot(v.vx[i], v.vy[i]);

    out.x.resize(n);
    out.y.resize(n);
    out.x[0] = 0.0;
    out.y[0] = 0.0;
    const double h = 0.5 / fs;
    for (std::size_t i = 1; i < n; ++i) {
        out.x[i] = out.x[i - 1] + h * (v.vx[i - 1] + v.vx[i]);
        out.y[i] = out.y[i - 1] + h * (v.vy[i - 1] + v.vy[i]);
    }
    return out;
}

/// Reconstruction SNR over the full stroke window, on 2-D velocity:
/// 10*log10(signal power / residual power), capped at +100 dB.
inline double snr_db(const VelocityProfile& observed, const VelocityProfile& reconstructed) {
    if (observed.size() != reconstructed.size())
        throw ValidationError("snr_db: profiles must share one grid");
    double sig = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        sig += observed.vx[i] * observed.vx[i] + observed.vy[i] * observed.vy[i];
        const double ex = observed.vx[i] - reconstructed.vx[i];
        const double ey = observed.vy[i] - reconstructed.vy[i];
        noise += ex * ex + ey * ey;
    }
    if (sig <= 0.0) throw ValidationError("snr_db: empty motion");
    if (noise < 1e-12 * sig) return 100.0;
    return std::min(100.0, 10.0 * std::log10(sig / noise));
}

/// Scalar-speed SNR variant (config-selectable alternative).
inline double snr_db_speed(const VelocityProfile& observed, const VelocityProfile& reconstructed) {
    if (observed.size() != reconstructed.size())
        throw ValidationError("snr_db: profiles must share one grid");
    double sig = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        sig += observed.speed[i] * observed.speed[i];
        const double e = observed.speed[i] - reconstructed.speed[i];
        noise += e * e;
    }
    if (sig <= 0.0) throw ValidationError("snr_db: empty motion");
    if (noise < 1e-12 * sig) return 100.0;
    return std::min(100.0, 10.0 * std::log10(sig / noise));
}

} // namespace strokelab
