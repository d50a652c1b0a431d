#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "strokelab/error.hpp"
#include "strokelab/types.hpp"

namespace strokelab {

/// Positions resampled onto a uniform grid, before differentiation.
struct StrokePositions {
    std::string id;
    double fs = 0.0;
    std::vector<double> t, x, y;
};

/// Linear interpolation of a trace's positions onto the grid
/// t0, t0 + 1/fs, ... covering [t0, tEnd].
inline StrokePositions resample_uniform(const RawTrace& trace, double fs) {
    if (!(fs > 0.0)) throw ValidationError("resample_uniform: fs must be > 0");
    const auto& s = trace.samples;
    if (s.size() < 2) throw ValidationError("resample_uniform: fewer than 2 samples");
    for (std::size_t i = 1; i < s.size(); ++i)
        if (!(s[i].t > s[i - 1].t))
            throw ValidationError("resample_uniform: timestamps not strictly increasing in '" +
                                  trace.source_id + "'");
    const double t0 = s.front().t;
    const double duration = s.back().t - t0;
    const std::size_t n = static_cast<std::size_t>(std::floor(duration * fs + 1e-9)) + 1;
    if (n < 3) throw ValidationError("stroke too short");

    StrokePositions out;
    out.id = trace.source_id + "#" + std::to_string(trace.stroke_index);
    out.fs = fs;
    out.t.resize(n);
    out.x.resize(n);
    out.y.resize(n);
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ti = t0 + static_cast<double>(i) / fs;
        out.t[i] = ti;
        while (j + 2 < s.size() && s[j + 1].t <= ti) ++j;
        const double span = s[j + 1].t - s[j].t;
        const double w = std::min(1.0, std::max(0.0, (ti - s[j].t) / span));
        out.x[i] = s[j].x + w * (s[j + 1].x - s[j].x);
        out.y[i] = s[j].y + w * (s[j + 1].y - s[j].y);
    }
    return out;
}

/// Truncated (+-4 sigma) normalized Gaussian kernel for a series sampled
/// at fs. Returns {1.0} when sigma_s is too small to matter.
inline std::vector<double> gaussian_kernel(double sigma_s, double fs) {
    if (sigma_s < 0.0) throw ValidationError("smooth_gaussian: sigma must be >= 0");
    const double sn = sigma_s * fs;  // sigma in samples
    const int radius = static_cast<int>(std::ceil(4.0 * sn));
    if (radius < 1) return {1.0};
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * (i / sn) * (i / sn));
        k[i + radius] = w;
        sum += w;
    }
    for (auto& w : k) w /= sum;
    return k;
}

/// Convolution with the truncated Gaussian, whole-sample reflection at
/// the boundaries. sigma_s = 0 returns the input unchanged.
inline std::vector<double> smooth_gaussian(const std::vector<double>& s, double sigma_s, double fs) {
    const auto kernel = gaussian_kernel(sigma_s, fs);
    if (kernel.size() == 1 || s.size() < 2) return s;
    const int radius = static_cast<int>(kernel.size() / 2);
    const int n = static_cast<int>(s.size());
    std::vector<double> out(s.size());
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
            int idx = i + k;
            while (idx < 0 || idx >= n) {  // reflect about the end samples
                if (idx < 0) idx = -idx;
                if (idx >= n) idx = 2 * n - 2 - idx;
            }
            acc += kernel[k + radius] * s[idx];
        }
        out[i] = acc;
    }
    return out;
}

/// Central differences (one-sided at the ends) and the speed profile.
inline Stroke differentiate(const StrokePositions& p) {
    const std::size_t n = p.t.size();
    if (n < 3) throw ValidationError("differentiate: need at least 3 samples");
    Stroke s;
    s.id = p.id;
    s.fs = p.fs;
    s.t = p.t;
    s.x = p.x;
    s.y = p.y;
    s.vx.resize(n);
    s.vy.resize(n);
    s.speed.resize(n);
    const double fs = p.fs;
    s.vx[0] = (p.x[1] - p.x[0]) * fs;
    s.vy[0] = (p.y[1] - p.y[0]) * fs;
    s.vx[n - 1] = (p.x[n - 1] - p.x[n - 2]) * fs;
    s.vy[n - 1] = (p.y[n - 1] - p.y[n - 2]) * fs;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        s.vx[i] = (p.x[i + 1] - p.x[i - 1]) * fs * 0.5;
        s.vy[i] = (p.y[i + 1] - p.y[i - 1]) * fs * 0.5;
    }
    for (std::size_t i = 0; i < n; ++i) s.speed[i] = std::hypot(s.vx[i], s.vy[i]);
    return s;
}

struct PreprocessConfig {
    double fs = 200.0;            // resampling rate, Hz
    double smooth_sigma_s = 0.008;  // position smoothing, s
};

struct PreprocessResult {
    std::vector<Stroke> strokes;  // input order preserved
    int skipped_short = 0;        // traces too short after resampling
};

/// Full raw-to-kinematics stage: resample, smooth positions, differentiate.
/// Strokes shorter than 8 samples after resampling are skipped and
/// counted, not fatal.
inline PreprocessResult preprocess(const std::vector<RawTrace>& traces,
                                   const PreprocessConfig& cfg = {}) {
    PreprocessResult out;
    out.strokes.reserve(traces.size());
    for (const auto& tr : traces) {
        try {
            StrokePositions p = resample_uniform(tr, cfg.fs);
            if (p.t.size() < 8) throw ValidationError("stroke too short");
            p.x = smooth_gaussian(p.x, cfg.smooth_sigma_s, cfg.fs);
            p.y = smooth_gaussian(p.y, cfg.smooth_sigma_s, cfg.fs);
            out.strokes.push_back(differentiate(p));
        } catch (const ValidationError&) {
            ++out.skipped_short;
        }
    }
    return out;
}

} // namespace strokelab
