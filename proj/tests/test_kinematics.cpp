#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "strokelab/kinematics.hpp"
#include "strokelab/lognormal.hpp"
#include "test_util.hpp"

using namespace strokelab;

namespace {
RawTrace line_trace(double t0, double t1, double x0, double x1, int n) {
    RawTrace t;
    t.source_id = "line";
    for (int i = 0; i < n; ++i) {
        RawSample s;
        const double w = static_cast<double>(i) / (n - 1);
        s.t = t0 + w * (t1 - t0);
        s.x = x0 + w * (x1 - x0);
        s.y = 0.0;
        t.samples.push_back(s);
    }
    return t;
}
} // namespace

TEST_CASE("resample: linear interpolation onto the grid") {
    const auto p = resample_uniform(line_trace(0, 1, 0, 1, 2), 4.0);
    REQUIRE(p.t.size() == 5);
    const double want[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    for (int i = 0; i < 5; ++i) {
        REQUIRE(p.t[i] == Catch::Approx(i / 4.0));
        REQUIRE(p.x[i] == Catch::Approx(want[i]));
    }
}

TEST_CASE("resample: already-uniform input is unchanged") {
    const auto trace = line_trace(0, 1, 3, 7, 9);  // 9 points at 8 Hz
    const auto p = resample_uniform(trace, 8.0);
    REQUIRE(p.x.size() == 9);
    for (int i = 0; i < 9; ++i) REQUIRE(p.x[i] == Catch::Approx(trace.samples[i].x).margin(1e-12));
}

TEST_CASE("resample: guards") {
    REQUIRE_THROWS_WITH(resample_uniform(line_trace(0, 0.005, 0, 1, 3), 200.0),
                        Catch::Matchers::ContainsSubstring("stroke too short"));
    RawTrace one;
    one.samples.push_back({});
    REQUIRE_THROWS_AS(resample_uniform(one, 100.0), ValidationError);
    RawTrace dup = line_trace(0, 1, 0, 1, 4);
    dup.samples[2].t = dup.samples[1].t;  // not strictly increasing
    REQUIRE_THROWS_AS(resample_uniform(dup, 100.0), ValidationError);
}

TEST_CASE("smoothing: constant series, zero sigma, impulse response") {
    const std::vector<double> constant(50, 3.25);
    for (double v : smooth_gaussian(constant, 0.02, 100.0))
        REQUIRE(v == Catch::Approx(3.25).margin(1e-12));

    std::vector<double> any{1, 2, 3, 4};
    REQUIRE(smooth_gaussian(any, 0.0, 100.0) == any);

    // unit impulse at the center: output center equals the kernel peak,
    // and the output sums to 1 (kernel normalization, oracle = direct
    // kernel evaluation)
    std::vector<double> impulse(101, 0.0);
    impulse[50] = 1.0;
    const auto out = smooth_gaussian(impulse, 0.02, 100.0);
    const auto kernel = gaussian_kernel(0.02, 100.0);
    REQUIRE(out[50] == Catch::Approx(kernel[kernel.size() / 2]).margin(1e-12));
    const double total = std::accumulate(out.begin(), out.end(), 0.0);
    REQUIRE(total == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("smoothing preserves the mean of a smooth series") {
    std::vector<double> s(400);
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = 5.0 + 2.0 * std::sin(2.0 * kPi * i / 200.0);
    const auto sm = smooth_gaussian(s, 0.008, 200.0);
    const double m0 = std::accumulate(s.begin(), s.end(), 0.0) / s.size();
    const double m1 = std::accumulate(sm.begin(), sm.end(), 0.0) / sm.size();
    REQUIRE(std::abs(m1 - m0) / std::abs(m0) < 1e-6);
}

TEST_CASE("differentiate: linear and constant motion") {
    StrokePositions p;
    p.fs = 10.0;
    for (int i = 0; i < 21; ++i) {
        p.t.push_back(i / 10.0);
        p.x.push_back(i / 10.0);  // x(t) = t
        p.y.push_back(2.0);       // constant
    }
    const Stroke s = differentiate(p);
    for (std::size_t i = 0; i < s.size(); ++i) {
        REQUIRE(s.vx[i] == Catch::Approx(1.0).margin(1e-9));
        REQUIRE(s.vy[i] == Catch::Approx(0.0).margin(1e-12));
        REQUIRE(s.speed[i] == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("differentiate recovers the analytic lognormal peak speed") {
    LognormalComponent c{5.0, 0.05, -1.8, 0.3, 0.3, 0.3};
    const double fs = 200.0;
    const auto syn = synthesize({&c, 1}, 1.2, fs);

    StrokePositions p;
    p.fs = fs;
    p.t = syn.velocity.t;
    p.x = syn.x;
    p.y = syn.y;
    const Stroke s = differentiate(p);
    double peak = 0.0;
    for (double v : s.speed) peak = std::max(peak, v);

    const double analytic = test_util::analytic_peak_speed(c);
    REQUIRE(std::abs(peak - analytic) / analytic < 0.01);
}

TEST_CASE("differentiate then integrate recovers a smooth velocity (RMSE < 1% of peak)") {
    LognormalComponent c{6.0, 0.05, -1.6, 0.25, 0.0, 0.8};
    const double fs = 200.0;
    const auto syn = synthesize({&c, 1}, 1.2, fs);
    StrokePositions p;
    p.fs = fs;
    p.t = syn.velocity.t;
    p.x = syn.x;  // cumulative-trapezoid integral of vx
    p.y = syn.y;
    const Stroke s = differentiate(p);
    double peak = 0.0, sse = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        peak = std::max(peak, syn.velocity.speed[i]);
        const double ex = s.vx[i] - syn.velocity.vx[i];
        const double ey = s.vy[i] - syn.velocity.vy[i];
        sse += ex * ex + ey * ey;
    }
    const double rmse = std::sqrt(sse / s.size());
    REQUIRE(rmse < 0.01 * peak);
}

TEST_CASE("preprocess: short strokes are skipped with a count, not fatal") {
    std::vector<RawTrace> traces;
    traces.push_back(line_trace(0, 1, 0, 30, 50));
    traces.push_back(line_trace(0, 0.01, 0, 1, 3));  // too short at 200 Hz
    const auto prep = preprocess(traces, {});
    REQUIRE(prep.strokes.size() == 1);
    REQUIRE(prep.skipped_short == 1);
    REQUIRE(prep.strokes[0].size() >= 8);
}
