#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "strokelab/error.hpp"

namespace strokelab {

// ---------------------------------------------------------------------------
// Raw ink and sleep records
// ---------------------------------------------------------------------------

/// One time-stamped pen sample. Coordinates in millimeters, time in
/// seconds, pressure normalized to [0, 1] (1 when the source had no
/// pressure channel).
struct RawSample {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double pressure = 1.0;
    std::optional<double> tilt_x;  // degrees
    std::optional<double> tilt_y;  // degrees
    std::optional<double> hover;   // millimeters
};

/// One pen-down stroke. `source_id` names the task sample the stroke
/// belongs to; `stroke_index` orders strokes within that sample.
struct RawTrace {
    std::string source_id;
    int stroke_index = 0;
    std::vector<RawSample> samples;
};

/// One night of sleep indicators for one user.
struct SleepRecord {
    std::string user;
    int day = 0;
    double total_sleep_h = 0.0;
    double avg_hrv_ms = 0.0;
    double lowest_hr_bpm = 0.0;
    double avg_hr_bpm = 0.0;
};

// ---------------------------------------------------------------------------
// Kinematic form
// ---------------------------------------------------------------------------

/// Uniformly resampled, smoothed stroke with velocity and speed profiles.
/// All arrays share one length; t is a uniform grid at rate fs.
struct Stroke {
    std::string id;
    double fs = 0.0;  // Hz
    std::vector<double> t, x, y;      // s, mm, mm
    std::vector<double> vx, vy;       // mm/s
    std::vector<double> speed;        // mm/s

    std::size_t size() const { return t.size(); }
};

// ---------------------------------------------------------------------------
// Sigma-lognormal model
// ---------------------------------------------------------------------------

/// One motor-command primitive: amplitude D (mm), onset t0 (s,
/// stroke-relative), log-time parameters mu / sigma, and start/end
/// directions theta_s / theta_e (rad).
struct LognormalComponent {
    double D = 0.0;
    double t0 = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    double theta_s = 0.0;
    double theta_e = 0.0;
};

/// Planar velocity profile on a uniform grid.
struct VelocityProfile {
    std::vector<double> t;    // s
    std::vector<double> vx;   // mm/s
    std::vector<double> vy;   // mm/s
    std::vector<double> speed;  // mm/s

    std::size_t size() const { return t.size(); }
};

/// Full decomposition of one stroke, components sorted by t0.
struct StrokeDecomposition {
    std::string stroke_id;
    int nblog = 0;
    double snr_db = 0.0;
    std::vector<LognormalComponent> components;
};

// ---------------------------------------------------------------------------
// Sample schema: (user, day, timing, task)
// ---------------------------------------------------------------------------

enum class Timing { wake, lunch, bed };
enum class Task { circle, triangle, square, pos_phrase, neg_phrase };
enum class SleepTarget { total_sleep, avg_hrv, lowest_hr, avg_hr };

inline constexpr std::array<Timing, 3> kTimings{Timing::wake, Timing::lunch, Timing::bed};
inline constexpr std::array<Task, 5> kTasks{Task::circle, Task::triangle, Task::square,
                                            Task::pos_phrase, Task::neg_phrase};
inline constexpr std::array<SleepTarget, 4> kSleepTargets{
    SleepTarget::total_sleep, SleepTarget::avg_hrv, SleepTarget::lowest_hr, SleepTarget::avg_hr};

inline const char* to_string(Timing t) {
    switch (t) {
        case Timing::wake: return "wake";
        case Timing::lunch: return "lunch";
        case Timing::bed: return "bed";
    }
    return "?";
}

inline const char* to_string(Task t) {
    switch (t) {
        case Task::circle: return "circle";
        case Task::triangle: return "triangle";
        case Task::square: return "square";
        case Task::pos_phrase: return "pos_phrase";
        case Task::neg_phrase: return "neg_phrase";
    }
    return "?";
}

inline const char* to_string(SleepTarget t) {
    switch (t) {
        case SleepTarget::total_sleep: return "total_sleep";
        case SleepTarget::avg_hrv: return "avg_hrv";
        case SleepTarget::lowest_hr: return "lowest_hr";
        case SleepTarget::avg_hr: return "avg_hr";
    }
    return "?";
}

inline Timing timing_from_string(const std::string& s) {
    if (s == "wake") return Timing::wake;
    if (s == "lunch") return Timing::lunch;
    if (s == "bed") return Timing::bed;
    throw ValidationError("unknown timing '" + s + "'");
}

inline Task task_from_string(const std::string& s) {
    if (s == "circle") return Task::circle;
    if (s == "triangle") return Task::triangle;
    if (s == "square") return Task::square;
    if (s == "pos_phrase") return Task::pos_phrase;
    if (s == "neg_phrase") return Task::neg_phrase;
    throw ValidationError("unknown task '" + s + "'");
}

inline SleepTarget sleep_target_from_string(const std::string& s) {
    if (s == "total_sleep") return SleepTarget::total_sleep;
    if (s == "avg_hrv") return SleepTarget::avg_hrv;
    if (s == "lowest_hr") return SleepTarget::lowest_hr;
    if (s == "avg_hr") return SleepTarget::avg_hr;
    throw ValidationError("unknown target '" + s + "'");
}

/// Identifies one task sample.
struct SampleKey {
    std::string user;
    int day = 0;
    Timing timing = Timing::wake;
    Task task = Task::circle;

    friend bool operator==(const SampleKey&, const SampleKey&) = default;
};

/// Canonical sample id used in trace/decomposition files:
/// "<user>.d<day>.<timing>.<task>", e.g. "u01.d07.wake.circle".
inline std::string sample_id(const SampleKey& k) {
    char day[8];
    std::snprintf(day, sizeof day, "d%02d", k.day);
    return k.user + "." + day + "." + to_string(k.timing) + "." + to_string(k.task);
}

inline SampleKey parse_sample_id(const std::string& id) {
    // Split on '.' from the right: task and timing are closed vocabularies,
    // the user part may itself contain dots only if it never collides with
    // them, so a strict 4-field split is enforced.
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= id.size(); ++i) {
        if (i == id.size() || id[i] == '.') {
            parts.push_back(id.substr(start, i - start));
            start = i + 1;
        }
    }
    if (parts.size() != 4)
        throw ParseError("sample id '" + id + "' is not <user>.d<day>.<timing>.<task>");
    SampleKey k;
    k.user = parts[0];
    const std::string& d = parts[1];
    if (d.size() < 2 || d[0] != 'd')
        throw ParseError("sample id '" + id + "': bad day field '" + d + "'");
    k.day = std::atoi(d.c_str() + 1);
    if (k.day <= 0) throw ParseError("sample id '" + id + "': bad day field '" + d + "'");
    k.timing = timing_from_string(parts[2]);
    k.task = task_from_string(parts[3]);
    return k;
}

// ---------------------------------------------------------------------------
// Features, labels, predictions
// ---------------------------------------------------------------------------

/// Ten aggregate statistics of one task sample's decompositions.
struct FeatureVector {
    SampleKey key;
    double d_mean = 0, d_std = 0;
    double t0_mean = 0, t0_std = 0;
    double nblog_mean = 0, nblog_std = 0;
    double snr_mean = 0, snr_std = 0;
    double snr_per_nblog_mean = 0, snr_per_nblog_std = 0;

    static constexpr int kCount = 10;
    static const std::array<const char*, kCount>& names() {
        static const std::array<const char*, kCount> n{
            "d_mean", "d_std", "t0_mean", "t0_std", "nblog_mean",
            "nblog_std", "snr_mean", "snr_std", "snr_per_nblog_mean", "snr_per_nblog_std"};
        return n;
    }
    std::array<double, kCount> values() const {
        return {d_mean, d_std, t0_mean, t0_std, nblog_mean,
                nblog_std, snr_mean, snr_std, snr_per_nblog_mean, snr_per_nblog_std};
    }
};

/// Per-user quartile threshold that binarizes one sleep indicator.
struct LabelRule {
    std::string user;
    SleepTarget target = SleepTarget::total_sleep;
    bool above = false;  // true: above_q75 positive; false: below_q25 positive
    double threshold = 0.0;

    const char* direction() const { return above ? "above_q75" : "below_q25"; }
};

/// Out-of-fold prediction for one held-out task sample under one slice
/// model. `slice` names the model that produced it ("task:circle",
/// "timing:wake", ...).
struct FoldPrediction {
    SampleKey key;
    SleepTarget target = SleepTarget::total_sleep;
    std::string slice;
    double score = 0.0;
    int label = 0;
};

} // namespace strokelab
