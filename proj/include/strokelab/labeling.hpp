#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "strokelab/error.hpp"
#include "strokelab/ink_io.hpp"
#include "strokelab/types.hpp"

namespace strokelab {

/// Quantile by linear interpolation between order statistics:
/// h = (n-1)q, result = v[floor(h)] + frac(h) * (v[floor(h)+1] - v[floor(h)]).
inline double quantile(std::span<const double> values, double q) {
    if (values.empty()) throw ValidationError("quantile: empty input");
    if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("quantile: q must be in [0, 1]");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - std::floor(h)) * (v[lo + 1] - v[lo]);
}

inline double sleep_value(const SleepRecord& r, SleepTarget t) {
    switch (t) {
        case SleepTarget::total_sleep: return r.total_sleep_h;
        case SleepTarget::avg_hrv: return r.avg_hrv_ms;
        case SleepTarget::lowest_hr: return r.lowest_hr_bpm;
        case SleepTarget::avg_hr: return r.avg_hr_bpm;
    }
    throw ValidationError("unknown sleep target");
}

/// Direction convention: scarcity is the problem for sleep duration and
/// HRV (below Q25 positive), excess for both heart rates (above Q75).
inline bool target_above(SleepTarget t) {
    return t == SleepTarget::lowest_hr || t == SleepTarget::avg_hr;
}

struct DayLabels {
    LabelRule rule;
    std::map<int, int> label_by_day;  // day -> {0, 1}
};

/// Quartile labeling of one user's indicator series. Strict inequality at
/// the threshold; ties are negative.
inline DayLabels label_days(std::span<const SleepRecord> user_records, SleepTarget target) {
    if (user_records.size() < 8)
        throw ValidationError("label_days: need at least 8 days per user");
    const std::string& user = user_records.front().user;
    std::vector<double> values;
    values.reserve(user_records.size());
    for (const auto& r : user_records) {
        if (r.user != user) throw ValidationError("label_days: records span multiple users");
        values.push_back(sleep_value(r, target));
    }

    DayLabels out;
    out.rule.user = user;
    out.rule.target = target;
    out.rule.above = target_above(target);
    out.rule.threshold = quantile(values, out.rule.above ? 0.75 : 0.25);
    for (const auto& r : user_records) {
        const double v = sleep_value(r, target);
        const bool positive = out.rule.above ? v > out.rule.threshold : v < out.rule.threshold;
        if (!out.label_by_day.emplace(r.day, positive ? 1 : 0).second)
            throw ValidationError("label_days: duplicate day " + std::to_string(r.day) +
                                  " for user " + user);
    }
    return out;
}

/// Labels for every (user, target) pair in a sleep dataset, keyed for the
/// evaluation stage.
struct LabelSet {
    // (user, target) -> labels
    std::map<std::pair<std::string, SleepTarget>, DayLabels> by_user_target;

    int label(const std::string& user, int day, SleepTarget target) const {
        const auto it = by_user_target.find({user, target});
        if (it == by_user_target.end())
            throw ValidationError("no labels for user '" + user + "'");
        const auto dit = it->second.label_by_day.find(day);
        if (dit == it->second.label_by_day.end())
            throw ValidationError("no label for user '" + user + "' day " + std::to_string(day));
        return dit->second;
    }
};

inline LabelSet label_all(std::span<const SleepRecord> records,
                          std::span<const SleepTarget> targets) {
    std::map<std::string, std::vector<SleepRecord>> per_user;
    for (const auto& r : records) per_user[r.user].push_back(r);
    LabelSet out;
    for (auto& [user, recs] : per_user) {
        std::sort(recs.begin(), recs.end(),
                  [](const auto& a, const auto& b) { return a.day < b.day; });
        for (SleepTarget t : targets) out.by_user_target.emplace(std::pair{user, t}, label_days(recs, t));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Labels CSV + rule sidecar
// ---------------------------------------------------------------------------

inline std::string write_labels_csv(const LabelSet& ls) {
    std::string out = "user,day,target,label\n";
    for (const auto& [key, dl] : ls.by_user_target) {
        for (const auto& [day, label] : dl.label_by_day) {
            out += key.first;
            out += ',';
            out += std::to_string(day);
            out += ',';
            out += to_string(key.second);
            out += ',';
            out += std::to_string(label);
            out += '\n';
        }
    }
    return out;
}

inline LabelSet read_labels_csv(std::string_view text) {
    const auto lines = csv::split_lines(text);
    if (lines.empty()) throw ParseError("labels CSV: empty file");
    csv::expect_header(csv::split_line(lines[0]), {"user", "day", "target", "label"},
                       "labels CSV");
    LabelSet out;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::string where = "labels CSV line " + std::to_string(li + 1);
        const auto cells = csv::split_line(lines[li]);
        if (cells.size() != 4) throw ParseError(where + ": expected 4 cells");
        const std::string& user = cells[0];
        const int day = csv::parse_int(cells[1], where);
        const SleepTarget target = sleep_target_from_string(cells[2]);
        const int label = csv::parse_int(cells[3], where);
        if (label != 0 && label != 1) throw ParseError(where + ": label must be 0 or 1");
        auto& dl = out.by_user_target[{user, target}];
        dl.rule.user = user;
        dl.rule.target = target;
        dl.rule.above = target_above(target);
        if (!dl.label_by_day.emplace(day, label).second)
            throw ValidationError(where + ": duplicate (user, day, target)");
    }
    return out;
}

} // namespace strokelab
