#pragma once

#include <cstdio>
#include <string>

#include <json.hpp>

#include "strokelab/ink_io.hpp"
#include "strokelab/stats.hpp"

namespace strokelab {

inline nlohmann::json eval_to_json(const Reports& r) {
    nlohmann::json j;
    for (const auto& [target, slices] : r.eval) {
        for (const auto& [slice, users] : slices) {
            for (const auto& [user, m] : users) {
                j[target][slice][user] = {{"pr_auc", m.pr_auc},
                                          {"recall_at_25", m.recall_at_25},
                                          {"n", m.n},
                                          {"prevalence", m.prevalence}};
            }
        }
    }
    return j;
}

inline nlohmann::json stats_to_json(const Reports& r) {
    nlohmann::json j;
    j["baseline"] = r.baseline;
    j["headline"] = nlohmann::json::object();
    for (const auto& [target, users] : r.headline)
        for (const auto& [user, hv] : users)
            j["headline"][target][user] = {{"pr_auc", hv[0]}, {"recall_at_25", hv[1]}};
    j["table2"] = nlohmann::json::array();
    for (const auto& row : r.table2) {
        j["table2"].push_back({{"target", to_string(row.target)},
                               {"metric", row.metric},
                               {"mean", row.mean},
                               {"sd", row.sd},
                               {"w_plus", row.w_plus},
                               {"p", row.p},
                               {"q", row.q},
                               {"significant", row.significant}});
    }
    j["table3"] = nlohmann::json::array();
    for (const auto& row : r.table3) {
        j["table3"].push_back({{"target", to_string(row.target)},
                               {"metric", row.metric},
                               {"effect", row.effect},
                               {"chi2", row.chi2},
                               {"p", row.p},
                               {"q", row.q},
                               {"significant", row.significant}});
    }
    return j;
}

namespace detail {

inline const char* stars(double q) {
    if (q < 0.001) return "***";
    if (q < 0.01) return "**";
    if (q < 0.05) return "*";
    return "";
}

} // namespace detail

/// Plain-text rendering, column order mirroring the summary tables:
/// per target PR-AUC then Recall@25% blocks.
inline std::string stats_to_text(const Reports& r) {
    char buf[256];
    std::string out;
    out += "Per-target metrics vs baseline " + fmt_g9(r.baseline) +
           " (user mean +- SD, one-sided Wilcoxon p, BH q)\n";
    std::snprintf(buf, sizeof buf, "%-12s %28s %38s\n", "target", "PR-AUC", "Recall@25%");
    out += buf;
    for (SleepTarget target : kSleepTargets) {
        const Table2Row* ap = nullptr;
        const Table2Row* rc = nullptr;
        for (const auto& row : r.table2) {
            if (row.target != target) continue;
            (row.metric == "pr_auc" ? ap : rc) = &row;
        }
        if (!ap && !rc) continue;
        std::snprintf(buf, sizeof buf, "%-12s", to_string(target));
        out += buf;
        for (const Table2Row* row : {ap, rc}) {
            if (!row) continue;
            std::snprintf(buf, sizeof buf, "  %.3f +- %.3f  p=%.4f q=%.4f %-3s", row->mean,
                          row->sd, row->p, row->q, detail::stars(row->q));
            out += buf;
        }
        out += '\n';
    }

    if (!r.table3.empty()) {
        out += "\nFriedman effects (chi2, p, BH q over " + std::to_string(r.table3.size()) +
               " comparisons)\n";
        std::snprintf(buf, sizeof buf, "%-12s %-8s %-12s %8s %8s %8s\n", "target", "effect",
                      "metric", "chi2", "p", "q");
        out += buf;
        for (const auto& row : r.table3) {
            std::snprintf(buf, sizeof buf, "%-12s %-8s %-12s %8.2f %8.3f %8.3f %s\n",
                          to_string(row.target), row.effect.c_str(), row.metric.c_str(),
                          row.chi2, row.p, row.q, detail::stars(row.q));
            out += buf;
        }
    }
    return out;
}

} // namespace strokelab
