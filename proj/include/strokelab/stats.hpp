#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "strokelab/error.hpp"
#include "strokelab/types.hpp"

namespace strokelab {

// ---------------------------------------------------------------------------
// chi-square survival via the regularized upper incomplete gamma function
// ---------------------------------------------------------------------------

namespace detail {

// Regularized lower incomplete gamma P(a, x) by series expansion.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by continued fraction
// (modified Lentz).
inline double gamma_q_cf(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace detail

/// Survival function of the chi-square distribution: Q(dof/2, x/2),
/// series for small x, continued fraction otherwise. Absolute error
/// below 1e-10 over the ranges used here.
inline double chi2_sf(double x, int dof) {
    if (!(x >= 0.0)) throw ValidationError("chi2_sf: x must be >= 0");
    if (dof < 1) throw ValidationError("chi2_sf: dof must be >= 1");
    if (x == 0.0) return 1.0;
    const double a = 0.5 * dof;
    const double xx = 0.5 * x;
    if (xx < a + 1.0) return 1.0 - detail::gamma_p_series(a, xx);
    return detail::gamma_q_cf(a, xx);
}

// ---------------------------------------------------------------------------
// Ranking metrics
// ---------------------------------------------------------------------------

/// Average precision with tied scores processed as groups: walking down
/// the distinct scores, each group contributes precision-after-group
/// times the group's recall gain. Order-independent by construction.
inline double pr_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ValidationError("pr_auc: size mismatch");
    const std::size_t n = scores.size();
    int npos = 0;
    for (int l : labels) npos += l != 0;
    const int nneg = static_cast<int>(n) - npos;
    if (npos == 0 || nneg == 0)
        throw ValidationError("pr_auc: undefined for single-class input");

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    int tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < n) {
        const double s = scores[idx[i]];
        int group_pos = 0, group_n = 0;
        while (i < n && scores[idx[i]] == s) {
            group_pos += labels[idx[i]] != 0;
            ++group_n;
            ++i;
        }
        tp += group_pos;
        fp += group_n - group_pos;
        if (group_pos > 0) {
            const double precision = static_cast<double>(tp) / (tp + fp);
            ap += precision * group_pos / npos;
        }
    }
    return ap;
}

/// Fraction of all positives captured in the top round(f*n) samples by
/// score (half-up, at least 1); ties at the cutoff break by ascending
/// sample index.
inline double recall_at_fraction(std::span<const double> scores, std::span<const int> labels,
                                 double f = 0.25) {
    if (scores.size() != labels.size())
        throw ValidationError("recall_at_fraction: size mismatch");
    const std::size_t n = scores.size();
    int npos = 0;
    for (int l : labels) npos += l != 0;
    if (npos == 0) throw ValidationError("recall_at_fraction: no positives");

    std::size_t k = static_cast<std::size_t>(
        std::floor(f * static_cast<double>(n) + 0.5));
    k = std::max<std::size_t>(1, std::min(k, n));

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
    });

    int hit = 0;
    for (std::size_t i = 0; i < k; ++i) hit += labels[idx[i]] != 0;
    return static_cast<double>(hit) / npos;
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank, exact one-sided
// ---------------------------------------------------------------------------

struct WilcoxonResult {
    double w_plus = 0.0;
    double p = 1.0;
    int n = 0;  // after dropping zero differences
};

/// Exact one-sided signed-rank test of values > baseline: zero
/// differences dropped, mid-ranks for ties, p = P(W+* >= W+) by full
/// enumeration of the 2^n sign assignments on the observed rank multiset.
inline WilcoxonResult wilcoxon_one_sided(std::span<const double> values, double baseline = 0.25) {
    std::vector<double> diffs;
    for (double v : values) {
        const double d = v - baseline;
        if (d != 0.0) diffs.push_back(d);
    }
    const int n = static_cast<int>(diffs.size());
    if (n == 0) throw ValidationError("wilcoxon: degenerate sample (all differences zero)");
    if (n > 20) throw ValidationError("wilcoxon: exact enumeration limited to n <= 20");

    // mid-ranks of |d|
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::fabs(diffs[a]) < std::fabs(diffs[b]);
    });
    std::vector<double> rank(n);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n &&
               std::fabs(diffs[order[j + 1]]) == std::fabs(diffs[order[i]]))
            ++j;
        const double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (int k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }

    WilcoxonResult res;
    res.n = n;
    for (int k = 0; k < n; ++k)
        if (diffs[k] > 0.0) res.w_plus += rank[k];

    // enumerate all sign assignments; rank sums are exact multiples of 0.5
    const std::uint64_t total = 1ULL << n;
    std::uint64_t count = 0;
    std::vector<double> sum(total);
    sum[0] = 0.0;
    if (sum[0] >= res.w_plus - 1e-9) ++count;
    for (std::uint64_t s = 1; s < total; ++s) {
        const int bit = std::countr_zero(s);
        sum[s] = sum[s & (s - 1)] + rank[bit];
        if (sum[s] >= res.w_plus - 1e-9) ++count;
    }
    res.p = static_cast<double>(count) / static_cast<double>(total);
    return res;
}

// ---------------------------------------------------------------------------
// Benjamini-Hochberg step-up
// ---------------------------------------------------------------------------

/// q_(i) = min_{j >= i} p_(j) * m / j on the sorted p-values, clipped at
/// 1, mapped back to input order. m defaults to the family size.
inline std::vector<double> bh_fdr(std::span<const double> p_values, int m = -1) {
    const int n = static_cast<int>(p_values.size());
    if (m < 0) m = n;
    for (double p : p_values)
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("bh_fdr: p-values must be in [0, 1]");
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return p_values[a] != p_values[b] ? p_values[a] < p_values[b] : a < b;
    });
    std::vector<double> q(n);
    double running = 1.0;
    for (int i = n - 1; i >= 0; --i) {
        const double candidate = p_values[order[i]] * m / (i + 1);
        running = std::min(running, candidate);
        q[order[i]] = std::min(1.0, running);
    }
    return q;
}

// ---------------------------------------------------------------------------
// Friedman test
// ---------------------------------------------------------------------------

struct FriedmanResult {
    double chi2 = 0.0;
    double p = 1.0;
};

/// Repeated-measures rank test across k conditions: mid-ranks within each
/// row, tie-corrected chi-square statistic referred to k-1 degrees of
/// freedom. An all-tied matrix returns chi2 = 0, p = 1.
inline FriedmanResult friedman(const std::vector<std::vector<double>>& matrix) {
    const int n = static_cast<int>(matrix.size());
    if (n < 2) throw ValidationError("friedman: need at least 2 rows");
    const int k = static_cast<int>(matrix.front().size());
    if (k < 2) throw ValidationError("friedman: need at least 2 conditions");
    for (const auto& row : matrix)
        if (static_cast<int>(row.size()) != k)
            throw ValidationError("friedman: ragged matrix");

    std::vector<double> col_rank_sum(k, 0.0);
    double tie_sum = 0.0;  // sum over rows of sum(t^3 - t)
    std::vector<int> order(k);
    for (const auto& row : matrix) {
        for (int j = 0; j < k; ++j) order[j] = j;
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return row[a] < row[b]; });
        int i = 0;
        while (i < k) {
            int j = i;
            while (j + 1 < k && row[order[j + 1]] == row[order[i]]) ++j;
            const int t = j - i + 1;
            const double mid = 0.5 * ((i + 1) + (j + 1));
            for (int c = i; c <= j; ++c) col_rank_sum[order[c]] += mid;
            tie_sum += static_cast<double>(t) * t * t - t;
            i = j + 1;
        }
    }

    double sum_r2 = 0.0;
    for (double r : col_rank_sum) sum_r2 += r * r;
    const double nn = n, kk = k;
    double chi2 = 12.0 * sum_r2 / (nn * kk * (kk + 1.0)) - 3.0 * nn * (kk + 1.0);
    const double correction = 1.0 - tie_sum / (nn * kk * (kk * kk - 1.0));
    FriedmanResult res;
    if (correction <= 0.0) return res;  // every row fully tied
    chi2 /= correction;
    res.chi2 = std::max(0.0, chi2);
    res.p = chi2_sf(res.chi2, k - 1);
    return res;
}

// ---------------------------------------------------------------------------
// Report assembly (Table 2 / Table 3 arithmetic)
// ---------------------------------------------------------------------------

struct EvalMetrics {
    double pr_auc = 0.0;
    double recall_at_25 = 0.0;
    int n = 0;
    double prevalence = 0.0;
};

struct Table2Row {
    SleepTarget target;
    std::string metric;  // "pr_auc" | "recall_at_25"
    double mean = 0.0, sd = 0.0;
    double w_plus = 0.0;
    double p = 1.0, q = 1.0;
    bool significant = false;
};

struct Table3Row {
    SleepTarget target;
    std::string metric;
    std::string effect;  // "task" | "timing"
    double chi2 = 0.0;
    double p = 1.0, q = 1.0;
    bool significant = false;
};

struct Reports {
    // target -> slice -> user -> metrics
    std::map<std::string, std::map<std::string, std::map<std::string, EvalMetrics>>> eval;
    // target -> user -> {headline pr_auc, headline recall}
    std::map<std::string, std::map<std::string, std::array<double, 2>>> headline;
    std::vector<Table2Row> table2;
    std::vector<Table3Row> table3;
    double baseline = 0.25;
};

/// Per-(user, slice, target) metrics, per-user headline as the mean over
/// the five task slices, the Wilcoxon/BH summary against the 0.25
/// baseline, and Friedman task/timing effects (timing rows only when
/// timing-slice predictions are present). BH is applied jointly per
/// table over the emitted rows.
inline Reports build_reports(std::span<const FoldPrediction> predictions) {
    if (predictions.empty()) throw ValidationError("build_reports: no predictions");

    struct Group {
        std::vector<double> scores;
        std::vector<int> labels;
    };
    std::map<std::string, std::map<std::string, std::map<std::string, Group>>> grouped;
    std::set<std::string> users;
    std::set<SleepTarget> targets;
    bool any_timing_slice = false;
    for (const auto& p : predictions) {
        auto& g = grouped[to_string(p.target)][p.slice][p.key.user];
        g.scores.push_back(p.score);
        g.labels.push_back(p.label);
        users.insert(p.key.user);
        targets.insert(p.target);
        if (p.slice.rfind("timing:", 0) == 0) any_timing_slice = true;
    }
    if (users.size() < 2) throw ValidationError("build_reports: need predictions for >= 2 users");

    Reports out;
    for (const auto& [target, slices] : grouped) {
        for (const auto& [slice, by_user] : slices) {
            for (const auto& [user, g] : by_user) {
                EvalMetrics m;
                m.n = static_cast<int>(g.scores.size());
                int pos = 0;
                for (int l : g.labels) pos += l != 0;
                m.prevalence = static_cast<double>(pos) / m.n;
                m.pr_auc = pr_auc(g.scores, g.labels);
                m.recall_at_25 = recall_at_fraction(g.scores, g.labels, 0.25);
                out.eval[target][slice][user] = m;
            }
        }
    }

    // headline: mean across the five task slices
    std::vector<std::string> task_slices;
    for (Task t : kTasks) task_slices.push_back(std::string("task:") + to_string(t));
    for (SleepTarget target : kSleepTargets) {
        if (!targets.count(target)) continue;
        const auto tit = out.eval.find(to_string(target));
        for (const auto& user : users) {
            double sum_ap = 0.0, sum_rc = 0.0;
            for (const auto& slice : task_slices) {
                const auto sit = tit->second.find(slice);
                if (sit == tit->second.end() || !sit->second.count(user))
                    throw ValidationError("build_reports: missing slice coverage for user '" +
                                          user + "', slice '" + slice + "', target " +
                                          to_string(target));
                const auto& m = sit->second.at(user);
                sum_ap += m.pr_auc;
                sum_rc += m.recall_at_25;
            }
            out.headline[to_string(target)][user] = {sum_ap / task_slices.size(),
                                                     sum_rc / task_slices.size()};
        }
    }

    // Table 2: mean +- SD across users, one-sided Wilcoxon vs baseline
    auto mean_sd = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= v.size();
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(ss / (v.size() - 1)) : 0.0;
        return std::pair{mean, sd};
    };

    for (SleepTarget target : kSleepTargets) {
        if (!targets.count(target)) continue;
        for (int metric = 0; metric < 2; ++metric) {
            std::vector<double> values;
            for (const auto& [user, hv] : out.headline[to_string(target)])
                values.push_back(hv[metric]);
            Table2Row row;
            row.target = target;
            row.metric = metric == 0 ? "pr_auc" : "recall_at_25";
            const auto [mean, sd] = mean_sd(values);
            row.mean = mean;
            row.sd = sd;
            const auto w = wilcoxon_one_sided(values, out.baseline);
            row.w_plus = w.w_plus;
            row.p = w.p;
            out.table2.push_back(std::move(row));
        }
    }
    {
        std::vector<double> ps;
        for (const auto& r : out.table2) ps.push_back(r.p);
        const auto qs = bh_fdr(ps);
        for (std::size_t i = 0; i < qs.size(); ++i) {
            out.table2[i].q = qs[i];
            out.table2[i].significant = qs[i] < 0.05;
        }
    }

    // Table 3: Friedman task (k=5) and timing (k=3) effects
    auto effect_rows = [&](const std::string& effect,
                           const std::vector<std::string>& slices) {
        for (SleepTarget target : kSleepTargets) {
            if (!targets.count(target)) continue;
            const auto& by_slice = out.eval.at(to_string(target));
            for (int metric = 0; metric < 2; ++metric) {
                std::vector<std::vector<double>> matrix;
                for (const auto& user : users) {
                    std::vector<double> row;
                    for (const auto& slice : slices) {
                        const auto sit = by_slice.find(slice);
                        if (sit == by_slice.end() || !sit->second.count(user))
                            throw ValidationError(
                                "build_reports: missing slice coverage for '" + slice + "'");
                        const auto& m = sit->second.at(user);
                        row.push_back(metric == 0 ? m.pr_auc : m.recall_at_25);
                    }
                    matrix.push_back(std::move(row));
                }
                Table3Row row;
                row.target = target;
                row.metric = metric == 0 ? "pr_auc" : "recall_at_25";
                row.effect = effect;
                const auto f = friedman(matrix);
                row.chi2 = f.chi2;
                row.p = f.p;
                out.table3.push_back(std::move(row));
            }
        }
    };
    effect_rows("task", task_slices);
    if (any_timing_slice) {
        std::vector<std::string> timing_slices;
        for (Timing t : kTimings) timing_slices.push_back(std::string("timing:") + to_string(t));
        effect_rows("timing", timing_slices);
    }
    if (!out.table3.empty()) {
        std::vector<double> ps;
        for (const auto& r : out.table3) ps.push_back(r.p);
        const auto qs = bh_fdr(ps);
        for (std::size_t i = 0; i < qs.size(); ++i) {
            out.table3[i].q = qs[i];
            out.table3[i].significant = qs[i] < 0.05;
        }
    }
    return out;
}

} // namespace strokelab
