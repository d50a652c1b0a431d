#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "strokelab/error.hpp"
#include "strokelab/parallel.hpp"
#include "strokelab/rng.hpp"
#include "strokelab/types.hpp"

namespace strokelab {

struct ForestConfig {
    int n_trees = 400;
    int max_features = 4;  // ceil(sqrt(10)) for the ten-feature vectors
    int min_leaf = 1;
    int max_depth = 0;     // 0 = unbounded
    std::uint64_t seed = 0;
};

/// Column-major feature matrix.
struct FeatureMatrix {
    int n = 0, d = 0;
    std::vector<double> data;  // data[f * n + i]

    double at(int i, int f) const { return data[static_cast<std::size_t>(f) * n + i]; }
    void resize(int n_, int d_) {
        n = n_;
        d = d_;
        data.assign(static_cast<std::size_t>(n) * d, 0.0);
    }
    double& cell(int i, int f) { return data[static_cast<std::size_t>(f) * n + i]; }
};

/// CART ensemble over bootstrap samples with Gini splits. Per-tree RNG
/// streams are derived from (seed, tree index), so training is
/// reproducible for any thread count; ties in impurity break toward the
/// lowest feature index, then the lowest threshold.
class Forest {
public:
    struct Node {
        int feature = -1;       // -1: leaf
        double threshold = 0.0;  // midpoint between adjacent distinct values
        int left = -1, right = -1;
        double leaf = 0.0;      // positive fraction in the reached leaf
    };

    bool constant_model = false;
    double constant_value = 0.0;
    int dims = 0;
    std::vector<std::vector<Node>> trees;

    double predict_proba(std::span<const double> x) const {
        if (constant_model) return constant_value;
        if (static_cast<int>(x.size()) != dims)
            throw ValidationError("predict_proba: dimension mismatch");
        double acc = 0.0;
        for (const auto& tree : trees) {
            int i = 0;
            while (tree[i].feature >= 0)
                i = x[tree[i].feature] <= tree[i].threshold ? tree[i].left : tree[i].right;
            acc += tree[i].leaf;
        }
        return acc / static_cast<double>(trees.size());
    }

    /// Byte-stable text form, used by the determinism tests.
    std::string serialize() const {
        char buf[64];
        std::string out = "forest dims=" + std::to_string(dims);
        if (constant_model) {
            std::snprintf(buf, sizeof buf, " constant=%.17g\n", constant_value);
            out += buf;
            return out;
        }
        out += " trees=" + std::to_string(trees.size()) + "\n";
        for (const auto& tree : trees) {
            out += "tree " + std::to_string(tree.size()) + "\n";
            for (const auto& node : tree) {
                std::snprintf(buf, sizeof buf, "%d %.17g %d %d %.17g\n", node.feature,
                              node.threshold, node.left, node.right, node.leaf);
                out += buf;
            }
        }
        return out;
    }
};

namespace detail {

struct TreeWorkspace {
    std::vector<std::int32_t> sorted;   // d * n: fold-level presort by feature value
    std::vector<std::int32_t> bufs[2];  // d * m entry arrays, ping-pong by depth parity
    std::vector<std::int32_t> counts;   // bootstrap multiplicity per sample
};

struct NodeTask {
    int lo, hi, depth, pos, node;
};

inline void build_tree(const FeatureMatrix& X, const std::vector<std::uint8_t>& y,
                       const ForestConfig& cfg, rng::Stream& rng, TreeWorkspace& ws,
                       std::vector<Forest::Node>& nodes) {
    const int n = X.n, d = X.d, m = n;  // bootstrap size equals n
    nodes.clear();

    // bootstrap with replacement
    ws.counts.assign(n, 0);
    for (int i = 0; i < n; ++i) ++ws.counts[rng.next_below(static_cast<std::uint32_t>(n))];

    // per-feature entry arrays in value order, bootstrap entries repeated
    for (auto& b : ws.bufs) b.resize(static_cast<std::size_t>(d) * m);
    for (int f = 0; f < d; ++f) {
        const std::int32_t* order = ws.sorted.data() + static_cast<std::size_t>(f) * n;
        std::int32_t* dst = ws.bufs[0].data() + static_cast<std::size_t>(f) * m;
        int k = 0;
        for (int i = 0; i < n; ++i) {
            const std::int32_t id = order[i];
            for (int c = 0; c < ws.counts[id]; ++c) dst[k++] = id;
        }
    }

    int root_pos = 0;
    for (int i = 0; i < n; ++i)
        if (y[i]) root_pos += ws.counts[i];

    std::vector<int> feat_pool(d);
    std::vector<NodeTask> stack;
    nodes.push_back({});
    stack.push_back({0, m, 0, root_pos, 0});

    while (!stack.empty()) {
        const NodeTask task = stack.back();
        stack.pop_back();
        const int total = task.hi - task.lo;
        const int pos = task.pos;
        Forest::Node& node = nodes[task.node];

        const bool depth_capped = cfg.max_depth > 0 && task.depth >= cfg.max_depth;
        if (pos == 0 || pos == total || total < 2 * cfg.min_leaf || depth_capped) {
            node.leaf = static_cast<double>(pos) / total;
            continue;
        }

        // draw max_features distinct features
        for (int f = 0; f < d; ++f) feat_pool[f] = f;
        const int mtry = std::min(cfg.max_features, d);
        for (int j = 0; j < mtry; ++j) {
            const int k = j + static_cast<int>(rng.next_below(static_cast<std::uint32_t>(d - j)));
            std::swap(feat_pool[j], feat_pool[k]);
        }

        // best Gini split among the drawn features: minimize
        // posL*negL/nL + posR*negR/nR over midpoint thresholds
        int best_f = -1;
        double best_thr = 0.0, best_score = 0.0;
        int best_nl = 0, best_posl = 0;
        const std::int32_t* src_base = ws.bufs[task.depth & 1].data();
        for (int j = 0; j < mtry; ++j) {
            const int f = feat_pool[j];
            const std::int32_t* entries = src_base + static_cast<std::size_t>(f) * m;
            int nl = 0, posl = 0;
            double prev = X.at(entries[task.lo], f);
            for (int i = task.lo; i < task.hi; ++i) {
                const std::int32_t id = entries[i];
                const double v = X.at(id, f);
                if (v != prev) {
                    const int nr = total - nl;
                    if (nl >= cfg.min_leaf && nr >= cfg.min_leaf) {
                        const int posr = pos - posl;
                        const double score =
                            static_cast<double>(posl) * (nl - posl) / nl +
                            static_cast<double>(posr) * (nr - posr) / nr;
                        const double thr = 0.5 * (prev + v);
                        const bool better =
                            best_f < 0 || score < best_score ||
                            (score == best_score &&
                             (f < best_f || (f == best_f && thr < best_thr)));
                        if (better) {
                            best_f = f;
                            best_thr = thr;
                            best_score = score;
                            best_nl = nl;
                            best_posl = posl;
                        }
                    }
                    prev = v;
                }
                ++nl;
                posl += y[id];
            }
        }

        if (best_f < 0) {  // all drawn features constant on this node
            node.leaf = static_cast<double>(pos) / total;
            continue;
        }

        // stable partition of every feature's entry array into the next buffer
        std::int32_t* dst_base = ws.bufs[1 - (task.depth & 1)].data();
        for (int f = 0; f < d; ++f) {
            const std::int32_t* src = src_base + static_cast<std::size_t>(f) * m;
            std::int32_t* dst = dst_base + static_cast<std::size_t>(f) * m;
            int l = task.lo, r = task.lo + best_nl;
            for (int i = task.lo; i < task.hi; ++i) {
                const std::int32_t id = src[i];
                if (X.at(id, best_f) <= best_thr) dst[l++] = id;
                else dst[r++] = id;
            }
        }

        node.feature = best_f;
        node.threshold = best_thr;
        node.left = static_cast<int>(nodes.size());
        node.right = node.left + 1;
        nodes.push_back({});
        nodes.push_back({});
        stack.push_back({task.lo, task.lo + best_nl, task.depth + 1, best_posl, node.left});
        stack.push_back({task.lo + best_nl, task.hi, task.depth + 1, pos - best_posl,
                         node.right});
    }
}

} // namespace detail

inline Forest train_forest(const FeatureMatrix& X, const std::vector<int>& y,
                           const ForestConfig& cfg) {
    if (static_cast<int>(y.size()) != X.n)
        throw ValidationError("train_forest: labels/features dimension mismatch");
    if (cfg.n_trees < 1 || cfg.max_features < 1)
        throw ValidationError("train_forest: bad config");

    Forest forest;
    forest.dims = X.d;

    int pos = 0;
    for (int v : y) pos += v != 0;
    if (X.n < 2 || pos == 0 || pos == static_cast<int>(y.size())) {
        forest.constant_model = true;
        forest.constant_value =
            y.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(y.size());
        return forest;
    }

    // fold-level presort, shared by every tree
    std::vector<std::int32_t> sorted(static_cast<std::size_t>(X.d) * X.n);
    for (int f = 0; f < X.d; ++f) {
        std::int32_t* order = sorted.data() + static_cast<std::size_t>(f) * X.n;
        for (int i = 0; i < X.n; ++i) order[i] = i;
        std::sort(order, order + X.n, [&X, f](std::int32_t a, std::int32_t b) {
            const double va = X.at(a, f), vb = X.at(b, f);
            return va != vb ? va < vb : a < b;
        });
    }

    std::vector<std::uint8_t> labels(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) labels[i] = y[i] != 0;

    forest.trees.resize(cfg.n_trees);
    parallel_for(static_cast<std::size_t>(cfg.n_trees), [&](std::size_t t) {
        detail::TreeWorkspace ws;
        ws.sorted = sorted;
        rng::Stream stream(rng::derive_key(cfg.seed, "tree", static_cast<int>(t)));
        detail::build_tree(X, labels, cfg, stream, ws, forest.trees[t]);
    });
    return forest;
}

// ---------------------------------------------------------------------------
// Leave-one-day-out cross-validation
// ---------------------------------------------------------------------------

struct LabeledSample {
    SampleKey key;
    std::array<double, FeatureVector::kCount> x{};
    int label = 0;
};

/// Per-fold audit trail: which days trained the model that scored the
/// held-out day. Backs the structural no-leakage guarantee.
struct FoldAudit {
    int held_out_day = 0;
    std::set<int> training_days;
    bool constant_fold = false;
};

struct LodocvResult {
    std::vector<FoldPrediction> predictions;
    std::vector<FoldAudit> audits;
};

/// Throws if any prediction's fold saw its own day during training.
inline void verify_no_leakage(const LodocvResult& r) {
    std::map<int, const FoldAudit*> by_day;
    for (const auto& a : r.audits) by_day[a.held_out_day] = &a;
    for (const auto& p : r.predictions) {
        const auto it = by_day.find(p.key.day);
        if (it == by_day.end())
            throw ValidationError("leakage audit: prediction for day without a fold");
        if (it->second->training_days.count(p.key.day))
            throw ValidationError("leakage audit: day " + std::to_string(p.key.day) +
                                  " appeared in its own training set");
    }
}

/// One model per held-out day: train on every other day's samples,
/// predict the held-out ones. Samples must belong to a single user.
/// Per-fold seeds derive from (seed, user, target, day).
inline LodocvResult lodocv(std::span<const LabeledSample> samples, SleepTarget target,
                           const std::string& slice, const ForestConfig& cfg) {
    if (samples.empty()) throw ValidationError("lodocv: no samples");
    const std::string& user = samples.front().key.user;
    std::set<int> day_set;
    for (const auto& s : samples) {
        if (s.key.user != user) throw ValidationError("lodocv: samples span multiple users");
        day_set.insert(s.key.day);
    }
    const std::vector<int> days(day_set.begin(), day_set.end());

    LodocvResult out;
    std::vector<std::vector<FoldPrediction>> fold_preds(days.size());
    std::vector<FoldAudit> fold_audits(days.size());

    parallel_for(days.size(), [&](std::size_t di) {
        const int day = days[di];
        FeatureMatrix X;
        std::vector<int> y;
        std::vector<const LabeledSample*> test;
        FoldAudit audit;
        audit.held_out_day = day;

        int n_train = 0;
        for (const auto& s : samples) n_train += s.key.day != day;
        X.resize(n_train, FeatureVector::kCount);
        int row = 0;
        for (const auto& s : samples) {
            if (s.key.day == day) {
                test.push_back(&s);
                continue;
            }
            for (int f = 0; f < FeatureVector::kCount; ++f) X.cell(row, f) = s.x[f];
            y.push_back(s.label);
            audit.training_days.insert(s.key.day);
            ++row;
        }

        ForestConfig fold_cfg = cfg;
        fold_cfg.seed = rng::derive_key(cfg.seed, user, to_string(target), day);
        const Forest model = train_forest(X, y, fold_cfg);
        audit.constant_fold = model.constant_model;

        for (const LabeledSample* s : test) {
            FoldPrediction p;
            p.key = s->key;
            p.target = target;
            p.slice = slice;
            p.score = model.predict_proba(s->x);
            p.label = s->label;
            fold_preds[di].push_back(std::move(p));
        }
        fold_audits[di] = std::move(audit);
    });

    for (std::size_t di = 0; di < days.size(); ++di) {
        out.audits.push_back(std::move(fold_audits[di]));
        for (auto& p : fold_preds[di]) out.predictions.push_back(std::move(p));
    }
    verify_no_leakage(out);
    return out;
}

} // namespace strokelab
