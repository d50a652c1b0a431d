#pragma once

// Stage glue shared by the CLI and the end-to-end tests: decompositions
// -> task-sample feature vectors -> slice models -> out-of-fold
// predictions.

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "strokelab/error.hpp"
#include "strokelab/features.hpp"
#include "strokelab/labeling.hpp"
#include "strokelab/learner.hpp"
#include "strokelab/parallel.hpp"
#include "strokelab/types.hpp"

namespace strokelab {

/// Groups decompositions by the sample id encoded in their stroke ids
/// ("<user>.d<day>.<timing>.<task>#<stroke>") and aggregates each group.
/// Undecomposed strokes (nblog = 0) are excluded and counted.
struct FeatureExtraction {
    std::vector<FeatureVector> features;
    int empty_decompositions = 0;
};

inline FeatureExtraction features_from_decompositions(
    std::span<const StrokeDecomposition> decomps) {
    struct Entry {
        SampleKey key;
        std::vector<StrokeDecomposition> decomps;
    };
    std::map<std::string, Entry> groups;
    FeatureExtraction out;
    for (const auto& d : decomps) {
        if (d.nblog == 0) {
            ++out.empty_decompositions;
            continue;
        }
        const auto hash_pos = d.stroke_id.rfind('#');
        const std::string sample = d.stroke_id.substr(0, hash_pos);
        auto [it, fresh] = groups.try_emplace(sample);
        if (fresh) it->second.key = parse_sample_id(sample);
        it->second.decomps.push_back(d);
    }
    for (const auto& [sample, entry] : groups)
        out.features.push_back(task_features(entry.decomps, entry.key));
    return out;
}

enum class SliceMode { task, timing, all };

inline SliceMode slice_mode_from_string(const std::string& s) {
    if (s == "task") return SliceMode::task;
    if (s == "timing") return SliceMode::timing;
    if (s == "all") return SliceMode::all;
    throw ValidationError("unknown slice mode '" + s + "' (task|timing|all)");
}

/// Per-(user, task) and/or per-(user, timing) LODOCV models for the
/// requested targets. Slices run in parallel; prediction order is
/// deterministic (target, slice, user, day, input order).
inline std::vector<FoldPrediction> run_evaluation(std::span<const FeatureVector> features,
                                                  const LabelSet& labels,
                                                  std::span<const SleepTarget> targets,
                                                  SliceMode mode, const ForestConfig& cfg) {
    if (features.empty()) throw ValidationError("run_evaluation: no features");

    // cross-check user coverage before spending any training time
    std::set<std::string> feature_users;
    for (const auto& f : features) feature_users.insert(f.key.user);
    for (const auto& user : feature_users)
        for (SleepTarget t : targets)
            if (!labels.by_user_target.count({user, t}))
                throw ValidationError("run_evaluation: no labels for user '" + user +
                                      "', target " + to_string(t));

    struct SliceJob {
        std::string slice;
        std::string user;
        SleepTarget target;
        std::vector<LabeledSample> samples;
    };
    std::vector<SliceJob> jobs;

    auto add_jobs = [&](bool by_task) {
        // map (user, slice-value) -> samples
        std::map<std::pair<std::string, int>, std::vector<const FeatureVector*>> sliced;
        for (const auto& f : features) {
            const int sv = by_task ? static_cast<int>(f.key.task) : static_cast<int>(f.key.timing);
            sliced[{f.key.user, sv}].push_back(&f);
        }
        for (const auto& [key, fvs] : sliced) {
            const std::string slice_name =
                by_task ? std::string("task:") + to_string(static_cast<Task>(key.second))
                        : std::string("timing:") + to_string(static_cast<Timing>(key.second));
            for (SleepTarget target : targets) {
                SliceJob job;
                job.slice = slice_name;
                job.user = key.first;
                job.target = target;
                for (const FeatureVector* f : fvs) {
                    LabeledSample s;
                    s.key = f->key;
                    s.x = f->values();
                    s.label = labels.label(f->key.user, f->key.day, target);
                    job.samples.push_back(std::move(s));
                }
                jobs.push_back(std::move(job));
            }
        }
    };
    if (mode == SliceMode::task || mode == SliceMode::all) add_jobs(true);
    if (mode == SliceMode::timing || mode == SliceMode::all) add_jobs(false);

    std::vector<std::vector<FoldPrediction>> results(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) {
        const auto& job = jobs[i];
        LodocvResult r = lodocv(job.samples, job.target, job.slice, cfg);
        verify_no_leakage(r);
        results[i] = std::move(r.predictions);
    });

    std::vector<FoldPrediction> out;
    for (auto& r : results)
        for (auto& p : r) out.push_back(std::move(p));
    std::sort(out.begin(), out.end(), [](const FoldPrediction& a, const FoldPrediction& b) {
        if (a.target != b.target) return a.target < b.target;
        if (a.slice != b.slice) return a.slice < b.slice;
        if (a.key.user != b.key.user) return a.key.user < b.key.user;
        if (a.key.day != b.key.day) return a.key.day < b.key.day;
        if (a.key.timing != b.key.timing) return a.key.timing < b.key.timing;
        return a.key.task < b.key.task;
    });
    return out;
}

} // namespace strokelab
