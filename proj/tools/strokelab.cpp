// strokelab: synthetic-cohort generation, stroke decomposition, feature
// aggregation, quartile labeling, leave-one-day-out evaluation, summary
// statistics, and SVG plots. Stages talk exclusively through documented
// files; exit codes are 0 (success), 1 (runtime/data error), 2 (usage).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "strokelab/strokelab.hpp"

namespace fs = std::filesystem;
using namespace strokelab;

namespace {

std::string infer_format(const std::string& path, const std::string& requested) {
    if (!requested.empty()) return requested;
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    if (ext == "inkml" || ext == "xml") return "inkml";
    return "csv";
}

std::vector<RawTrace> load_traces(const std::string& path, const std::string& format) {
    const std::string text = read_text_file(path);
    if (format == "inkml") return parse_inkml(text);
    if (format == "csv") return read_traces_csv(text);
    throw ValidationError("unknown trace format '" + format + "' (inkml|csv)");
}

std::vector<SleepTarget> targets_from_flag(const std::string& flag) {
    if (flag == "all")
        return {kSleepTargets.begin(), kSleepTargets.end()};
    return {sleep_target_from_string(flag)};
}

struct SynthArgs {
    int users = 13, days = 28;
    double effect = 0.0, fs = 200.0;
    std::uint64_t seed = 1;
    std::string out;
};

int run_synth_cohort(const SynthArgs& a) {
    WallTimer timer;
    CohortConfig cfg;
    cfg.users = a.users;
    cfg.days = a.days;
    cfg.effect = a.effect;
    cfg.seed = a.seed;
    cfg.fs = a.fs;
    const CohortData data = generate_cohort_data(cfg);

    const fs::path dir(a.out);
    fs::create_directories(dir);
    const std::string traces_csv = write_traces_csv(data.traces);
    const std::string sleep_csv = write_sleep_csv(data.sleep);
    std::vector<StrokeDecomposition> truth;
    truth.reserve(data.truth.size());
    for (const auto& t : data.truth) {
        StrokeDecomposition d;
        d.stroke_id = sample_id(t.key) + "#" + std::to_string(t.stroke_index);
        d.nblog = static_cast<int>(t.components.size());
        d.snr_db = 100.0;
        d.components = t.components;
        truth.push_back(std::move(d));
    }
    const std::string truth_jsonl = write_decompositions_jsonl(truth);

    write_text_file(dir / "traces.csv", traces_csv);
    write_text_file(dir / "sleep.csv", sleep_csv);
    write_text_file(dir / "ground_truth.jsonl", truth_jsonl);

    RunManifest m;
    m.command = "synth-cohort";
    m.config = {{"users", cfg.users}, {"days", cfg.days}, {"effect", cfg.effect},
                {"seed", cfg.seed},   {"fs", cfg.fs}};
    m.outputs[(dir / "traces.csv").string()] = content_hash(traces_csv);
    m.outputs[(dir / "sleep.csv").string()] = content_hash(sleep_csv);
    m.outputs[(dir / "ground_truth.jsonl").string()] = content_hash(truth_jsonl);
    m.wall_time_s = timer.seconds();
    write_manifest(dir / "manifest.json", m);

    std::cout << "cohort: users=" << cfg.users << " days=" << cfg.days
              << " strokes=" << data.traces.size() << " -> " << dir.string() << "\n";
    return 0;
}

struct ExtractArgs {
    std::string in, format, out;
    double snr_target = 25.0, fs = 200.0;
};

int run_extract(const ExtractArgs& a) {
    WallTimer timer;
    const std::string format = infer_format(a.in, a.format);
    const std::vector<RawTrace> traces = load_traces(a.in, format);
    if (traces.empty()) throw Error("no traces in '" + a.in + "'");

    PreprocessConfig pre;
    pre.fs = a.fs;
    const PreprocessResult prep = preprocess(traces, pre);
    if (prep.skipped_short > 0)
        std::cerr << "skipped " << prep.skipped_short << " too-short stroke(s)\n";
    if (prep.strokes.empty()) throw Error("no usable strokes in '" + a.in + "'");

    ExtractorConfig cfg;
    cfg.snr_target_db = a.snr_target;
    std::vector<StrokeDecomposition> decomps(prep.strokes.size());
    parallel_for(prep.strokes.size(),
                 [&](std::size_t i) { decomps[i] = extract_stroke(prep.strokes[i], cfg); });

    const std::string jsonl = write_decompositions_jsonl(decomps);
    write_text_file(a.out, jsonl);

    double mean_snr = 0.0;
    for (const auto& d : decomps) mean_snr += d.snr_db;
    mean_snr /= static_cast<double>(decomps.size());

    RunManifest m;
    m.command = "extract";
    m.config = {{"in", a.in}, {"format", format}, {"snr_target", a.snr_target}, {"fs", a.fs}};
    m.inputs[a.in] = content_hash(read_text_file(a.in));
    m.outputs[a.out] = content_hash(jsonl);
    m.wall_time_s = timer.seconds();
    write_manifest(a.out + ".manifest.json", m);

    char line[128];
    std::snprintf(line, sizeof line, "strokes=%zu mean_snr=%.2f dB\n", decomps.size(), mean_snr);
    std::cout << line;
    return 0;
}

struct FeaturesArgs {
    std::string decomp, out;
};

int run_features(const FeaturesArgs& a) {
    WallTimer timer;
    const std::string in_text = read_text_file(a.decomp);
    const auto decomps = read_decompositions_jsonl(in_text);
    if (decomps.empty()) throw Error("no decompositions in '" + a.decomp + "'");
    const FeatureExtraction fx = features_from_decompositions(decomps);
    if (fx.empty_decompositions > 0)
        std::cerr << "excluded " << fx.empty_decompositions << " undecomposed stroke(s)\n";
    const std::string csv_text = write_features_csv(fx.features);
    write_text_file(a.out, csv_text);

    RunManifest m;
    m.command = "features";
    m.config = {{"decomp", a.decomp}};
    m.inputs[a.decomp] = content_hash(in_text);
    m.outputs[a.out] = content_hash(csv_text);
    m.wall_time_s = timer.seconds();
    write_manifest(a.out + ".manifest.json", m);

    std::cout << "features: samples=" << fx.features.size() << " -> " << a.out << "\n";
    return 0;
}

struct LabelArgs {
    std::string sleep, out, target = "all";
};

int run_label(const LabelArgs& a) {
    WallTimer timer;
    const std::string in_text = read_text_file(a.sleep);
    const auto records = read_sleep_csv(in_text);
    if (records.empty()) throw Error("no sleep records in '" + a.sleep + "'");
    const auto targets = targets_from_flag(a.target);
    const LabelSet labels = label_all(records, targets);

    const std::string csv_text = write_labels_csv(labels);
    write_text_file(a.out, csv_text);

    nlohmann::json rules = nlohmann::json::array();
    for (const auto& [key, dl] : labels.by_user_target) {
        rules.push_back({{"user", dl.rule.user},
                         {"target", to_string(dl.rule.target)},
                         {"direction", dl.rule.direction()},
                         {"threshold", dl.rule.threshold}});
    }
    const std::string rules_text = rules.dump(2) + "\n";
    write_text_file(a.out + ".rules.json", rules_text);

    RunManifest m;
    m.command = "label";
    m.config = {{"sleep", a.sleep}, {"target", a.target}};
    m.inputs[a.sleep] = content_hash(in_text);
    m.outputs[a.out] = content_hash(csv_text);
    m.outputs[a.out + ".rules.json"] = content_hash(rules_text);
    m.wall_time_s = timer.seconds();
    write_manifest(a.out + ".manifest.json", m);

    std::cout << "labels: rules=" << labels.by_user_target.size() << " -> " << a.out << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string features, labels, out;
    std::string target = "all", slice = "all";
    std::uint64_t seed = 1;
    int trees = 400;
};

int run_evaluate(const EvaluateArgs& a) {
    WallTimer timer;
    const std::string feat_text = read_text_file(a.features);
    const std::string label_text = read_text_file(a.labels);
    const auto features = read_features_csv(feat_text);
    const LabelSet labels = read_labels_csv(label_text);
    const auto targets = targets_from_flag(a.target);

    ForestConfig cfg;
    cfg.seed = a.seed;
    cfg.n_trees = a.trees;
    const auto predictions =
        run_evaluation(features, labels, targets, slice_mode_from_string(a.slice), cfg);

    const std::string jsonl = write_predictions_jsonl(predictions);
    write_text_file(a.out, jsonl);

    RunManifest m;
    m.command = "evaluate";
    m.config = {{"features", a.features}, {"labels", a.labels}, {"target", a.target},
                {"slice", a.slice},       {"seed", a.seed},     {"trees", a.trees}};
    m.inputs[a.features] = content_hash(feat_text);
    m.inputs[a.labels] = content_hash(label_text);
    m.outputs[a.out] = content_hash(jsonl);
    m.wall_time_s = timer.seconds();
    write_manifest(a.out + ".manifest.json", m);

    std::cout << "predictions: " << predictions.size() << " -> " << a.out << "\n";
    return 0;
}

struct StatsArgs {
    std::string predictions, out, target = "all";
};

int run_stats(const StatsArgs& a) {
    WallTimer timer;
    const std::string in_text = read_text_file(a.predictions);
    auto preds = read_predictions_jsonl(in_text);
    if (a.target != "all") {
        const SleepTarget t = sleep_target_from_string(a.target);
        std::erase_if(preds, [t](const FoldPrediction& p) { return p.target != t; });
    }
    if (preds.empty()) throw Error("no predictions for the requested target");
    const Reports reports = build_reports(preds);

    const fs::path dir(a.out);
    fs::create_directories(dir);
    const std::string eval_text = eval_to_json(reports).dump(2) + "\n";
    const std::string stats_text = stats_to_json(reports).dump(2) + "\n";
    const std::string table_text = stats_to_text(reports);
    write_text_file(dir / "eval.json", eval_text);
    write_text_file(dir / "stats.json", stats_text);
    write_text_file(dir / "stats.txt", table_text);

    RunManifest m;
    m.command = "stats";
    m.config = {{"predictions", a.predictions}, {"target", a.target}};
    m.inputs[a.predictions] = content_hash(in_text);
    m.outputs[(dir / "eval.json").string()] = content_hash(eval_text);
    m.outputs[(dir / "stats.json").string()] = content_hash(stats_text);
    m.outputs[(dir / "stats.txt").string()] = content_hash(table_text);
    m.wall_time_s = timer.seconds();
    write_manifest(dir / "manifest.json", m);

    std::cout << table_text;
    return 0;
}

struct PlotArgs {
    std::string traces, decomp, stroke_id, out;
    double fs = 200.0;
};

int run_plot(const PlotArgs& a) {
    WallTimer timer;
    if (a.traces.empty() && a.decomp.empty())
        throw Error("plot: provide --traces and/or --decomp");

    std::optional<StrokeDecomposition> decomp;
    if (!a.decomp.empty()) {
        for (auto& d : read_decompositions_jsonl(read_text_file(a.decomp))) {
            if (d.stroke_id == a.stroke_id) {
                decomp = std::move(d);
                break;
            }
        }
        if (!decomp)
            throw Error("plot: stroke id '" + a.stroke_id + "' not found in " + a.decomp);
    }

    std::optional<Stroke> stroke;
    if (!a.traces.empty()) {
        const auto traces = load_traces(a.traces, infer_format(a.traces, ""));
        for (const auto& tr : traces) {
            if (tr.source_id + "#" + std::to_string(tr.stroke_index) != a.stroke_id) continue;
            PreprocessConfig pre;
            pre.fs = a.fs;
            auto prep = preprocess({tr}, pre);
            if (prep.strokes.empty()) throw Error("plot: stroke too short to draw");
            stroke = std::move(prep.strokes.front());
            break;
        }
        if (!stroke)
            throw Error("plot: stroke id '" + a.stroke_id + "' not found in " + a.traces);
    }

    const std::string svg =
        plot_svg(decomp ? &*decomp : nullptr, stroke ? &*stroke : nullptr, a.fs);
    write_text_file(a.out, svg);

    RunManifest m;
    m.command = "plot";
    m.config = {{"traces", a.traces}, {"decomp", a.decomp}, {"stroke_id", a.stroke_id},
                {"fs", a.fs}};
    m.outputs[a.out] = content_hash(svg);
    m.wall_time_s = timer.seconds();
    write_manifest(a.out + ".manifest.json", m);

    std::cout << "plot -> " << a.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sigma-lognormal handwriting pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version());

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth-cohort", "generate a synthetic cohort");
    synth_cmd->add_option("--users", synth.users)->check(CLI::PositiveNumber);
    synth_cmd->add_option("--days", synth.days)->check(CLI::Range(8, 10000));
    synth_cmd->add_option("--effect", synth.effect)->check(CLI::NonNegativeNumber);
    synth_cmd->add_option("--seed", synth.seed);
    synth_cmd->add_option("--fs", synth.fs)->check(CLI::PositiveNumber);
    synth_cmd->add_option("--out", synth.out)->required();

    ExtractArgs extract;
    auto* extract_cmd = app.add_subcommand("extract", "decompose strokes into lognormals");
    extract_cmd->add_option("--in", extract.in)->required();
    extract_cmd->add_option("--format", extract.format)
        ->check(CLI::IsMember({"inkml", "csv"}));
    extract_cmd->add_option("--out", extract.out)->required();
    extract_cmd->add_option("--snr-target", extract.snr_target)->check(CLI::PositiveNumber);
    extract_cmd->add_option("--fs", extract.fs)->check(CLI::PositiveNumber);

    FeaturesArgs features;
    auto* features_cmd = app.add_subcommand("features", "aggregate task-sample features");
    features_cmd->add_option("--decomp", features.decomp)->required();
    features_cmd->add_option("--out", features.out)->required();

    LabelArgs label;
    auto* label_cmd = app.add_subcommand("label", "quartile-label sleep indicators");
    label_cmd->add_option("--sleep", label.sleep)->required();
    label_cmd->add_option("--out", label.out)->required();
    label_cmd->add_option("--target", label.target)
        ->check(CLI::IsMember({"all", "total_sleep", "avg_hrv", "lowest_hr", "avg_hr"}));

    EvaluateArgs evaluate;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "leave-one-day-out predictions");
    evaluate_cmd->add_option("--features", evaluate.features)->required();
    evaluate_cmd->add_option("--labels", evaluate.labels)->required();
    evaluate_cmd->add_option("--out", evaluate.out)->required();
    evaluate_cmd->add_option("--target", evaluate.target)
        ->check(CLI::IsMember({"all", "total_sleep", "avg_hrv", "lowest_hr", "avg_hr"}));
    evaluate_cmd->add_option("--slice", evaluate.slice)
        ->check(CLI::IsMember({"task", "timing", "all"}));
    evaluate_cmd->add_option("--seed", evaluate.seed);
    evaluate_cmd->add_option("--trees", evaluate.trees)->check(CLI::PositiveNumber);

    StatsArgs stats;
    auto* stats_cmd = app.add_subcommand("stats", "summary tables and tests");
    stats_cmd->add_option("--predictions", stats.predictions)->required();
    stats_cmd->add_option("--out", stats.out)->required();
    stats_cmd->add_option("--target", stats.target)
        ->check(CLI::IsMember({"all", "total_sleep", "avg_hrv", "lowest_hr", "avg_hr"}));

    PlotArgs plot;
    auto* plot_cmd = app.add_subcommand("plot", "SVG reconstruction / trajectory views");
    plot_cmd->add_option("--traces", plot.traces);
    plot_cmd->add_option("--decomp", plot.decomp);
    plot_cmd->add_option("--stroke-id", plot.stroke_id)->required();
    plot_cmd->add_option("--out", plot.out)->required();
    plot_cmd->add_option("--fs", plot.fs)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth_cmd->parsed()) return run_synth_cohort(synth);
        if (extract_cmd->parsed()) return run_extract(extract);
        if (features_cmd->parsed()) return run_features(features);
        if (label_cmd->parsed()) return run_label(label);
        if (evaluate_cmd->parsed()) return run_evaluate(evaluate);
        if (stats_cmd->parsed()) return run_stats(stats);
        if (plot_cmd->parsed()) return run_plot(plot);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
