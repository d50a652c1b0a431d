#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "strokelab/features.hpp"
#include "strokelab/ink_io.hpp"
#include "strokelab/jsonl.hpp"
#include "strokelab/manifest.hpp"
#include "strokelab/xml.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

std::string cli_bin() {
    const char* bin = std::getenv("STROKELAB_BIN");
    REQUIRE(bin != nullptr);
    return bin;
}

CmdResult run_cli(const std::string& args) {
    const std::string cmd = cli_bin() + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CmdResult res;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) res.output.append(buf, n);
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

const fs::path kWork = fs::temp_directory_path() / "strokelab_cli_tests";

struct Workspace {
    Workspace() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
    }
};

std::string p(const std::string& rel) { return (kWork / rel).string(); }

void build_small_cohort() {
    static bool built = false;
    if (built) return;
    static Workspace ws;
    const auto r = run_cli("synth-cohort --users 3 --days 10 --effect 0.8 --seed 3 --out " +
                           p("cohort"));
    REQUIRE(r.exit_code == 0);
    built = true;
}

} // namespace

TEST_CASE("cli: synth-cohort writes the documented artifacts") {
    build_small_cohort();
    REQUIRE(fs::exists(p("cohort/traces.csv")));
    REQUIRE(fs::exists(p("cohort/sleep.csv")));
    REQUIRE(fs::exists(p("cohort/ground_truth.jsonl")));
    REQUIRE(fs::exists(p("cohort/manifest.json")));

    const auto sleep = strokelab::read_sleep_csv(
        strokelab::read_text_file(p("cohort/sleep.csv")));
    REQUIRE(sleep.size() == 30);
}

TEST_CASE("cli: repeated synth runs agree on every content hash") {
    build_small_cohort();
    const auto r = run_cli("synth-cohort --users 3 --days 10 --effect 0.8 --seed 3 --out " +
                           p("cohort_again"));
    REQUIRE(r.exit_code == 0);
    const json m1 = json::parse(strokelab::read_text_file(p("cohort/manifest.json")));
    const json m2 = json::parse(strokelab::read_text_file(p("cohort_again/manifest.json")));
    REQUIRE(m1.at("outputs").size() == m2.at("outputs").size());
    for (auto it = m1.at("outputs").begin(); it != m1.at("outputs").end(); ++it) {
        const std::string other = p("cohort_again") + "/" + fs::path(it.key()).filename().string();
        REQUIRE(m2.at("outputs").at(other) == it.value());
    }
    REQUIRE(strokelab::read_text_file(p("cohort/traces.csv")) ==
            strokelab::read_text_file(p("cohort_again/traces.csv")));
}

TEST_CASE("cli: bad flags exit 2 with a usage message") {
    const auto r = run_cli("synth-cohort --users 0 --out " + p("nope"));
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.output.find("--users") != std::string::npos);
    REQUIRE(run_cli("no-such-command").exit_code == 2);
    REQUIRE(run_cli("extract").exit_code == 2);  // missing required flags
}

TEST_CASE("cli: extract produces decompositions and a summary line") {
    build_small_cohort();
    const auto r = run_cli("extract --in " + p("cohort/traces.csv") + " --format csv --out " +
                           p("decomp.jsonl"));
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.output.find("strokes=") != std::string::npos);
    REQUIRE(r.output.find("mean_snr=") != std::string::npos);
    const auto decomps = strokelab::read_decompositions_jsonl(
        strokelab::read_text_file(p("decomp.jsonl")));
    REQUIRE(decomps.size() == 720);  // 3 users x 10 days x 3 timings x (3*2 + 2*1)
}

TEST_CASE("cli: extract on an empty input exits 1") {
    strokelab::write_text_file(p("empty.csv"), "");
    const auto r = run_cli("extract --in " + p("empty.csv") + " --format csv --out " +
                           p("never.jsonl"));
    REQUIRE(r.exit_code == 1);
    REQUIRE(run_cli("extract --in " + p("missing.csv") + " --out " + p("x.jsonl")).exit_code ==
            1);
}

TEST_CASE("cli: a higher snr target never lowers the component count") {
    build_small_cohort();
    // default target was already extracted into decomp.jsonl by the prior test
    const auto r = run_cli("extract --in " + p("cohort/traces.csv") +
                           " --snr-target 35 --out " + p("decomp35.jsonl"));
    REQUIRE(r.exit_code == 0);
    auto total_nblog = [](const std::string& path) {
        long total = 0;
        for (const auto& d :
             strokelab::read_decompositions_jsonl(strokelab::read_text_file(path)))
            total += d.nblog;
        return total;
    };
    REQUIRE(total_nblog(p("decomp35.jsonl")) >= total_nblog(p("decomp.jsonl")));
}

TEST_CASE("cli: features, label, evaluate, stats chain") {
    build_small_cohort();
    REQUIRE(run_cli("features --decomp " + p("decomp.jsonl") + " --out " + p("features.csv"))
                .exit_code == 0);
    const auto features = strokelab::read_features_csv(
        strokelab::read_text_file(p("features.csv")));
    REQUIRE(features.size() == 3 * 10 * 15);  // every (user, day, timing, task)

    REQUIRE(run_cli("label --sleep " + p("cohort/sleep.csv") + " --out " + p("labels.csv"))
                .exit_code == 0);
    REQUIRE(fs::exists(p("labels.csv.rules.json")));
    const json rules = json::parse(strokelab::read_text_file(p("labels.csv.rules.json")));
    REQUIRE(rules.size() == 12);  // 3 users x 4 targets

    REQUIRE(run_cli("evaluate --features " + p("features.csv") + " --labels " +
                    p("labels.csv") + " --slice all --seed 5 --trees 40 --out " +
                    p("predictions.jsonl"))
                .exit_code == 0);
    const auto preds = strokelab::read_predictions_jsonl(
        strokelab::read_text_file(p("predictions.jsonl")));
    // task slices predict each sample once per target, timing slices again
    REQUIRE(preds.size() == 2 * 4 * features.size());

    const auto stats = run_cli("stats --predictions " + p("predictions.jsonl") + " --out " +
                               p("stats"));
    REQUIRE(stats.exit_code == 0);
    const json sj = json::parse(strokelab::read_text_file(p("stats/stats.json")));
    REQUIRE(sj.at("table2").size() == 8);   // 4 targets x 2 metrics
    REQUIRE(sj.at("table3").size() == 16);  // 4 x 2 x 2 effects
    for (const auto& row : sj.at("table2")) {
        REQUIRE(row.contains("p"));
        REQUIRE(row.contains("q"));
    }
    REQUIRE(fs::exists(p("stats/eval.json")));
    REQUIRE(fs::exists(p("stats/stats.txt")));
}

TEST_CASE("cli: target subsetting shrinks the comparison family") {
    build_small_cohort();
    REQUIRE(fs::exists(p("predictions.jsonl")));
    const auto r = run_cli("stats --predictions " + p("predictions.jsonl") +
                           " --target avg_hrv --out " + p("stats_hrv"));
    REQUIRE(r.exit_code == 0);
    const json sj = json::parse(strokelab::read_text_file(p("stats_hrv/stats.json")));
    REQUIRE(sj.at("table2").size() == 2);  // one target, two metrics -> BH family m = 2
}

TEST_CASE("cli: evaluate rejects mismatched users") {
    build_small_cohort();
    // labels limited to one user cannot cover the 3-user features file
    std::string labels = "user,day,target,label\n";
    for (int d = 1; d <= 10; ++d)
        labels += "u01," + std::to_string(d) + ",avg_hrv," + (d <= 3 ? std::string("1") : std::string("0")) + "\n";
    strokelab::write_text_file(p("labels_one_user.csv"), labels);
    const auto r = run_cli("evaluate --features " + p("features.csv") + " --labels " +
                           p("labels_one_user.csv") + " --target avg_hrv --slice task --out " +
                           p("never.jsonl"));
    REQUIRE(r.exit_code == 1);
    REQUIRE(r.output.find("u0") != std::string::npos);
}

TEST_CASE("cli: evaluate is idempotent for a fixed seed") {
    build_small_cohort();
    const std::string args = "evaluate --features " + p("features.csv") + " --labels " +
                             p("labels.csv") + " --target lowest_hr --slice task --seed 11 "
                             "--trees 30 --out ";
    REQUIRE(run_cli(args + p("pred_a.jsonl")).exit_code == 0);
    REQUIRE(run_cli(args + p("pred_b.jsonl")).exit_code == 0);
    REQUIRE(strokelab::read_text_file(p("pred_a.jsonl")) ==
            strokelab::read_text_file(p("pred_b.jsonl")));
}

TEST_CASE("cli: plot emits well-formed SVG and rejects unknown ids") {
    build_small_cohort();
    const std::string id = "u01.d01.wake.circle#0";
    const auto r = run_cli("plot --traces " + p("cohort/traces.csv") + " --decomp " +
                           p("decomp.jsonl") + " --stroke-id " + id + " --out " + p("plot.svg"));
    REQUIRE(r.exit_code == 0);
    const std::string svg = strokelab::read_text_file(p("plot.svg"));
    const auto root = strokelab::xml::parse(svg);
    REQUIRE(root.name == "svg");
    REQUIRE(svg.find("curve component") != std::string::npos);

    REQUIRE(run_cli("plot --traces " + p("cohort/traces.csv") + " --stroke-id nope#9 --out " +
                    p("never.svg"))
                .exit_code == 1);
}
