#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "strokelab/error.hpp"
#include "strokelab/ink_io.hpp"
#include "strokelab/types.hpp"

namespace strokelab {

namespace detail {

struct MeanStd {
    double mean = 0.0, std = 0.0;
};

// Sample (n-1) standard deviation; 0 when n == 1.
inline MeanStd mean_std(std::span<const double> v) {
    MeanStd out;
    const std::size_t n = v.size();
    if (n == 0) return out;
    double sum = 0.0;
    for (double x : v) sum += x;
    out.mean = sum / static_cast<double>(n);
    if (n == 1) return out;
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(n - 1));
    return out;
}

} // namespace detail

/// Aggregates one task sample's decompositions into the ten statistics:
/// D and t0 pooled over all components of all strokes, nblog / SNR /
/// SNR-per-nblog pooled over strokes.
inline FeatureVector task_features(std::span<const StrokeDecomposition> decomps,
                                   const SampleKey& key) {
    std::vector<double> d, t0, nblog, snr, snr_per;
    for (const auto& dec : decomps) {
        if (dec.nblog == 0) continue;
        nblog.push_back(static_cast<double>(dec.nblog));
        snr.push_back(dec.snr_db);
        snr_per.push_back(dec.snr_db / static_cast<double>(dec.nblog));
        for (const auto& c : dec.components) {
            d.push_back(c.D);
            t0.push_back(c.t0);
        }
    }
    if (nblog.empty()) throw ValidationError("task_features: no decomposed strokes");

    FeatureVector f;
    f.key = key;
    const auto ds = detail::mean_std(d);
    const auto t0s = detail::mean_std(t0);
    const auto ns = detail::mean_std(nblog);
    const auto ss = detail::mean_std(snr);
    const auto ps = detail::mean_std(snr_per);
    f.d_mean = ds.mean;
    f.d_std = ds.std;
    f.t0_mean = t0s.mean;
    f.t0_std = t0s.std;
    f.nblog_mean = ns.mean;
    f.nblog_std = ns.std;
    f.snr_mean = ss.mean;
    f.snr_std = ss.std;
    f.snr_per_nblog_mean = ps.mean;
    f.snr_per_nblog_std = ps.std;
    return f;
}

// ---------------------------------------------------------------------------
// Features CSV
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& features_csv_header() {
    static const std::vector<std::string> h{
        "user", "day", "timing", "task", "d_mean", "d_std", "t0_mean", "t0_std",
        "nblog_mean", "nblog_std", "snr_mean", "snr_std",
        "snr_per_nblog_mean", "snr_per_nblog_std"};
    return h;
}

inline std::string write_features_csv(const std::vector<FeatureVector>& fv) {
    std::string out =
        "user,day,timing,task,d_mean,d_std,t0_mean,t0_std,nblog_mean,nblog_std,"
        "snr_mean,snr_std,snr_per_nblog_mean,snr_per_nblog_std\n";
    for (const auto& f : fv) {
        out += f.key.user;
        out += ',';
        out += std::to_string(f.key.day);
        out += ',';
        out += to_string(f.key.timing);
        out += ',';
        out += to_string(f.key.task);
        for (double v : f.values()) {
            out += ',';
            out += fmt_g9(v);
        }
        out += '\n';
    }
    return out;
}

inline std::vector<FeatureVector> read_features_csv(std::string_view text) {
    const auto lines = csv::split_lines(text);
    if (lines.empty()) throw ParseError("features CSV: empty file");
    csv::expect_header(csv::split_line(lines[0]), features_csv_header(), "features CSV");

    std::vector<FeatureVector> out;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::string where = "features CSV line " + std::to_string(li + 1);
        const auto cells = csv::split_line(lines[li]);
        if (cells.size() != 14) throw ParseError(where + ": expected 14 cells");
        FeatureVector f;
        f.key.user = cells[0];
        f.key.day = csv::parse_int(cells[1], where);
        f.key.timing = timing_from_string(cells[2]);
        f.key.task = task_from_string(cells[3]);
        double v[10];
        for (int i = 0; i < 10; ++i) v[i] = csv::parse_number(cells[4 + i], where);
        f.d_mean = v[0];
        f.d_std = v[1];
        f.t0_mean = v[2];
        f.t0_std = v[3];
        f.nblog_mean = v[4];
        f.nblog_std = v[5];
        f.snr_mean = v[6];
        f.snr_std = v[7];
        f.snr_per_nblog_mean = v[8];
        f.snr_per_nblog_std = v[9];
        out.push_back(std::move(f));
    }
    return out;
}

} // namespace strokelab
