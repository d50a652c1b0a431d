#pragma once

// JSON-lines serialization for decompositions and fold predictions.
// Writers emit numbers at 9 significant digits by hand so artifact bytes
// are stable; readers go through nlohmann::json per line.

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "strokelab/error.hpp"
#include "strokelab/ink_io.hpp"
#include "strokelab/types.hpp"

namespace strokelab {

inline std::string decomposition_to_json(const StrokeDecomposition& d) {
    std::string out = "{\"stroke_id\":\"";
    out += d.stroke_id;
    out += "\",\"nblog\":";
    out += std::to_string(d.nblog);
    out += ",\"snr_db\":";
    out += fmt_g9(d.snr_db);
    out += ",\"components\":[";
    for (std::size_t i = 0; i < d.components.size(); ++i) {
        const auto& c = d.components[i];
        if (i) out += ',';
        out += "{\"D\":";
        out += fmt_g9(c.D);
        out += ",\"t0\":";
        out += fmt_g9(c.t0);
        out += ",\"mu\":";
        out += fmt_g9(c.mu);
        out += ",\"sigma\":";
        out += fmt_g9(c.sigma);
        out += ",\"theta_s\":";
        out += fmt_g9(c.theta_s);
        out += ",\"theta_e\":";
        out += fmt_g9(c.theta_e);
        out += '}';
    }
    out += "]}";
    return out;
}

inline std::string write_decompositions_jsonl(const std::vector<StrokeDecomposition>& ds) {
    std::string out;
    for (const auto& d : ds) {
        out += decomposition_to_json(d);
        out += '\n';
    }
    return out;
}

inline std::vector<StrokeDecomposition> read_decompositions_jsonl(std::string_view text) {
    std::vector<StrokeDecomposition> out;
    std::size_t start = 0;
    int lineno = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i != text.size() && text[i] != '\n') continue;
        ++lineno;
        std::string_view line = text.substr(start, i - start);
        start = i + 1;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw ParseError("decompositions line " + std::to_string(lineno) + ": bad JSON");
        try {
            StrokeDecomposition d;
            d.stroke_id = j.at("stroke_id").get<std::string>();
            d.nblog = j.at("nblog").get<int>();
            d.snr_db = j.at("snr_db").get<double>();
            for (const auto& cj : j.at("components")) {
                LognormalComponent c;
                c.D = cj.at("D").get<double>();
                c.t0 = cj.at("t0").get<double>();
                c.mu = cj.at("mu").get<double>();
                c.sigma = cj.at("sigma").get<double>();
                c.theta_s = cj.at("theta_s").get<double>();
                c.theta_e = cj.at("theta_e").get<double>();
                d.components.push_back(c);
            }
            out.push_back(std::move(d));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("decompositions line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

inline std::string prediction_to_json(const FoldPrediction& p) {
    std::string out = "{\"user\":\"";
    out += p.key.user;
    out += "\",\"day\":";
    out += std::to_string(p.key.day);
    out += ",\"timing\":\"";
    out += to_string(p.key.timing);
    out += "\",\"task\":\"";
    out += to_string(p.key.task);
    out += "\",\"target\":\"";
    out += to_string(p.target);
    out += "\",\"slice\":\"";
    out += p.slice;
    out += "\",\"score\":";
    out += fmt_g9(p.score);
    out += ",\"label\":";
    out += std::to_string(p.label);
    out += '}';
    return out;
}

inline std::string write_predictions_jsonl(const std::vector<FoldPrediction>& ps) {
    std::string out;
    for (const auto& p : ps) {
        out += prediction_to_json(p);
        out += '\n';
    }
    return out;
}

inline std::vector<FoldPrediction> read_predictions_jsonl(std::string_view text) {
    std::vector<FoldPrediction> out;
    std::size_t start = 0;
    int lineno = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i != text.size() && text[i] != '\n') continue;
        ++lineno;
        std::string_view line = text.substr(start, i - start);
        start = i + 1;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw ParseError("predictions line " + std::to_string(lineno) + ": bad JSON");
        try {
            FoldPrediction p;
            p.key.user = j.at("user").get<std::string>();
            p.key.day = j.at("day").get<int>();
            p.key.timing = timing_from_string(j.at("timing").get<std::string>());
            p.key.task = task_from_string(j.at("task").get<std::string>());
            p.target = sleep_target_from_string(j.at("target").get<std::string>());
            p.slice = j.at("slice").get<std::string>();
            p.score = j.at("score").get<double>();
            p.label = j.at("label").get<int>();
            out.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("predictions line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

} // namespace strokelab
