#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "strokelab/error.hpp"
#include "strokelab/types.hpp"
#include "strokelab/xml.hpp"

namespace strokelab {

// ---------------------------------------------------------------------------
// Shared formatting and CSV primitives. All tabular artifacts use decimal
// '.' numbers at 9 significant digits and LF newlines, so fixtures are
// byte-stable across platforms.
// ---------------------------------------------------------------------------

inline std::string fmt_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

namespace csv {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            std::size_t end = i;
            if (end > start && line[end - 1] == '\r') --end;  // tolerate CRLF input
            out.emplace_back(line.substr(start, end - start));
            start = i + 1;
        }
    }
    return out;
}

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            if (i > start || i < text.size()) lines.emplace_back(text.substr(start, i - start));
            start = i + 1;
        }
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

inline double parse_number(const std::string& cell, const std::string& context) {
    if (cell.empty()) throw ParseError(context + ": empty numeric cell");
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size() || !std::isfinite(v))
        throw ParseError(context + ": non-numeric cell '" + cell + "'");
    return v;
}

inline int parse_int(const std::string& cell, const std::string& context) {
    if (cell.empty()) throw ParseError(context + ": empty integer cell");
    char* end = nullptr;
    const long v = std::strtol(cell.c_str(), &end, 10);
    if (end != cell.c_str() + cell.size())
        throw ParseError(context + ": non-integer cell '" + cell + "'");
    return static_cast<int>(v);
}

inline void expect_header(const std::vector<std::string>& got,
                          const std::vector<std::string>& want, const std::string& what) {
    if (got.size() != want.size())
        throw ParseError(what + ": expected header with " + std::to_string(want.size()) +
                         " columns, got " + std::to_string(got.size()));
    for (std::size_t i = 0; i < want.size(); ++i)
        if (got[i] != want[i])
            throw ParseError(what + ": missing column '" + want[i] + "' (found '" + got[i] + "')");
}

} // namespace csv

// ---------------------------------------------------------------------------
// InkML subset
// ---------------------------------------------------------------------------

namespace detail {

struct InkChannel {
    std::string name;
    double scale = 1.0;  // to mm (X/Y) or s (T)
};

inline double unit_scale_mm(const std::string& units, const std::string& channel) {
    if (units.empty() || units == "mm") return 1.0;
    if (units == "cm") return 10.0;
    if (units == "m") return 1000.0;
    if (units == "in") return 25.4;
    throw ParseError("unsupported unit '" + units + "' for channel " + channel);
}

inline double unit_scale_s(const std::string& units) {
    if (units.empty() || units == "s") return 1.0;
    if (units == "ms") return 1e-3;
    throw ParseError("unsupported unit '" + units + "' for channel T");
}

inline const xml::Node* find_first(const xml::Node& node, std::string_view local) {
    if (node.local_name() == local) return &node;
    for (const auto& child : node.children)
        if (const xml::Node* hit = find_first(child, local)) return hit;
    return nullptr;
}

inline void collect(const xml::Node& node, std::string_view local,
                    std::vector<const xml::Node*>& out) {
    if (node.local_name() == local) out.push_back(&node);
    for (const auto& child : node.children) collect(child, local, out);
}

} // namespace detail

/// Parses the InkML subset: one traceFormat declaring ordered channels
/// (X and Y required; F, T, OA, OE, Z recognized), explicit-value traces
/// with comma-separated points. Timestamps are synthesized at 480 Hz
/// when no T channel is declared.
inline std::vector<RawTrace> parse_inkml(std::string_view document) {
    constexpr double kDefaultRateHz = 480.0;

    const xml::Node root = xml::parse(document);
    std::vector<const xml::Node*> traces;
    detail::collect(root, "trace", traces);
    if (traces.empty()) return {};

    const xml::Node* format = detail::find_first(root, "traceFormat");
    if (!format) throw ParseError("InkML: no traceFormat element");

    std::vector<detail::InkChannel> channels;
    for (const auto& child : format->children) {
        if (child.local_name() != "channel") continue;
        const std::string* name = child.attr("name");
        if (!name) throw ParseError("InkML: channel without name attribute");
        detail::InkChannel ch{*name, 1.0};
        const std::string* units = child.attr("units");
        const std::string u = units ? *units : std::string();
        if (*name == "X" || *name == "Y") ch.scale = detail::unit_scale_mm(u, *name);
        else if (*name == "T") ch.scale = detail::unit_scale_s(u);
        channels.push_back(std::move(ch));
    }
    bool has_x = false, has_y = false, has_t = false;
    for (const auto& ch : channels) {
        has_x |= ch.name == "X";
        has_y |= ch.name == "Y";
        has_t |= ch.name == "T";
    }
    if (!has_x || !has_y)
        throw ParseError("InkML: required channel " + std::string(!has_x ? "X" : "Y") +
                         " not declared");

    std::vector<RawTrace> out;
    out.reserve(traces.size());
    for (std::size_t k = 0; k < traces.size(); ++k) {
        const std::string where = "InkML trace " + std::to_string(k);
        const std::string& text = traces[k]->text;
        for (char c : text)
            if (c == '\'' || c == '"' || c == '!')
                throw ParseError(where + ": unsupported encoding (delta-prefixed values)");

        RawTrace trace;
        const std::string* id = traces[k]->attr("xml:id");
        if (!id) id = traces[k]->attr("id");
        trace.source_id = id ? *id : "trace" + std::to_string(k);
        trace.stroke_index = static_cast<int>(k);

        // Points split on ',', values on whitespace.
        std::vector<std::string> points;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= text.size(); ++i) {
            if (i == text.size() || text[i] == ',') {
                points.emplace_back(text.substr(start, i - start));
                start = i + 1;
            }
        }
        // A trailing comma leaves one blank point; drop it.
        while (!points.empty() &&
               points.back().find_first_not_of(" \t\r\n") == std::string::npos)
            points.pop_back();
        if (points.empty()) throw ParseError(where + ": no points");

        for (std::size_t pi = 0; pi < points.size(); ++pi) {
            std::vector<std::string> vals;
            const std::string& p = points[pi];
            std::size_t i = 0;
            while (i < p.size()) {
                while (i < p.size() && std::isspace(static_cast<unsigned char>(p[i]))) ++i;
                std::size_t b = i;
                while (i < p.size() && !std::isspace(static_cast<unsigned char>(p[i]))) ++i;
                if (i > b) vals.emplace_back(p.substr(b, i - b));
            }
            if (vals.size() != channels.size())
                throw ParseError(where + " point " + std::to_string(pi) + ": expected " +
                                 std::to_string(channels.size()) + " values, got " +
                                 std::to_string(vals.size()));
            RawSample sample;
            sample.t = static_cast<double>(pi) / kDefaultRateHz;
            for (std::size_t c = 0; c < channels.size(); ++c) {
                const double v =
                    csv::parse_number(vals[c], where + " point " + std::to_string(pi));
                const auto& ch = channels[c];
                if (ch.name == "X") sample.x = v * ch.scale;
                else if (ch.name == "Y") sample.y = v * ch.scale;
                else if (ch.name == "T") sample.t = v * ch.scale;
                else if (ch.name == "F") sample.pressure = v;
                else if (ch.name == "OA") sample.tilt_x = v;
                else if (ch.name == "OE") sample.tilt_y = v;
                else if (ch.name == "Z") sample.hover = v;
                // other declared channels are parsed and discarded
            }
            if (!std::isfinite(sample.x) || !std::isfinite(sample.y) || !std::isfinite(sample.t))
                throw ParseError(where + ": non-finite sample");
            trace.samples.push_back(sample);
        }
        if (has_t) {
            for (std::size_t i = 1; i < trace.samples.size(); ++i)
                if (!(trace.samples[i].t > trace.samples[i - 1].t))
                    throw ParseError(where + ": T channel not strictly increasing");
        }
        out.push_back(std::move(trace));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Traces CSV: source_id,stroke,t,x,y,pressure
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& traces_csv_header() {
    static const std::vector<std::string> h{"source_id", "stroke", "t", "x", "y", "pressure"};
    return h;
}

inline std::vector<RawTrace> read_traces_csv(std::string_view text) {
    const auto lines = csv::split_lines(text);
    if (lines.empty()) throw ParseError("traces CSV: empty file");
    csv::expect_header(csv::split_line(lines[0]), traces_csv_header(), "traces CSV");

    std::vector<RawTrace> out;
    std::set<std::pair<std::string, int>> seen;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::string where = "traces CSV line " + std::to_string(li + 1);
        const auto cells = csv::split_line(lines[li]);
        if (cells.size() != 6) throw ParseError(where + ": expected 6 cells");
        const std::string& src = cells[0];
        const int stroke = csv::parse_int(cells[1], where);
        RawSample s;
        s.t = csv::parse_number(cells[2], where);
        s.x = csv::parse_number(cells[3], where);
        s.y = csv::parse_number(cells[4], where);
        s.pressure = csv::parse_number(cells[5], where);

        const std::string group = src + "#" + std::to_string(stroke);
        if (out.empty() || out.back().source_id != src || out.back().stroke_index != stroke) {
            if (!seen.insert({src, stroke}).second)
                throw ParseError("traces CSV: group " + group + " is not contiguous");
            RawTrace t;
            t.source_id = src;
            t.stroke_index = stroke;
            out.push_back(std::move(t));
        }
        if (!out.back().samples.empty() && !(s.t > out.back().samples.back().t))
            throw ParseError("traces CSV: decreasing t within group " + group);
        out.back().samples.push_back(s);
    }
    return out;
}

inline std::string write_traces_csv(const std::vector<RawTrace>& traces) {
    std::string out = "source_id,stroke,t,x,y,pressure\n";
    for (const auto& tr : traces) {
        for (const auto& s : tr.samples) {
            out += tr.source_id;
            out += ',';
            out += std::to_string(tr.stroke_index);
            out += ',';
            out += fmt_g9(s.t);
            out += ',';
            out += fmt_g9(s.x);
            out += ',';
            out += fmt_g9(s.y);
            out += ',';
            out += fmt_g9(s.pressure);
            out += '\n';
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sleep CSV: user,day,total_sleep_h,avg_hrv_ms,lowest_hr_bpm,avg_hr_bpm
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& sleep_csv_header() {
    static const std::vector<std::string> h{"user", "day", "total_sleep_h",
                                            "avg_hrv_ms", "lowest_hr_bpm", "avg_hr_bpm"};
    return h;
}

inline std::vector<SleepRecord> read_sleep_csv(std::string_view text) {
    const auto lines = csv::split_lines(text);
    if (lines.empty()) throw ParseError("sleep CSV: empty file");
    csv::expect_header(csv::split_line(lines[0]), sleep_csv_header(), "sleep CSV");

    std::vector<SleepRecord> out;
    std::set<std::pair<std::string, int>> seen;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::string where = "sleep CSV line " + std::to_string(li + 1);
        const auto cells = csv::split_line(lines[li]);
        if (cells.size() != 6) throw ParseError(where + ": expected 6 cells");
        SleepRecord r;
        r.user = cells[0];
        r.day = csv::parse_int(cells[1], where);
        r.total_sleep_h = csv::parse_number(cells[2], where);
        r.avg_hrv_ms = csv::parse_number(cells[3], where);
        r.lowest_hr_bpm = csv::parse_number(cells[4], where);
        r.avg_hr_bpm = csv::parse_number(cells[5], where);
        if (!seen.insert({r.user, r.day}).second)
            throw ValidationError("sleep CSV: duplicate record for (" + r.user + ", day " +
                                  std::to_string(r.day) + ")");
        for (double v : {r.total_sleep_h, r.avg_hrv_ms, r.lowest_hr_bpm, r.avg_hr_bpm})
            if (!(v > 0.0))
                throw ValidationError(where + ": sleep indicators must be finite and > 0");
        out.push_back(std::move(r));
    }
    return out;
}

inline std::string write_sleep_csv(const std::vector<SleepRecord>& records) {
    std::string out = "user,day,total_sleep_h,avg_hrv_ms,lowest_hr_bpm,avg_hr_bpm\n";
    for (const auto& r : records) {
        out += r.user;
        out += ',';
        out += std::to_string(r.day);
        out += ',';
        out += fmt_g9(r.total_sleep_h);
        out += ',';
        out += fmt_g9(r.avg_hrv_ms);
        out += ',';
        out += fmt_g9(r.lowest_hr_bpm);
        out += ',';
        out += fmt_g9(r.avg_hr_bpm);
        out += '\n';
    }
    return out;
}

} // namespace strokelab
