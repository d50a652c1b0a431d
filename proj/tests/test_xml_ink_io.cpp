#include <catch2/catch_amalgamated.hpp>

#include "strokelab/ink_io.hpp"
#include "strokelab/rng.hpp"
#include "strokelab/xml.hpp"

using namespace strokelab;

TEST_CASE("xml parses elements, attributes, and entities") {
    const auto root = xml::parse(
        "<?xml version=\"1.0\"?><!-- c -->\n"
        "<a x=\"1\" y='two&amp;three'><b>hi &lt;there&gt;</b><c/></a>");
    REQUIRE(root.name == "a");
    REQUIRE(*root.attr("x") == "1");
    REQUIRE(*root.attr("y") == "two&three");
    REQUIRE(root.children.size() == 2);
    REQUIRE(root.children[0].text == "hi <there>");
    REQUIRE(root.children[1].name == "c");
}

TEST_CASE("xml rejects malformed documents") {
    REQUIRE_THROWS_AS(xml::parse("<a><b></a>"), ParseError);
    REQUIRE_THROWS_AS(xml::parse("<a>"), ParseError);
    REQUIRE_THROWS_AS(xml::parse("<a attr=nope></a>"), ParseError);
    REQUIRE_THROWS_AS(xml::parse("plain text"), ParseError);
    REQUIRE_THROWS_AS(xml::parse("<a>&unknown;</a>"), ParseError);
}

namespace {
std::string inkml_doc(const std::string& channels, const std::string& trace_body) {
    return "<ink xmlns=\"http://www.w3.org/2003/InkML\"><traceFormat>" + channels +
           "</traceFormat><trace>" + trace_body + "</trace></ink>";
}
} // namespace

TEST_CASE("inkml: XY trace synthesizes timestamps at 480 Hz") {
    const auto traces = parse_inkml(inkml_doc(
        "<channel name=\"X\"/><channel name=\"Y\"/>", "0 0, 1 0, 2 0"));
    REQUIRE(traces.size() == 1);
    REQUIRE(traces[0].samples.size() == 3);
    // bit-reproducible synthesis: exactly i / 480
    REQUIRE(traces[0].samples[0].t == 0.0);
    REQUIRE(traces[0].samples[1].t == 1.0 / 480.0);
    REQUIRE(traces[0].samples[2].t == 2.0 / 480.0);
    REQUIRE(traces[0].samples[1].x == 1.0);
}

TEST_CASE("inkml: zero trace elements give an empty list") {
    REQUIRE(parse_inkml("<ink><traceFormat><channel name=\"X\"/><channel name=\"Y\"/>"
                        "</traceFormat></ink>")
                .empty());
    REQUIRE(parse_inkml("<ink/>").empty());
}

TEST_CASE("inkml: declared T channel maps directly") {
    const auto traces = parse_inkml(inkml_doc(
        "<channel name=\"X\"/><channel name=\"Y\"/><channel name=\"T\"/>", "1 2 0.5"));
    REQUIRE(traces.size() == 1);
    const auto& s = traces[0].samples.at(0);
    REQUIRE(s.t == 0.5);
    REQUIRE(s.x == 1.0);
    REQUIRE(s.y == 2.0);
}

TEST_CASE("inkml: delta-encoded prefixes are unsupported") {
    REQUIRE_THROWS_WITH(
        parse_inkml(inkml_doc("<channel name=\"X\"/><channel name=\"Y\"/>",
                              "10 0, '1 0, \"2 0")),
        Catch::Matchers::ContainsSubstring("unsupported encoding"));
}

TEST_CASE("inkml: point arity mismatch names the trace") {
    REQUIRE_THROWS_WITH(
        parse_inkml(inkml_doc("<channel name=\"X\"/><channel name=\"Y\"/>", "1 2, 3")),
        Catch::Matchers::ContainsSubstring("trace 0"));
}

TEST_CASE("inkml: required channels must be declared") {
    REQUIRE_THROWS_WITH(parse_inkml(inkml_doc("<channel name=\"X\"/>", "1, 2")),
                        Catch::Matchers::ContainsSubstring("Y"));
}

TEST_CASE("inkml: coordinate units scale to millimeters") {
    const auto traces = parse_inkml(inkml_doc(
        "<channel name=\"X\" units=\"cm\"/><channel name=\"Y\" units=\"in\"/>", "1 1, 2 2"));
    REQUIRE(traces[0].samples[0].x == Catch::Approx(10.0));
    REQUIRE(traces[0].samples[0].y == Catch::Approx(25.4));
}

TEST_CASE("inkml: optional channels land in the right fields") {
    const auto traces = parse_inkml(inkml_doc(
        "<channel name=\"X\"/><channel name=\"Y\"/><channel name=\"F\"/>"
        "<channel name=\"OA\"/><channel name=\"OE\"/><channel name=\"Z\"/>",
        "1 2 0.7 10 -4 1.5"));
    const auto& s = traces[0].samples.at(0);
    REQUIRE(s.pressure == 0.7);
    REQUIRE(s.tilt_x.value() == 10.0);
    REQUIRE(s.tilt_y.value() == -4.0);
    REQUIRE(s.hover.value() == 1.5);
}

TEST_CASE("inkml: a trace never has zero samples") {
    REQUIRE_THROWS_AS(
        parse_inkml(inkml_doc("<channel name=\"X\"/><channel name=\"Y\"/>", "  ")),
        ParseError);
}

TEST_CASE("traces csv: grouping, guards, empty body") {
    const std::string text =
        "source_id,stroke,t,x,y,pressure\n"
        "a,0,0,0,0,1\n"
        "a,0,0.1,1,0,1\n"
        "a,1,0,2,0,1\n"
        "a,1,0.1,3,0,1\n";
    const auto traces = read_traces_csv(text);
    REQUIRE(traces.size() == 2);
    REQUIRE(traces[0].samples.size() == 2);
    REQUIRE(traces[1].samples.size() == 2);
    REQUIRE(traces[1].samples[0].x == 2.0);

    REQUIRE(read_traces_csv("source_id,stroke,t,x,y,pressure\n").empty());

    REQUIRE_THROWS_WITH(read_traces_csv("source_id,stroke,t,x,y,pressure\n"
                                        "g,0,0.2,0,0,1\n"
                                        "g,0,0.1,0,0,1\n"),
                        Catch::Matchers::ContainsSubstring("g#0"));
    REQUIRE_THROWS_AS(read_traces_csv("source_id,stroke,t,x\n"), ParseError);
    REQUIRE_THROWS_AS(read_traces_csv("source_id,stroke,t,x,y,pressure\na,0,0,zzz,0,1\n"),
                      ParseError);
}

TEST_CASE("traces csv: write-read round trip is the identity on canonical text") {
    // random traces, canonicalized once through a write
    rng::Stream s(rng::derive_key(5, "csv"));
    std::vector<RawTrace> traces;
    for (int k = 0; k < 4; ++k) {
        RawTrace t;
        t.source_id = "trace" + std::to_string(k / 2);
        t.stroke_index = k % 2;
        double time = 0.0;
        for (int i = 0; i < 20; ++i) {
            RawSample sm;
            time += s.uniform(0.001, 0.02);
            sm.t = time;
            sm.x = s.uniform(-40, 40);
            sm.y = s.uniform(-40, 40);
            sm.pressure = s.uniform(0, 1);
            t.samples.push_back(sm);
        }
        traces.push_back(std::move(t));
    }
    const std::string canonical = write_traces_csv(traces);
    const std::string again = write_traces_csv(read_traces_csv(canonical));
    REQUIRE(canonical == again);

    // field-for-field identity at 9 significant digits
    const auto back = read_traces_csv(canonical);
    REQUIRE(back.size() == traces.size());
    for (std::size_t i = 0; i < traces.size(); ++i) {
        REQUIRE(back[i].source_id == traces[i].source_id);
        for (std::size_t j = 0; j < traces[i].samples.size(); ++j) {
            REQUIRE(fmt_g9(back[i].samples[j].t) == fmt_g9(traces[i].samples[j].t));
            REQUIRE(fmt_g9(back[i].samples[j].x) == fmt_g9(traces[i].samples[j].x));
        }
    }
}

TEST_CASE("sleep csv: population-mean row, duplicates, validation") {
    const auto records =
        read_sleep_csv("user,day,total_sleep_h,avg_hrv_ms,lowest_hr_bpm,avg_hr_bpm\n"
                       "u1,3,6.6,56.3,51.8,57.4\n");
    REQUIRE(records.size() == 1);
    REQUIRE(records[0].user == "u1");
    REQUIRE(records[0].day == 3);
    REQUIRE(records[0].total_sleep_h == 6.6);
    REQUIRE(records[0].avg_hrv_ms == 56.3);
    REQUIRE(records[0].lowest_hr_bpm == 51.8);
    REQUIRE(records[0].avg_hr_bpm == 57.4);

    REQUIRE_THROWS_AS(
        read_sleep_csv("user,day,total_sleep_h,avg_hrv_ms,lowest_hr_bpm,avg_hr_bpm\n"
                       "u1,3,6.6,56.3,51.8,57.4\nu1,3,7,50,50,55\n"),
        ValidationError);
    REQUIRE_THROWS_AS(
        read_sleep_csv("user,day,total_sleep_h,avg_hrv_ms,lowest_hr_bpm,avg_hr_bpm\n"
                       "u1,3,6.6,-1,51.8,57.4\n"),
        ValidationError);
    REQUIRE_THROWS_AS(read_sleep_csv("user,day,total_sleep_h\n"), ParseError);
}
