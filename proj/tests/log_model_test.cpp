#include <gtest/gtest.h>

#include "test_util.hpp"
#include "topolog/log_model.hpp"

using namespace topolog;
using namespace testutil;

namespace {

const char* kTwoLines =
    R"({"run_id":"a","label":"anomalous","timestamp":2.5,"event_type":"FileCreate","attributes":{"process_id":"7","target_file":"x.txt"}})"
    "\n"
    R"({"run_id":"a","label":"anomalous","timestamp":1,"event_type":"ProcessTerminate","attributes":{"process_id":"7"}})"
    "\n";

} // namespace

TEST(ParseRun, SortsByTimestamp) {
    const topolog::Run r = parse_run(kTwoLines);
    EXPECT_EQ(r.run_id, "a");
    EXPECT_EQ(r.label, Label::Anomalous);
    ASSERT_EQ(r.events.size(), 2u);
    EXPECT_EQ(r.events[0].type, EventType::ProcessTerminate);
    EXPECT_DOUBLE_EQ(r.events[1].timestamp, 2.5);
    EXPECT_EQ(r.events[1].attr("target_file"), "x.txt");
}

TEST(ParseRun, StableForEqualTimestamps) {
    topolog::Run r = run({fc(1, "1", "b"), fc(1, "1", "a"), fc(1, "1", "c")});
    const topolog::Run back = parse_run(serialize_run(r));
    EXPECT_EQ(back.events, r.events);
}

TEST(ParseRun, IgnoresBlankLinesAndCrlf) {
    std::string text = "\n";
    text += R"({"run_id":"a","label":"benign","timestamp":0,"event_type":"ProcessTerminate","attributes":{"process_id":"1"}})";
    text += "\r\n   \n";
    EXPECT_EQ(parse_run(text).events.size(), 1u);
}

TEST(ParseRun, MissingRequiredAttribute) {
    const std::string line =
        R"({"run_id":"a","label":"benign","timestamp":0,"event_type":"NetworkConnect","attributes":{"process_id":"1","src_ip":"1.1.1.1","src_port":"1","dst_ip":"2.2.2.2"}})";
    EXPECT_EQ(code_of([&] { parse_run(line); }), ErrorCode::MissingAttribute);
}

TEST(ParseRun, NegativeTimestamp) {
    const std::string line =
        R"({"run_id":"a","label":"benign","timestamp":-1,"event_type":"ProcessTerminate","attributes":{"process_id":"1"}})";
    EXPECT_EQ(code_of([&] { parse_run(line); }), ErrorCode::NegativeTimestamp);
}

TEST(ParseRun, MalformedInputsReportLine) {
    const std::string good =
        R"({"run_id":"a","label":"benign","timestamp":0,"event_type":"ProcessTerminate","attributes":{"process_id":"1"}})";
    try {
        parse_run(good + "\n{not json\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedLine);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
    EXPECT_EQ(code_of([] { parse_run("[1,2]"); }), ErrorCode::MalformedLine);
    EXPECT_EQ(code_of([] {
                  parse_run(R"({"run_id":"a","label":"weird","timestamp":0,"event_type":"ProcessTerminate","attributes":{"process_id":"1"}})");
              }),
              ErrorCode::MalformedLine);
    EXPECT_EQ(code_of([] {
                  parse_run(R"({"run_id":"a","label":"benign","timestamp":0,"event_type":"Registry","attributes":{}})");
              }),
              ErrorCode::MalformedLine);
    EXPECT_EQ(code_of([] {
                  parse_run(R"({"run_id":"a","label":"benign","timestamp":"0","event_type":"ProcessTerminate","attributes":{"process_id":"1"}})");
              }),
              ErrorCode::MalformedLine);
    EXPECT_EQ(code_of([] {
                  parse_run(R"({"run_id":"a","label":"benign","timestamp":0,"event_type":"ProcessTerminate","attributes":{"process_id":1}})");
              }),
              ErrorCode::MalformedLine);
}

TEST(ParseRun, InconsistentRunIdRejected) {
    const std::string text =
        R"({"run_id":"a","label":"benign","timestamp":0,"event_type":"ProcessTerminate","attributes":{"process_id":"1"}})"
        "\n"
        R"({"run_id":"b","label":"benign","timestamp":0,"event_type":"ProcessTerminate","attributes":{"process_id":"1"}})";
    EXPECT_EQ(code_of([&] { parse_run(text); }), ErrorCode::MalformedLine);
}

TEST(ParseRun, EmptyDocument) {
    EXPECT_EQ(code_of([] { parse_run(""); }), ErrorCode::EmptyRun);
    EXPECT_EQ(code_of([] { parse_run("\n\n"); }), ErrorCode::EmptyRun);
}

TEST(ParseRun, ExtraAttributesKept) {
    const topolog::Run r = parse_run(
        R"({"run_id":"a","label":"benign","timestamp":0,"event_type":"ProcessTerminate","attributes":{"process_id":"1","sysmon_id":"5"}})");
    EXPECT_EQ(r.events[0].attr("sysmon_id"), "5");
}

TEST(SerializeRun, RoundTrip) {
    const topolog::Run r = run({pc(0.125, "1", "2", "C:\\a b\\c.exe"), fc(3, "2", "\"quoted\".txt"),
                       nc(7.001, "2", "10.0.0.1", "50000", "8.8.8.8", "53"), pt(9, "2")},
                      Label::Anomalous, "run_0001");
    EXPECT_EQ(parse_run(serialize_run(r)), r);
}

TEST(SerializeRun, KeyOrder) {
    const std::string line = serialize_run(run({pt(1, "4")}));
    EXPECT_EQ(line, R"({"run_id":"r","label":"benign","timestamp":1.0,"event_type":"ProcessTerminate","attributes":{"process_id":"4"}})"
                    "\n");
}

TEST(FilterEvents, Construction1KeepsProcessCreateAndNetwork) {
    const topolog::Run r = run({pc(0, "1", "2", "a"), fc(1, "2", "f"), nc(2, "2", "i", "1", "j", "2")});
    const topolog::Run f = filter_events(r, kConstruction1);
    ASSERT_EQ(f.events.size(), 2u);
    EXPECT_EQ(f.events[0].type, EventType::ProcessCreate);
    EXPECT_EQ(f.events[1].type, EventType::NetworkConnect);
    EXPECT_EQ(filter_events(r, kConstruction2), r);
}

TEST(FilterEvents, EmptyAfterFilter) {
    const topolog::Run r = run({fc(1, "2", "f")});
    EXPECT_EQ(code_of([&] { filter_events(r, kConstruction1); }), ErrorCode::EmptyAfterFilter);
}

TEST(FilterEvents, Idempotent) {
    const topolog::Run r = run({pc(0, "1", "2", "a"), fc(1, "2", "f"), pt(2, "2"), nc(2, "2", "i", "1", "j", "2")});
    for (const auto& c : {kConstruction1, kConstruction2}) {
        const topolog::Run once = filter_events(r, c);
        EXPECT_EQ(filter_events(once, c), once);
    }
}

TEST(Construction, Membership) {
    EXPECT_TRUE(kConstruction1.includes(EventType::ProcessCreate));
    EXPECT_TRUE(kConstruction1.includes(EventType::NetworkConnect));
    EXPECT_FALSE(kConstruction1.includes(EventType::FileCreate));
    EXPECT_FALSE(kConstruction1.includes(EventType::ProcessTerminate));
    EXPECT_EQ(kConstruction2.included().size(), 4u);
    EXPECT_EQ(construction_by_number(2), kConstruction2);
    EXPECT_EQ(code_of([] { construction_by_number(3); }), ErrorCode::DegenerateConfig);
}

TEST(NodeKey, TypedIdentity) {
    const NodeKey port{NodeKind::Port, "80"};
    const NodeKey file{NodeKind::File, "80"};
    EXPECT_NE(port, file);
    EXPECT_EQ(port.label(), "port:80");
}
