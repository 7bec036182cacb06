/*
 * Copyright 2026 The provscope Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "provscope/error.hpp"
#include "provscope/ingest.hpp"
#include "provscope/rng.hpp"

using namespace provscope;
using namespace provscope::ingest;

namespace {

LogRecord rec(std::string process, std::int64_t ts, std::int32_t event = 4688) {
    LogRecord r;
    r.user_id = "host-a";
    r.timestamp = ts;
    r.event_id = event;
    r.process_name = std::move(process);
    return r;
}

} // namespace

TEST(ParseLine, KeepsTopLevelPairs) {
    const auto raw = parse_line(R"({"EventID":"4634","LogonType":"3","ProcessName":"svchost.exe"})", 7);
    EXPECT_EQ(raw.raw_fields.at("EventID"), "4634");
    EXPECT_EQ(raw.raw_fields.at("LogonType"), "3");
    EXPECT_EQ(raw.source_line, 7);
}

TEST(ParseLine, EmptyObjectIsParseError) {
    try {
        parse_line("{}", 3);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3);
    }
}

TEST(ParseLine, MalformedIsParseError) {
    EXPECT_THROW(parse_line(R"({"EventID": )", 1), ParseError);
    EXPECT_THROW(parse_line("[1,2]", 1), ParseError);
}

TEST(ParseLine, FlattensNestedObjects) {
    const auto raw = parse_line(R"({"a":{"b":"c"}})", 1);
    ASSERT_EQ(raw.raw_fields.size(), 1u);
    EXPECT_EQ(raw.raw_fields.at("a.b"), "c");
}

TEST(ParseLine, NumbersBecomeStrings) {
    const auto raw = parse_line(R"({"EventID":4624,"ok":true})", 1);
    EXPECT_EQ(raw.raw_fields.at("EventID"), "4624");
    EXPECT_EQ(raw.raw_fields.at("ok"), "true");
}

TEST(Downsample, LogoffRecord) {
    const auto raw = parse_line(
        R"({"EventID":"4634","Timestamp":"2021-03-01T10:00:00.250Z","ProcessName":"C:\\Windows\\System32\\svchost.exe","LogonType":"3"})",
        1);
    const auto r = downsample(raw, "host-a");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->event_id, 4634);
    EXPECT_EQ(r->process_name, "svchost.exe");
    EXPECT_EQ(r->logon_type, "3");
    EXPECT_EQ(r->parent_process_name, "");
    EXPECT_EQ(r->timestamp, 1614592800250);
}

TEST(Downsample, MissingEventIdIsSkip) {
    const auto raw = parse_line(R"({"Timestamp":"100","ProcessName":"a.exe"})", 1);
    EXPECT_FALSE(downsample(raw, "u"));
}

TEST(Downsample, MissingOrBadTimestampOrProcessIsSkip) {
    EXPECT_FALSE(downsample(parse_line(R"({"EventID":"1","ProcessName":"a.exe"})", 1), "u"));
    EXPECT_FALSE(downsample(parse_line(R"({"EventID":"1","Timestamp":"yesterday","ProcessName":"a.exe"})", 1), "u"));
    EXPECT_FALSE(downsample(parse_line(R"({"EventID":"1","Timestamp":"5"})", 1), "u"));
    EXPECT_FALSE(downsample(parse_line(R"({"EventID":"0","Timestamp":"5","ProcessName":"a.exe"})", 1), "u"));
}

TEST(Downsample, WideRecordKeepsFiveFields) {
    RawLog raw;
    raw.source_line = 1;
    for (int i = 0; i < 1200; ++i) raw.raw_fields["Field" + std::to_string(i)] = "v" + std::to_string(i);
    raw.raw_fields["EventID"] = "4688";
    raw.raw_fields["Timestamp"] = "1000";
    raw.raw_fields["ProcessName"] = "Cmd.exe";
    raw.raw_fields["BaseFileName"] = "cmd.exe";
    raw.raw_fields["ParentProcessName"] = "explorer.exe";
    const auto r = downsample(raw, "u");
    ASSERT_TRUE(r);
    const auto fields = r->canonical_fields();
    EXPECT_EQ(fields.size(), 5u);
    EXPECT_EQ(fields[0], "4688");
    EXPECT_EQ(fields[1], "cmd.exe");
    EXPECT_EQ(fields[2], "cmd.exe");
    EXPECT_EQ(fields[3], "");
    EXPECT_EQ(fields[4], "explorer.exe");
}

TEST(Downsample, FieldNamesAreCaseInsensitive) {
    const auto r = downsample(parse_line(R"({"eventid":"4624","TIMESTAMP":"9","processname":"lsass.exe"})", 1), "u");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->event_id, 4624);
}

TEST(Downsample, NeverInventsValues) {
    SplitMix64 rng(4);
    for (int i = 0; i < 200; ++i) {
        RawLog raw;
        raw.source_line = 1;
        raw.raw_fields["EventID"] = std::to_string(4600 + rng.below(100));
        raw.raw_fields["Timestamp"] = std::to_string(1 + rng.below(1000000));
        raw.raw_fields["ProcessName"] = "P" + std::to_string(rng.below(50)) + ".EXE";
        if (rng.below(2)) raw.raw_fields["LogonType"] = std::to_string(rng.below(12));
        const auto r = downsample(raw, "u");
        ASSERT_TRUE(r);
        for (const auto& f : r->canonical_fields()) {
            if (f.empty()) continue;
            bool found = false;
            for (const auto& [k, v] : raw.raw_fields) {
                std::string lowered = v;
                for (auto& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                if (lowered.find(f) != std::string::npos) found = true;
            }
            EXPECT_TRUE(found) << f;
        }
    }
}

TEST(Timestamp, Formats) {
    EXPECT_EQ(parse_timestamp("1234"), 1234);
    EXPECT_EQ(parse_timestamp("1970-01-01T00:00:01Z"), 1000);
    EXPECT_EQ(parse_timestamp("1970-01-01 00:00:01.5"), 1500);
    EXPECT_EQ(parse_timestamp("1970-01-01T01:00:00+01:00"), 0);
    EXPECT_FALSE(parse_timestamp("1970-13-01T00:00:00Z"));
    EXPECT_FALSE(parse_timestamp("not a time"));
}

TEST(NormalizeName, StripsPathAndLowercases) {
    EXPECT_EQ(normalize_name("C:\\Windows\\System32\\CMD.EXE"), "cmd.exe");
    EXPECT_EQ(normalize_name("/usr/bin/Bash"), "bash");
}

TEST(FilterNoise, CollapsesAdjacentDuplicates) {
    const std::vector<LogRecord> in{rec("a", 1), rec("a", 1), rec("b", 1)};
    const auto out = filter_noise(in);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].process_name, "a");
    EXPECT_EQ(out[1].process_name, "b");
}

TEST(FilterNoise, KeepsNonAdjacentDuplicates) {
    const std::vector<LogRecord> in{rec("a", 1), rec("b", 1), rec("a", 1)};
    EXPECT_EQ(filter_noise(in).size(), 3u);
}

TEST(FilterNoise, DifferentTimestampsAreNotDuplicates) {
    const std::vector<LogRecord> in{rec("a", 1), rec("a", 2)};
    EXPECT_EQ(filter_noise(in).size(), 2u);
}

TEST(FilterNoise, Denylist) {
    const std::vector<LogRecord> in{rec("a", 1, 4688), rec("b", 2, 4672), rec("c", 3, 4688)};
    const auto out = filter_noise(in, {4672});
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[1].process_name, "c");
}

TEST(FilterNoise, ThousandRecordsMatchBruteForceScan) {
    SplitMix64 rng(21);
    std::vector<LogRecord> in;
    std::size_t dupes = 0;
    std::int64_t ts = 1;
    while (in.size() < 1000) {
        if (!in.empty() && dupes < 300 && rng.below(1000 - in.size()) < 300 - dupes) {
            in.push_back(in.back());
            ++dupes;
            continue;
        }
        ts += static_cast<std::int64_t>(rng.below(2));
        in.push_back(rec("p" + std::to_string(in.size()), ts));
    }
    ASSERT_EQ(dupes, 300u);

    std::size_t expected = 0;
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (i == 0 || !(in[i] == in[i - 1])) ++expected;
    }
    const auto out = filter_noise(in);
    EXPECT_EQ(out.size(), 700u);
    EXPECT_EQ(out.size(), expected);

    // Subsequence of the input.
    std::size_t j = 0;
    for (const auto& r : in) {
        if (j < out.size() && r == out[j]) ++j;
    }
    EXPECT_EQ(j, out.size());
}

TEST(IngestStream, CountsAndLabels) {
    std::istringstream in(
        R"({"Hostname":"h1","EventID":"4688","Timestamp":"10","ProcessName":"a.exe","Label":"benign"})"
        "\n"
        "not json\n"
        "\n"
        R"({"Hostname":"h1","EventID":"4688","Timestamp":"10","ProcessName":"a.exe","Label":"benign"})"
        "\n"
        R"({"Hostname":"h2","EventID":"4689","Timestamp":"11","ProcessName":"b.exe","Label":"malicious"})"
        "\n"
        R"({"Hostname":"h2","Timestamp":"12","ProcessName":"b.exe"})"
        "\n");
    const auto r = ingest_stream(in, IngestOptions{});
    EXPECT_EQ(r.stats.lines, 6u);
    EXPECT_EQ(r.stats.parse_errors, 1u);
    EXPECT_EQ(r.stats.filtered, 1u);
    EXPECT_EQ(r.stats.skipped, 1u);
    ASSERT_EQ(r.records.size(), 2u);
    EXPECT_EQ(r.records[0].user_id, "h1");
    EXPECT_EQ(r.records[1].user_id, "h2");
    EXPECT_EQ(r.records[1].source_line, 5);
    EXPECT_EQ(r.labels[1], Label::Malicious);
    EXPECT_TRUE(r.has_labels());
    ASSERT_EQ(r.errors.size(), 1u);
    EXPECT_EQ(r.errors[0].line(), 2);
}

TEST(IngestStream, UserConstantAndDeterminism) {
    const std::string text =
        R"({"Hostname":"h1","EventID":"4688","Timestamp":"10","ProcessName":"a.exe"})"
        "\n"
        R"({"Hostname":"h2","EventID":"4688","Timestamp":"11","ProcessName":"a.exe"})"
        "\n";
    IngestOptions opts;
    opts.user_constant = "me";
    std::istringstream a(text), b(text);
    const auto ra = ingest_stream(a, opts);
    const auto rb = ingest_stream(b, opts);
    EXPECT_EQ(ra.records, rb.records);
    for (const auto& r : ra.records) EXPECT_EQ(r.user_id, "me");
    EXPECT_FALSE(ra.has_labels());
}

TEST(IngestFile, MissingFileIsIoError) {
    EXPECT_THROW(ingest_file("/nonexistent/definitely/missing.jsonl", {}), IoError);
}
