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

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "provscope/ingest.hpp"

namespace provscope::synth {

using ingest::LogRecord;

struct Weighted {
    std::string value;
    double weight = 1.0;
};

struct ProcessChoice {
    std::string process;
    std::string base_file;
    double weight = 1.0;
};

// Field vocabulary of one event id.
struct EventBehavior {
    std::vector<ProcessChoice> processes;
    std::vector<Weighted> logon_types;  // empty value allowed
    std::vector<Weighted> parents;      // fallback parent names when no spawn is active
};

// Markov model of one user's event stream.
struct BehaviorProfile {
    std::vector<std::int32_t> alphabet;
    std::vector<double> initial;                   // over alphabet
    std::vector<std::vector<double>> transitions;  // row-stochastic, alphabet x alphabet
    std::map<std::int32_t, EventBehavior> events;
    double concurrency = 0.1;      // p_c: probability a record reuses its predecessor's timestamp
    double mean_gap_ms = 1500.0;   // gaps are 1 + Exp(mean_gap_ms - 1), rounded down
    double spawn_probability = 0.6;  // a record names the latest 4688 process as its parent
    std::uint32_t spawn_window = 3;  // ... if that 4688 is at most this many records back

    // Throws ConfigError.
    void validate() const;

    static BehaviorProfile default_benign();
};

// Anomalous behavior spliced into a benign stream.
struct InjectionSpec {
    std::string family = "Ransomware";
    BehaviorProfile behavior;
    std::uint32_t min_length = 20;
    std::uint32_t max_length = 60;
    double rate = 0.05;  // injected records / benign records
    std::optional<std::size_t> segment_count;  // overrides the count derived from rate

    void validate() const;

    static InjectionSpec default_for(const std::string& family = "Ransomware");
};

// Profiles round-trip through a JSON text form; see docs/synthgen.md.
std::string to_json(const BehaviorProfile& profile);
BehaviorProfile profile_from_json(const std::string& text);
std::string to_json(const InjectionSpec& spec);
InjectionSpec injection_from_json(const std::string& text);

// Host names "host-00", "host-01", ...
std::string user_name(std::uint32_t index);

// Per user a Markov walk over event ids; users are merged by timestamp.
std::vector<LogRecord> gen_benign(const BehaviorProfile& profile, std::uint32_t users, std::uint32_t logs_per_user,
                                  std::uint64_t seed);

struct Splice {
    std::string user;
    std::size_t offset = 0;  // insertion point in the user's benign stream
    std::size_t length = 0;
};

struct LabeledCorpus {
    std::vector<LogRecord> records;
    std::vector<std::uint8_t> labels;  // 1 = malicious
    std::vector<Splice> splices;       // in user, then offset order
    std::string family;

    std::size_t malicious_count() const;
};

// Splices anomalous segments into the benign stream at random per-user
// offsets. Later records of that user are shifted by each segment's duration,
// keeping per-user timestamps non-decreasing. Throws ConfigError when the
// rate cannot produce a single segment for this stream length.
LabeledCorpus inject(std::span<const LogRecord> benign, const InjectionSpec& spec, std::uint64_t seed);

LabeledCorpus label_all_benign(std::vector<LogRecord> records);

// JSON-lines with Hostname, Timestamp, EventID, ProcessName, BaseFileName,
// LogonType, ParentProcessName, Label and (malicious only) Family.
void write_jsonl(std::ostream& out, const LabeledCorpus& corpus);

// Benign training stream plus an independently seeded mixed test stream
// with default_for("Ransomware") segments injected at `rate`.
struct ReferenceSplit {
    LabeledCorpus train;
    LabeledCorpus test;
};
ReferenceSplit reference_split(std::uint64_t seed, std::uint32_t users = 10, std::uint32_t logs_per_user = 5000,
                               double rate = 0.05);

} // namespace provscope::synth
