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

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "provscope/error.hpp"

namespace provscope::ingest {

// One JSON object from the input stream, flattened to dotted keys.
struct RawLog {
    std::map<std::string, std::string> raw_fields;
    std::int64_t source_line = 0;
};

// Number of canonical event fields kept after down-sampling.
inline constexpr std::size_t kCanonicalFieldCount = 5;

// A down-sampled host event: the five canonical fields plus attribution.
struct LogRecord {
    std::string user_id;
    std::int64_t timestamp = 0;  // milliseconds since epoch
    std::int32_t event_id = 0;
    std::string process_name;
    std::string base_file_name;
    std::string logon_type;
    std::string parent_process_name;
    std::int64_t source_line = 0;

    // EventID, ProcessName, BaseFileName, LogonType, ParentProcessName.
    std::array<std::string, kCanonicalFieldCount> canonical_fields() const;

    friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

// Same event content, user and timestamp. Source line is ignored.
bool same_event(const LogRecord& a, const LogRecord& b) noexcept;

struct IngestOptions {
    std::string user_field = "Hostname";
    std::optional<std::string> user_constant;  // overrides user_field
    std::set<std::int32_t> denylist;
    std::string label_field = "Label";
};

// Parses one JSON-lines record. Nested objects and arrays are flattened with
// dot-joined keys ("a.b", "list.0"). Throws ParseError carrying line_no for
// malformed JSON, non-object values, and objects with no fields.
RawLog parse_line(std::string_view line, std::int64_t line_no);

// Looks a canonical field up through the case-insensitive alias table.
// Also matches the last component of a dotted key ("Event.System.EventID").
std::optional<std::string_view> find_field(const RawLog& raw, std::string_view canonical);

// Lowercases and strips any directory prefix ("C:\Windows\cmd.exe" -> "cmd.exe").
std::string normalize_name(std::string_view value);

// Integer milliseconds or ISO-8601 ("2023-01-02T03:04:05.678Z", offsets allowed).
std::optional<std::int64_t> parse_timestamp(std::string_view value);

// Keeps the five canonical fields. Returns nullopt (Skip) when EventID,
// timestamp or ProcessName is missing or unusable.
std::optional<LogRecord> downsample(const RawLog& raw, const std::string& user_id);

// user_constant if set, else the user field value, else "unknown".
std::string resolve_user(const RawLog& raw, const IngestOptions& options);

// Streaming noise filter. Drops an event identical to the immediately
// preceding kept event (same timestamp, user and fields), and denylisted
// event ids.
class NoiseFilter {
public:
    explicit NoiseFilter(std::set<std::int32_t> denylist = {}) : denylist_(std::move(denylist)) {}

    bool accept(const LogRecord& rec);

private:
    std::set<std::int32_t> denylist_;
    std::optional<LogRecord> last_kept_;
};

std::vector<LogRecord> filter_noise(std::span<const LogRecord> records,
                                    const std::set<std::int32_t>& denylist = {});

enum class Label : std::int8_t { Unknown = -1, Benign = 0, Malicious = 1 };

struct IngestStats {
    std::size_t lines = 0;
    std::size_t parse_errors = 0;
    std::size_t skipped = 0;
    std::size_t filtered = 0;
    std::size_t accepted = 0;
    std::size_t bytes = 0;
};

struct IngestResult {
    std::vector<LogRecord> records;
    std::vector<std::size_t> record_bytes;  // source line length per accepted record
    std::vector<Label> labels;              // per accepted record
    IngestStats stats;
    std::vector<ParseError> errors;         // first few parse errors, for reporting

    bool has_labels() const;
};

// Reads a whole JSON-lines stream: parse, down-sample, filter.
IngestResult ingest_stream(std::istream& in, const IngestOptions& options);
IngestResult ingest_file(const std::string& path, const IngestOptions& options);

} // namespace provscope::ingest
