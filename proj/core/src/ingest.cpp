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

#include "provscope/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <fstream>
#include <istream>
#include <utility>

#include "json.hpp"

namespace provscope::ingest {

namespace {

using nlohmann::json;

constexpr std::size_t kMaxKeptErrors = 16;

struct Alias {
    std::string_view canonical;
    std::array<std::string_view, 6> names;
};

// Lowercase alias names; lookups lowercase the key first.
constexpr std::array<Alias, 6> kAliases{{
    {"EventID", {"eventid", "event_id", "eventcode", "event_code", "id", ""}},
    {"Timestamp", {"timestamp", "@timestamp", "timecreated", "time_created", "eventtime", "timegenerated"}},
    {"ProcessName", {"processname", "process_name", "newprocessname", "image", "", ""}},
    {"BaseFileName", {"basefilename", "base_file_name", "filename", "", "", ""}},
    {"LogonType", {"logontype", "logon_type", "", "", "", ""}},
    {"ParentProcessName", {"parentprocessname", "parent_process_name", "parentimage", "", "", ""}},
}};

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string scalar_to_string(const json& value) {
    switch (value.type()) {
    case json::value_t::string:
        return value.get<std::string>();
    case json::value_t::boolean:
        return value.get<bool>() ? "true" : "false";
    case json::value_t::number_integer:
        return std::to_string(value.get<std::int64_t>());
    case json::value_t::number_unsigned:
        return std::to_string(value.get<std::uint64_t>());
    case json::value_t::number_float:
        return value.dump();
    case json::value_t::null:
        return {};
    default:
        return value.dump();
    }
}

void flatten(const json& value, const std::string& prefix, std::map<std::string, std::string>& out) {
    if (value.is_object()) {
        for (const auto& [key, child] : value.items()) {
            flatten(child, prefix.empty() ? key : prefix + "." + key, out);
        }
    } else if (value.is_array()) {
        std::size_t index = 0;
        for (const auto& child : value) {
            flatten(child, prefix + "." + std::to_string(index++), out);
        }
    } else {
        out[prefix] = scalar_to_string(value);
    }
}

const Alias* alias_for(std::string_view canonical) {
    for (const auto& alias : kAliases) {
        if (alias.canonical == canonical) return &alias;
    }
    return nullptr;
}

bool alias_matches(const Alias& alias, std::string_view lowered_key) {
    for (auto name : alias.names) {
        if (!name.empty() && name == lowered_key) return true;
    }
    return false;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    Int value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

std::optional<int> digits(std::string_view s, std::size_t pos, std::size_t count) {
    if (pos + count > s.size()) return std::nullopt;
    return parse_int<int>(s.substr(pos, count));
}

} // namespace

std::array<std::string, kCanonicalFieldCount> LogRecord::canonical_fields() const {
    return {std::to_string(event_id), process_name, base_file_name, logon_type, parent_process_name};
}

bool same_event(const LogRecord& a, const LogRecord& b) noexcept {
    return a.timestamp == b.timestamp && a.event_id == b.event_id && a.user_id == b.user_id &&
           a.process_name == b.process_name && a.base_file_name == b.base_file_name &&
           a.logon_type == b.logon_type && a.parent_process_name == b.parent_process_name;
}

RawLog parse_line(std::string_view line, std::int64_t line_no) {
    json doc = json::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) throw ParseError("malformed JSON", line_no);
    if (!doc.is_object()) throw ParseError("expected a JSON object", line_no);

    RawLog raw;
    raw.source_line = line_no;
    flatten(doc, "", raw.raw_fields);
    if (raw.raw_fields.empty()) throw ParseError("empty object", line_no);
    return raw;
}

std::optional<std::string_view> find_field(const RawLog& raw, std::string_view canonical) {
    const Alias* alias = alias_for(canonical);
    if (alias == nullptr) return std::nullopt;

    // Exact (case-insensitive) key first, then the last dotted component.
    const std::map<std::string, std::string>::value_type* suffix_match = nullptr;
    for (const auto& entry : raw.raw_fields) {
        const std::string lowered = to_lower(entry.first);
        if (alias_matches(*alias, lowered)) return std::string_view(entry.second);
        if (suffix_match == nullptr) {
            const auto dot = lowered.rfind('.');
            if (dot != std::string::npos && alias_matches(*alias, std::string_view(lowered).substr(dot + 1))) {
                suffix_match = &entry;
            }
        }
    }
    if (suffix_match != nullptr) return std::string_view(suffix_match->second);
    return std::nullopt;
}

std::string normalize_name(std::string_view value) {
    const auto slash = value.find_last_of("\\/");
    if (slash != std::string_view::npos) value.remove_prefix(slash + 1);
    while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
    while (!value.empty() && value.back() == ' ') value.remove_suffix(1);
    return to_lower(value);
}

std::optional<std::int64_t> parse_timestamp(std::string_view value) {
    if (auto ms = parse_int<std::int64_t>(value)) return ms;

    // YYYY-MM-DDTHH:MM:SS[.fff][Z|+HH:MM|-HH:MM]
    const auto year = digits(value, 0, 4);
    const auto month = digits(value, 5, 2);
    const auto day = digits(value, 8, 2);
    const auto hour = digits(value, 11, 2);
    const auto minute = digits(value, 14, 2);
    const auto second = digits(value, 17, 2);
    if (!year || !month || !day || !hour || !minute || !second) return std::nullopt;
    if (value[4] != '-' || value[7] != '-' || (value[10] != 'T' && value[10] != ' ') || value[13] != ':' ||
        value[16] != ':') {
        return std::nullopt;
    }

    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{*year}, std::chrono::month{static_cast<unsigned>(*month)},
                             std::chrono::day{static_cast<unsigned>(*day)}};
    if (!ymd.ok()) return std::nullopt;

    std::int64_t ms = duration_cast<milliseconds>(sys_days{ymd}.time_since_epoch()).count();
    ms += ((static_cast<std::int64_t>(*hour) * 60 + *minute) * 60 + *second) * 1000;

    std::size_t pos = 19;
    if (pos < value.size() && value[pos] == '.') {
        ++pos;
        std::int64_t frac = 0;
        int scale = 0;
        while (pos < value.size() && std::isdigit(static_cast<unsigned char>(value[pos]))) {
            if (scale < 3) {
                frac = frac * 10 + (value[pos] - '0');
                ++scale;
            }
            ++pos;
        }
        while (scale < 3) {
            frac *= 10;
            ++scale;
        }
        ms += frac;
    }
    if (pos < value.size()) {
        const char tz = value[pos];
        if (tz == 'Z' || tz == 'z') {
            ++pos;
        } else if (tz == '+' || tz == '-') {
            const auto off_h = digits(value, pos + 1, 2);
            const auto off_m = digits(value, pos + 4, 2);
            if (!off_h || !off_m || value[pos + 3] != ':') return std::nullopt;
            const std::int64_t offset = (static_cast<std::int64_t>(*off_h) * 60 + *off_m) * 60000;
            ms += (tz == '+') ? -offset : offset;
            pos += 6;
        }
    }
    if (pos != value.size()) return std::nullopt;
    return ms;
}

std::optional<LogRecord> downsample(const RawLog& raw, const std::string& user_id) {
    const auto event = find_field(raw, "EventID");
    const auto stamp = find_field(raw, "Timestamp");
    const auto process = find_field(raw, "ProcessName");
    if (!event || !stamp || !process) return std::nullopt;

    const auto event_id = parse_int<std::int32_t>(*event);
    const auto timestamp = parse_timestamp(*stamp);
    if (!event_id || *event_id <= 0 || !timestamp || *timestamp <= 0) return std::nullopt;

    LogRecord rec;
    rec.process_name = normalize_name(*process);
    if (rec.process_name.empty()) return std::nullopt;

    rec.user_id = user_id;
    rec.timestamp = *timestamp;
    rec.event_id = *event_id;
    rec.source_line = raw.source_line;
    if (auto v = find_field(raw, "BaseFileName")) rec.base_file_name = normalize_name(*v);
    if (auto v = find_field(raw, "LogonType")) rec.logon_type = normalize_name(*v);
    if (auto v = find_field(raw, "ParentProcessName")) rec.parent_process_name = normalize_name(*v);
    return rec;
}

std::string resolve_user(const RawLog& raw, const IngestOptions& options) {
    if (options.user_constant) return *options.user_constant;
    const std::string wanted = to_lower(options.user_field);
    for (const auto& [key, value] : raw.raw_fields) {
        if (to_lower(key) == wanted) return value;
    }
    return "unknown";
}

bool NoiseFilter::accept(const LogRecord& rec) {
    if (denylist_.contains(rec.event_id)) return false;
    if (last_kept_ && same_event(*last_kept_, rec)) return false;
    last_kept_ = rec;
    return true;
}

std::vector<LogRecord> filter_noise(std::span<const LogRecord> records, const std::set<std::int32_t>& denylist) {
    NoiseFilter filter(denylist);
    std::vector<LogRecord> kept;
    kept.reserve(records.size());
    for (const auto& rec : records) {
        if (filter.accept(rec)) kept.push_back(rec);
    }
    return kept;
}

bool IngestResult::has_labels() const {
    return !labels.empty() &&
           std::all_of(labels.begin(), labels.end(), [](Label l) { return l != Label::Unknown; });
}

IngestResult ingest_stream(std::istream& in, const IngestOptions& options) {
    IngestResult result;
    NoiseFilter filter(options.denylist);
    const std::string label_key = to_lower(options.label_field);

    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        ++result.stats.lines;
        result.stats.bytes += line.size() + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        RawLog raw;
        try {
            raw = parse_line(line, line_no);
        } catch (const ParseError& e) {
            ++result.stats.parse_errors;
            if (result.errors.size() < kMaxKeptErrors) result.errors.push_back(e);
            continue;
        }

        auto rec = downsample(raw, resolve_user(raw, options));
        if (!rec) {
            ++result.stats.skipped;
            continue;
        }
        if (!filter.accept(*rec)) {
            ++result.stats.filtered;
            continue;
        }

        Label label = Label::Unknown;
        for (const auto& [key, value] : raw.raw_fields) {
            if (to_lower(key) != label_key) continue;
            const std::string v = to_lower(value);
            if (v == "benign" || v == "0" || v == "false") label = Label::Benign;
            else if (v == "malicious" || v == "1" || v == "true") label = Label::Malicious;
            break;
        }

        result.records.push_back(std::move(*rec));
        result.record_bytes.push_back(line.size() + 1);
        result.labels.push_back(label);
    }
    result.stats.accepted = result.records.size();
    return result;
}

IngestResult ingest_file(const std::string& path, const IngestOptions& options) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open input file: " + path);
    return ingest_stream(in, options);
}

} // namespace provscope::ingest
