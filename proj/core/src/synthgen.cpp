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

#include "provscope/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "json.hpp"
#include "provscope/error.hpp"
#include "provscope/rng.hpp"

namespace provscope::synth {

namespace {

using nlohmann::json;

constexpr std::int64_t kEpochStartMs = 1'700'000'000'000;
constexpr std::string_view kImagePrefix = "C:\\Windows\\System32\\";

template <typename T, typename WeightOf>
const T& pick(const std::vector<T>& items, WeightOf weight_of, SplitMix64& rng) {
    double total = 0.0;
    for (const auto& it : items) total += weight_of(it);
    double target = rng.uniform() * total;
    for (const auto& it : items) {
        target -= weight_of(it);
        if (target < 0.0) return it;
    }
    return items.back();
}

std::size_t pick_index(std::span<const double> weights, SplitMix64& rng) {
    double target = rng.uniform();
    for (std::size_t i = 0; i < weights.size(); ++i) {
        target -= weights[i];
        if (target < 0.0) return i;
    }
    // Rounding residue: last index with non-zero mass.
    for (std::size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0.0) return i;
    }
    return weights.size() - 1;
}

std::int64_t draw_gap(const BehaviorProfile& p, SplitMix64& rng) {
    if (rng.uniform() < p.concurrency) return 0;
    const double u = rng.uniform();
    return 1 + static_cast<std::int64_t>(-std::log1p(-u) * std::max(0.0, p.mean_gap_ms - 1.0));
}

// Markov walk state for one stream of events.
class Emitter {
public:
    explicit Emitter(const BehaviorProfile& profile) : profile_(profile) {}

    LogRecord next(const std::string& user, std::int64_t timestamp, SplitMix64& rng) {
        state_ = started_ ? pick_index(profile_.transitions[state_], rng) : pick_index(profile_.initial, rng);
        started_ = true;
        const std::int32_t event_id = profile_.alphabet[state_];

        LogRecord rec;
        rec.user_id = user;
        rec.timestamp = timestamp;
        rec.event_id = event_id;

        auto it = profile_.events.find(event_id);
        if (it != profile_.events.end() && !it->second.processes.empty()) {
            const auto& choice = pick(it->second.processes, [](const ProcessChoice& c) { return c.weight; }, rng);
            rec.process_name = choice.process;
            rec.base_file_name = choice.base_file;
        } else {
            rec.process_name = "system";
        }
        if (it != profile_.events.end() && !it->second.logon_types.empty()) {
            rec.logon_type = pick(it->second.logon_types, [](const Weighted& w) { return w.weight; }, rng).value;
        }

        if (spawn_ && spawn_age_ < profile_.spawn_window && rng.uniform() < profile_.spawn_probability) {
            rec.parent_process_name = *spawn_;
        } else if (it != profile_.events.end() && !it->second.parents.empty()) {
            rec.parent_process_name = pick(it->second.parents, [](const Weighted& w) { return w.weight; }, rng).value;
        }

        if (event_id == 4688) {
            spawn_ = rec.process_name;
            spawn_age_ = 0;
        } else {
            ++spawn_age_;
        }
        return rec;
    }

private:
    const BehaviorProfile& profile_;
    std::size_t state_ = 0;
    bool started_ = false;
    std::optional<std::string> spawn_;
    std::uint32_t spawn_age_ = 0;
};

void check_distribution(std::span<const double> row, const std::string& what) {
    double sum = 0.0;
    for (double p : row) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError(what + " has a negative or non-finite entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError(what + " does not sum to 1");
}

std::vector<LogRecord> merge_by_time(std::vector<std::vector<LogRecord>> streams,
                                     std::vector<std::vector<std::uint8_t>>* labels,
                                     std::vector<std::uint8_t>* merged_labels) {
    struct Ref {
        std::size_t stream;
        std::size_t pos;
    };
    std::vector<Ref> refs;
    for (std::size_t s = 0; s < streams.size(); ++s) {
        for (std::size_t i = 0; i < streams[s].size(); ++i) refs.push_back({s, i});
    }
    std::stable_sort(refs.begin(), refs.end(), [&](const Ref& a, const Ref& b) {
        return streams[a.stream][a.pos].timestamp < streams[b.stream][b.pos].timestamp;
    });
    std::vector<LogRecord> out;
    out.reserve(refs.size());
    if (merged_labels != nullptr) merged_labels->reserve(refs.size());
    for (const auto& r : refs) {
        out.push_back(std::move(streams[r.stream][r.pos]));
        if (merged_labels != nullptr) merged_labels->push_back((*labels)[r.stream][r.pos]);
    }
    return out;
}

json weighted_to_json(const std::vector<Weighted>& items) {
    json arr = json::array();
    for (const auto& w : items) arr.push_back({{"value", w.value}, {"weight", w.weight}});
    return arr;
}

std::vector<Weighted> weighted_from_json(const json& arr) {
    std::vector<Weighted> out;
    for (const auto& w : arr) out.push_back({w.at("value").get<std::string>(), w.value("weight", 1.0)});
    return out;
}

json profile_json(const BehaviorProfile& p) {
    json events = json::object();
    for (const auto& [id, b] : p.events) {
        json procs = json::array();
        for (const auto& c : b.processes) {
            procs.push_back({{"process", c.process}, {"base_file", c.base_file}, {"weight", c.weight}});
        }
        events[std::to_string(id)] = {{"processes", procs},
                                      {"logon_types", weighted_to_json(b.logon_types)},
                                      {"parents", weighted_to_json(b.parents)}};
    }
    return {{"alphabet", p.alphabet},
            {"initial", p.initial},
            {"transitions", p.transitions},
            {"events", events},
            {"concurrency", p.concurrency},
            {"mean_gap_ms", p.mean_gap_ms},
            {"spawn_probability", p.spawn_probability},
            {"spawn_window", p.spawn_window}};
}

BehaviorProfile profile_from(const json& j) {
    BehaviorProfile p;
    p.alphabet = j.at("alphabet").get<std::vector<std::int32_t>>();
    p.initial = j.at("initial").get<std::vector<double>>();
    p.transitions = j.at("transitions").get<std::vector<std::vector<double>>>();
    for (const auto& [key, b] : j.at("events").items()) {
        EventBehavior eb;
        for (const auto& c : b.value("processes", json::array())) {
            eb.processes.push_back(
                {c.at("process").get<std::string>(), c.value("base_file", std::string{}), c.value("weight", 1.0)});
        }
        eb.logon_types = weighted_from_json(b.value("logon_types", json::array()));
        eb.parents = weighted_from_json(b.value("parents", json::array()));
        p.events.emplace(std::stoi(key), std::move(eb));
    }
    p.concurrency = j.value("concurrency", p.concurrency);
    p.mean_gap_ms = j.value("mean_gap_ms", p.mean_gap_ms);
    p.spawn_probability = j.value("spawn_probability", p.spawn_probability);
    p.spawn_window = j.value("spawn_window", p.spawn_window);
    p.validate();
    return p;
}

json parse_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("profile text is not a JSON object");
    return j;
}

ProcessChoice same(const std::string& name, double weight) { return {name, name, weight}; }

} // namespace

void BehaviorProfile::validate() const {
    const std::size_t n = alphabet.size();
    if (n == 0) throw ConfigError("behavior profile has an empty event alphabet");
    if (initial.size() != n) throw ConfigError("initial distribution does not match the alphabet");
    check_distribution(initial, "initial distribution");
    if (transitions.size() != n) throw ConfigError("transition matrix does not match the alphabet");
    for (std::size_t i = 0; i < n; ++i) {
        if (transitions[i].size() != n) throw ConfigError("transition row " + std::to_string(i) + " has the wrong size");
        check_distribution(transitions[i], "transition row " + std::to_string(i));
    }
    for (auto id : alphabet) {
        if (id <= 0) throw ConfigError("event ids must be positive");
    }
    if (!(concurrency >= 0.0 && concurrency < 1.0)) throw ConfigError("concurrency rate must lie in [0, 1)");
    if (!(mean_gap_ms >= 1.0)) throw ConfigError("mean gap must be >= 1 ms");
    if (!(spawn_probability >= 0.0 && spawn_probability <= 1.0)) throw ConfigError("spawn probability must lie in [0, 1]");
}

BehaviorProfile BehaviorProfile::default_benign() {
    BehaviorProfile p;
    // logon, special privileges, process create, process exit, group enumeration, logoff
    p.alphabet = {4624, 4672, 4688, 4689, 4798, 4634};
    p.initial = {1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    p.transitions = {
        {0.00, 0.70, 0.10, 0.00, 0.20, 0.00},
        {0.00, 0.00, 0.40, 0.00, 0.50, 0.10},
        {0.00, 0.00, 0.15, 0.35, 0.30, 0.20},
        {0.10, 0.00, 0.30, 0.00, 0.30, 0.30},
        {0.00, 0.10, 0.30, 0.00, 0.30, 0.30},
        {0.80, 0.00, 0.20, 0.00, 0.00, 0.00},
    };

    const std::vector<ProcessChoice> apps = {
        same("chrome.exe", 3.0), same("outlook.exe", 2.0), same("excel.exe", 1.5), same("winword.exe", 1.5),
        same("teams.exe", 1.5),  same("explorer.exe", 1.0), same("notepad.exe", 0.5), same("cmd.exe", 0.5),
    };
    p.events[4624] = {{same("winlogon.exe", 5), same("lsass.exe", 3), same("svchost.exe", 2)},
                      {{"2", 4}, {"3", 3}, {"5", 1}, {"7", 1}, {"11", 1}},
                      {{"services.exe", 1}}};
    p.events[4672] = {{same("lsass.exe", 6), same("services.exe", 4)}, {}, {{"wininit.exe", 1}}};
    p.events[4688] = {apps, {}, {{"explorer.exe", 6}, {"svchost.exe", 3}, {"services.exe", 1}}};
    p.events[4689] = {apps, {}, {{"explorer.exe", 6}, {"svchost.exe", 4}}};
    p.events[4798] = {{{"chrome.exe", "samlib.dll", 4}, {"svchost.exe", "samlib.dll", 4}, {"explorer.exe", "samlib.dll", 2}},
                      {},
                      {{"explorer.exe", 1}}};
    p.events[4634] = {{same("winlogon.exe", 6), same("svchost.exe", 4)},
                      {{"2", 4}, {"3", 3}, {"5", 1}, {"7", 1}, {"11", 1}},
                      {}};
    p.concurrency = 0.1;
    p.mean_gap_ms = 1500.0;
    return p;
}

void InjectionSpec::validate() const {
    behavior.validate();
    if (min_length == 0 || max_length < min_length) throw ConfigError("injection length range is invalid");
    if (!(rate > 0.0 && rate <= 0.5)) throw ConfigError("injection rate must lie in (0, 0.5]");
}

InjectionSpec InjectionSpec::default_for(const std::string& family) {
    InjectionSpec spec;
    spec.family = family;
    BehaviorProfile& p = spec.behavior;
    p.alphabet = {4624, 4672, 4688, 4689, 4798, 4634};
    p.initial = {0.0, 0.0, 1.0, 0.0, 0.0, 0.0};
    // Process churn: tight create/exit bursts.
    p.transitions = {
        {0.00, 0.00, 1.00, 0.00, 0.00, 0.00},
        {0.00, 0.00, 1.00, 0.00, 0.00, 0.00},
        {0.00, 0.00, 0.50, 0.50, 0.00, 0.00},
        {0.00, 0.00, 0.80, 0.20, 0.00, 0.00},
        {0.00, 0.00, 1.00, 0.00, 0.00, 0.00},
        {0.00, 0.00, 1.00, 0.00, 0.00, 0.00},
    };
    // Mostly familiar names; 30% of launches are novel tools, and a fifth
    // of the parents is the dropped binary.
    const std::vector<ProcessChoice> tools = {
        same("vssadmin.exe", 54.0),  same("cipher.exe", 54.0),      same("wmic.exe", 54.0),
        same("bcdedit.exe", 54.0),   same("powershell.exe", 54.0),  same("rundll32.exe", 54.0),
        same("tmp4f2a.exe", 54.0),   same("cmd.exe", 343.0),        same("explorer.exe", 196.0),
        same("chrome.exe", 147.0),   same("outlook.exe", 98.0),     same("excel.exe", 98.0),
    };
    const std::vector<Weighted> parents = {{"tmp4f2a.exe", 20}, {"explorer.exe", 48}, {"cmd.exe", 32}};
    p.events[4624] = {{same("lsass.exe", 1)}, {{"3", 1}}, {{"services.exe", 1}}};
    p.events[4672] = {{same("lsass.exe", 1)}, {}, {{"wininit.exe", 1}}};
    p.events[4688] = {tools, {}, parents};
    p.events[4689] = {tools, {}, parents};
    p.events[4798] = {{{"svchost.exe", "samlib.dll", 1}}, {}, {{"cmd.exe", 1}}};
    p.events[4634] = {{same("svchost.exe", 1)}, {{"3", 1}}, {}};
    p.concurrency = 0.05;
    p.mean_gap_ms = 400.0;
    return spec;
}

std::string to_json(const BehaviorProfile& profile) { return profile_json(profile).dump(2); }

BehaviorProfile profile_from_json(const std::string& text) {
    try {
        return profile_from(parse_text(text));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid behavior profile: ") + e.what());
    }
}

std::string to_json(const InjectionSpec& spec) {
    json j = {{"family", spec.family},
              {"behavior", profile_json(spec.behavior)},
              {"min_length", spec.min_length},
              {"max_length", spec.max_length},
              {"rate", spec.rate}};
    if (spec.segment_count) j["segment_count"] = *spec.segment_count;
    return j.dump(2);
}

InjectionSpec injection_from_json(const std::string& text) {
    try {
        const json j = parse_text(text);
        InjectionSpec spec;
        spec.family = j.value("family", spec.family);
        spec.behavior = profile_from(j.at("behavior"));
        spec.min_length = j.value("min_length", spec.min_length);
        spec.max_length = j.value("max_length", spec.max_length);
        spec.rate = j.value("rate", spec.rate);
        if (j.contains("segment_count")) spec.segment_count = j.at("segment_count").get<std::size_t>();
        spec.validate();
        return spec;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid injection spec: ") + e.what());
    }
}

std::string user_name(std::uint32_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "host-%02u", index);
    return buf;
}

std::vector<LogRecord> gen_benign(const BehaviorProfile& profile, std::uint32_t users, std::uint32_t logs_per_user,
                                  std::uint64_t seed) {
    profile.validate();
    std::vector<std::vector<LogRecord>> streams(users);
    for (std::uint32_t u = 0; u < users; ++u) {
        SplitMix64 rng(derive_seed(seed, u));
        Emitter emitter(profile);
        const std::string user = user_name(u);
        std::int64_t ts = kEpochStartMs + static_cast<std::int64_t>(rng.below(60'000));
        auto& stream = streams[u];
        stream.reserve(logs_per_user);
        for (std::uint32_t i = 0; i < logs_per_user; ++i) {
            if (i > 0) ts += draw_gap(profile, rng);
            stream.push_back(emitter.next(user, ts, rng));
        }
    }
    return merge_by_time(std::move(streams), nullptr, nullptr);
}

std::size_t LabeledCorpus::malicious_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

LabeledCorpus label_all_benign(std::vector<LogRecord> records) {
    LabeledCorpus c;
    c.labels.assign(records.size(), 0);
    c.records = std::move(records);
    return c;
}

LabeledCorpus inject(std::span<const LogRecord> benign, const InjectionSpec& spec, std::uint64_t seed) {
    spec.validate();
    if (benign.empty()) throw ConfigError("cannot inject into an empty stream");

    // Per-user benign streams in arrival order.
    std::vector<std::string> users;
    std::map<std::string, std::vector<LogRecord>> by_user;
    for (const auto& r : benign) {
        auto [it, inserted] = by_user.try_emplace(r.user_id);
        if (inserted) users.push_back(r.user_id);
        it->second.push_back(r);
    }

    const double mean_length = (spec.min_length + spec.max_length) / 2.0;
    std::size_t count = 0;
    if (spec.segment_count) {
        count = *spec.segment_count;
    } else {
        count = static_cast<std::size_t>(std::llround(spec.rate * static_cast<double>(benign.size()) / mean_length));
        if (count == 0) {
            throw ConfigError("injection rate " + std::to_string(spec.rate) + " yields no segment for " +
                              std::to_string(benign.size()) + " records");
        }
    }

    SplitMix64 rng(derive_seed(seed, 0x494E4A));  // "INJ"
    struct Planned {
        std::size_t offset;
        std::size_t length;
        std::size_t order;
    };
    std::map<std::string, std::vector<Planned>> plan;
    for (std::size_t s = 0; s < count; ++s) {
        const std::string& user = users[rng.below(users.size())];
        const std::size_t offset = rng.below(by_user[user].size() + 1);
        const std::size_t length = spec.min_length + rng.below(spec.max_length - spec.min_length + 1);
        plan[user].push_back({offset, length, s});
    }

    LabeledCorpus out;
    out.family = spec.family;
    std::vector<std::vector<LogRecord>> streams;
    std::vector<std::vector<std::uint8_t>> stream_labels;
    for (const auto& user : users) {
        const auto& source = by_user[user];
        auto& segments = plan[user];
        std::sort(segments.begin(), segments.end(), [](const Planned& a, const Planned& b) {
            return a.offset != b.offset ? a.offset < b.offset : a.order < b.order;
        });

        std::vector<LogRecord> stream;
        std::vector<std::uint8_t> labels;
        std::int64_t shift = 0;
        std::size_t next_segment = 0;
        for (std::size_t i = 0; i <= source.size(); ++i) {
            while (next_segment < segments.size() && segments[next_segment].offset == i) {
                const auto& seg = segments[next_segment++];
                const std::int64_t anchor = stream.empty() ? source.front().timestamp - 1 : stream.back().timestamp;
                SplitMix64 seg_rng(derive_seed(seed, 0x5345470000ULL + seg.order));
                Emitter emitter(spec.behavior);
                std::int64_t ts = anchor;
                for (std::size_t k = 0; k < seg.length; ++k) {
                    ts += (k == 0) ? 1 + draw_gap(spec.behavior, seg_rng) : draw_gap(spec.behavior, seg_rng);
                    stream.push_back(emitter.next(user, ts, seg_rng));
                    labels.push_back(1);
                }
                shift += ts - anchor;
                out.splices.push_back({user, seg.offset, seg.length});
            }
            if (i == source.size()) break;
            LogRecord rec = source[i];
            rec.timestamp += shift;
            stream.push_back(std::move(rec));
            labels.push_back(0);
        }
        streams.push_back(std::move(stream));
        stream_labels.push_back(std::move(labels));
    }

    out.records = merge_by_time(std::move(streams), &stream_labels, &out.labels);
    return out;
}

void write_jsonl(std::ostream& out, const LabeledCorpus& corpus) {
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        const auto& r = corpus.records[i];
        const bool malicious = i < corpus.labels.size() && corpus.labels[i] != 0;
        json j = {{"Hostname", r.user_id},
                  {"Timestamp", r.timestamp},
                  {"EventID", std::to_string(r.event_id)},
                  {"ProcessName", std::string(kImagePrefix) + r.process_name},
                  {"Label", malicious ? "malicious" : "benign"}};
        if (!r.base_file_name.empty()) j["BaseFileName"] = r.base_file_name;
        if (!r.logon_type.empty()) j["LogonType"] = r.logon_type;
        if (!r.parent_process_name.empty()) j["ParentProcessName"] = std::string(kImagePrefix) + r.parent_process_name;
        if (malicious) j["Family"] = corpus.family;
        out << j.dump() << '\n';
    }
}

ReferenceSplit reference_split(std::uint64_t seed, std::uint32_t users, std::uint32_t logs_per_user, double rate) {
    const auto profile = BehaviorProfile::default_benign();
    ReferenceSplit split;
    split.train = label_all_benign(gen_benign(profile, users, logs_per_user, seed));
    auto spec = InjectionSpec::default_for("Ransomware");
    spec.rate = rate;
    const auto benign = gen_benign(profile, users, logs_per_user, derive_seed(seed, 0x54455354));  // "TEST"
    split.test = inject(benign, spec, derive_seed(seed, 0x4D4958));                               // "MIX"
    return split;
}

} // namespace provscope::synth
