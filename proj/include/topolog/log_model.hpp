#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "topolog/error.hpp"

namespace topolog {

enum class EventType { ProcessCreate, ProcessTerminate, FileCreate, NetworkConnect };

inline constexpr std::array<EventType, 4> kAllEventTypes{
    EventType::ProcessCreate, EventType::ProcessTerminate, EventType::FileCreate,
    EventType::NetworkConnect};

inline std::string_view to_string(EventType type) {
    switch (type) {
    case EventType::ProcessCreate: return "ProcessCreate";
    case EventType::ProcessTerminate: return "ProcessTerminate";
    case EventType::FileCreate: return "FileCreate";
    case EventType::NetworkConnect: return "NetworkConnect";
    }
    return "?";
}

inline std::optional<EventType> parse_event_type(std::string_view name) {
    for (EventType t : kAllEventTypes)
        if (to_string(t) == name) return t;
    return std::nullopt;
}

/// Attributes every event of the given type must carry.
inline std::vector<std::string_view> required_attributes(EventType type) {
    switch (type) {
    case EventType::ProcessCreate: return {"process_id", "parent_process_id", "image"};
    case EventType::ProcessTerminate: return {"process_id"};
    case EventType::FileCreate: return {"process_id", "target_file"};
    case EventType::NetworkConnect:
        return {"process_id", "src_ip", "src_port", "dst_ip", "dst_port"};
    }
    return {};
}

enum class Label { Benign, Anomalous };

inline std::string_view to_string(Label label) {
    return label == Label::Benign ? "benign" : "anomalous";
}

inline std::optional<Label> parse_label(std::string_view name) {
    if (name == "benign") return Label::Benign;
    if (name == "anomalous") return Label::Anomalous;
    return std::nullopt;
}

struct LogEvent {
    double timestamp = 0.0; // seconds since run start
    EventType type = EventType::ProcessCreate;
    std::map<std::string, std::string> attributes;

    const std::string& attr(const std::string& name) const { return attributes.at(name); }

    bool operator==(const LogEvent&) const = default;
};

/// An ordered sequence of events from one monitored session.
/// Invariants: events non-empty, timestamps non-decreasing.
struct Run {
    std::string run_id;
    Label label = Label::Benign;
    std::vector<LogEvent> events;

    bool operator==(const Run&) const = default;
};

enum class NodeKind { Process, File, Ip, Port };

inline std::string_view to_string(NodeKind kind) {
    switch (kind) {
    case NodeKind::Process: return "process";
    case NodeKind::File: return "file";
    case NodeKind::Ip: return "ip";
    case NodeKind::Port: return "port";
    }
    return "?";
}

/// Typed identity of a 0-simplex: port "80" and a file named "80" are distinct.
struct NodeKey {
    NodeKind kind = NodeKind::Process;
    std::string value;

    auto operator<=>(const NodeKey&) const = default;
    bool operator==(const NodeKey&) const = default;

    std::string label() const { return std::string(to_string(kind)) + ":" + value; }
};

/// A subset of event types that participate in an experiment.
class Construction {
public:
    constexpr Construction() = default;
    constexpr Construction(std::initializer_list<EventType> types) {
        for (EventType t : types) mask_ |= bit(t);
    }

    constexpr bool includes(EventType t) const { return (mask_ & bit(t)) != 0; }

    std::vector<EventType> included() const {
        std::vector<EventType> out;
        for (EventType t : kAllEventTypes)
            if (includes(t)) out.push_back(t);
        return out;
    }

    constexpr bool operator==(const Construction&) const = default;

private:
    static constexpr unsigned bit(EventType t) { return 1u << static_cast<unsigned>(t); }
    unsigned mask_ = 0;
};

inline constexpr Construction kConstruction1{EventType::ProcessCreate, EventType::NetworkConnect};
inline constexpr Construction kConstruction2{EventType::ProcessCreate, EventType::ProcessTerminate,
                                             EventType::FileCreate, EventType::NetworkConnect};

inline Construction construction_by_number(int n) {
    if (n == 1) return kConstruction1;
    if (n == 2) return kConstruction2;
    throw Error(ErrorCode::DegenerateConfig, "construction must be 1 or 2, got " + std::to_string(n));
}

inline void validate_event(const LogEvent& e) {
    if (!(e.timestamp >= 0.0))
        throw Error(ErrorCode::NegativeTimestamp, "timestamp " + std::to_string(e.timestamp));
    for (std::string_view name : required_attributes(e.type)) {
        if (!e.attributes.contains(std::string(name)))
            throw Error(ErrorCode::MissingAttribute,
                        std::string(to_string(e.type)) + " requires '" + std::string(name) + "'");
    }
}

/// Parses a JSONL run document. Blank lines are ignored. Events are stably
/// sorted by timestamp.
inline Run parse_run(std::string_view text) {
    Run run;
    bool have_header = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        const auto where = "line " + std::to_string(line_no);
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw Error(ErrorCode::MalformedLine, where + ": not a JSON object");

        auto need = [&](const char* key, auto check) -> const nlohmann::json& {
            auto it = j.find(key);
            if (it == j.end() || !check(*it))
                throw Error(ErrorCode::MalformedLine, where + ": missing or mistyped '" + key + "'");
            return *it;
        };
        auto is_string = [](const nlohmann::json& v) { return v.is_string(); };

        const auto& run_id = need("run_id", is_string).template get_ref<const std::string&>();
        const auto& label_str = need("label", is_string).template get_ref<const std::string&>();
        const auto label = parse_label(label_str);
        if (!label) throw Error(ErrorCode::MalformedLine, where + ": unknown label '" + label_str + "'");
        if (!have_header) {
            run.run_id = run_id;
            run.label = *label;
            have_header = true;
        } else if (run_id != run.run_id || *label != run.label) {
            throw Error(ErrorCode::MalformedLine, where + ": run_id/label differ from first line");
        }

        LogEvent event;
        event.timestamp = need("timestamp", [](const nlohmann::json& v) { return v.is_number(); })
                              .template get<double>();
        const auto& type_str = need("event_type", is_string).template get_ref<const std::string&>();
        const auto type = parse_event_type(type_str);
        if (!type)
            throw Error(ErrorCode::MalformedLine, where + ": unknown event_type '" + type_str + "'");
        event.type = *type;
        for (const auto& [k, v] : need("attributes", [](const nlohmann::json& a) { return a.is_object(); }).items()) {
            if (!v.is_string())
                throw Error(ErrorCode::MalformedLine, where + ": attribute '" + k + "' is not a string");
            event.attributes.emplace(k, v.template get<std::string>());
        }
        try {
            validate_event(event);
        } catch (const Error& e) {
            throw Error(e.code(), where + ": " + e.what());
        }
        run.events.push_back(std::move(event));
    }
    if (run.events.empty()) throw Error(ErrorCode::EmptyRun, "run document has no events");
    std::stable_sort(run.events.begin(), run.events.end(),
                     [](const LogEvent& a, const LogEvent& b) { return a.timestamp < b.timestamp; });
    return run;
}

/// Inverse of parse_run: one JSON object per line, keys in schema order.
inline std::string serialize_run(const Run& run) {
    std::string out;
    for (const LogEvent& e : run.events) {
        nlohmann::ordered_json j;
        j["run_id"] = run.run_id;
        j["label"] = to_string(run.label);
        j["timestamp"] = e.timestamp;
        j["event_type"] = to_string(e.type);
        nlohmann::ordered_json attrs = nlohmann::ordered_json::object();
        for (const auto& [k, v] : e.attributes) attrs[k] = v;
        j["attributes"] = std::move(attrs);
        out += j.dump();
        out += '\n';
    }
    return out;
}

/// Keeps exactly the events whose type is in the construction, order preserved.
inline Run filter_events(const Run& run, const Construction& c) {
    Run out{run.run_id, run.label, {}};
    for (const LogEvent& e : run.events)
        if (c.includes(e.type)) out.events.push_back(e);
    if (out.events.empty())
        throw Error(ErrorCode::EmptyAfterFilter, "run '" + run.run_id + "' has no events in construction");
    return out;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Run read_run_file(const std::filesystem::path& path) {
    try {
        return parse_run(read_text_file(path));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

/// Loads every `*.jsonl` file in `dir`, sorted by run_id.
inline std::vector<Run> load_dataset(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw Error(ErrorCode::Io, dir.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<Run> runs;
    runs.reserve(files.size());
    for (const auto& f : files) runs.push_back(read_run_file(f));
    std::sort(runs.begin(), runs.end(),
              [](const Run& a, const Run& b) { return a.run_id < b.run_id; });
    return runs;
}

} // namespace topolog
