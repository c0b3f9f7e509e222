#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "topolog/log_model.hpp"

namespace topolog {

struct CountsVector {
    std::vector<std::string> schema; // column names without the `cnt_` prefix
    std::vector<std::uint64_t> values;
};

/// Attributes whose distinct values are counted, per event type.
inline std::vector<std::string> counted_attributes(EventType type) {
    switch (type) {
    case EventType::ProcessCreate: return {"process_id", "parent_process_id", "image"};
    case EventType::ProcessTerminate: return {"process_id"};
    case EventType::FileCreate: return {"target_file"};
    case EventType::NetworkConnect: return {"dst_ip", "dst_port", "src_port"};
    }
    return {};
}

/// Event counts per included type, then unique-value counts.
inline std::vector<std::string> counts_schema(const Construction& c) {
    std::vector<std::string> names;
    const auto types = c.included();
    for (EventType t : types) names.push_back(std::string(to_string(t)));
    for (EventType t : types)
        for (const auto& a : counted_attributes(t)) names.push_back(std::string(to_string(t)) + "_unique_" + a);
    return names;
}

inline CountsVector count_vector(const Run& run, const Construction& c) {
    const Run filtered = filter_events(run, c);
    const auto types = c.included();
    CountsVector out{counts_schema(c), {}};
    for (EventType t : types) {
        std::uint64_t n = 0;
        for (const auto& e : filtered.events) n += e.type == t ? 1 : 0;
        out.values.push_back(n);
    }
    for (EventType t : types) {
        for (const auto& a : counted_attributes(t)) {
            std::set<std::string> distinct;
            for (const auto& e : filtered.events)
                if (e.type == t) distinct.insert(e.attr(a));
            out.values.push_back(distinct.size());
        }
    }
    return out;
}

} // namespace topolog
