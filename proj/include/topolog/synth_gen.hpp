#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "topolog/error.hpp"
#include "topolog/log_model.hpp"
#include "topolog/parallel.hpp"
#include "topolog/rng.hpp"

namespace topolog {

/// Behavioural knobs for one class of runs. Rates are per process.
struct BehaviourProfile {
    double mean_processes = 12.0;   // Poisson mean of processes spawned per run
    double child_spawn_prob = 0.15; // new process is a child of the previous one (chains)
    double file_touch_rate = 1.5;   // Poisson mean of files created per process
    double network_prob = 0.4;      // process opens network connections at all
    double network_fanout = 1.5;    // mean connections per networking process
    double scan_prob = 0.05;        // follow-up connection probes a fresh port
    double cycle_prob = 0.05;       // identifier reuse: shared files, revisited IPs, dropped images
    double terminate_prob = 0.7;
    double early_fraction = 0.3;    // processes started in the first tenth of the run

    bool operator==(const BehaviourProfile&) const = default;
};

inline BehaviourProfile default_benign_profile() { return {}; }

inline BehaviourProfile default_anomalous_profile() {
    BehaviourProfile p;
    p.mean_processes = 16.0;
    p.child_spawn_prob = 0.55;
    p.file_touch_rate = 2.0;
    p.network_prob = 0.5;
    p.network_fanout = 4.0;
    p.scan_prob = 0.6;
    p.cycle_prob = 0.5;
    p.terminate_prob = 0.5;
    p.early_fraction = 0.8;
    return p;
}

struct GenConfig {
    std::uint64_t seed = 0;
    std::size_t n_runs = 200;
    double anomaly_fraction = 0.5;
    double run_duration = 180.0;
    BehaviourProfile benign = default_benign_profile();
    BehaviourProfile anomalous = default_anomalous_profile();
    unsigned jobs = 1;
};

inline nlohmann::ordered_json to_json(const BehaviourProfile& p) {
    nlohmann::ordered_json j;
    j["mean_processes"] = p.mean_processes;
    j["child_spawn_prob"] = p.child_spawn_prob;
    j["file_touch_rate"] = p.file_touch_rate;
    j["network_prob"] = p.network_prob;
    j["network_fanout"] = p.network_fanout;
    j["scan_prob"] = p.scan_prob;
    j["cycle_prob"] = p.cycle_prob;
    j["terminate_prob"] = p.terminate_prob;
    j["early_fraction"] = p.early_fraction;
    return j;
}

inline nlohmann::ordered_json to_json(const GenConfig& c) {
    nlohmann::ordered_json j;
    j["seed"] = c.seed;
    j["n_runs"] = c.n_runs;
    j["anomaly_fraction"] = c.anomaly_fraction;
    j["run_duration"] = c.run_duration;
    j["prng"] = "xoshiro256** seeded by splitmix64; run i uses derive_seed(seed, i)";
    j["benign_profile"] = to_json(c.benign);
    j["anomalous_profile"] = to_json(c.anomalous);
    return j;
}

inline std::size_t anomalous_run_count(const GenConfig& c) {
    return static_cast<std::size_t>(std::llround(c.anomaly_fraction * static_cast<double>(c.n_runs)));
}

inline void validate(const GenConfig& c) {
    auto bad = [](const std::string& why) { throw Error(ErrorCode::DegenerateConfig, why); };
    if (c.n_runs < 2) bad("n_runs must be at least 2");
    if (!(c.anomaly_fraction >= 0.0 && c.anomaly_fraction <= 1.0)) bad("anomaly_fraction must lie in [0,1]");
    const auto n_anom = anomalous_run_count(c);
    if (n_anom < 1 || n_anom >= c.n_runs) bad("anomaly_fraction must yield at least one run of each label");
    if (!(c.run_duration > 0.0)) bad("run_duration must be positive");
    for (const auto* p : {&c.benign, &c.anomalous}) {
        for (double rate : {p->mean_processes, p->file_touch_rate, p->network_fanout})
            if (!(rate >= 0.0)) bad("rate parameters must be non-negative");
        for (double prob : {p->child_spawn_prob, p->network_prob, p->scan_prob, p->cycle_prob, p->terminate_prob,
                            p->early_fraction})
            if (!(prob >= 0.0 && prob <= 1.0)) bad("probabilities must lie in [0,1]");
    }
}

inline std::string run_id_for(std::size_t index, std::size_t n_runs) {
    int width = 4;
    for (std::size_t m = 10000; m < n_runs; m *= 10) ++width;
    char buf[32];
    std::snprintf(buf, sizeof buf, "run_%0*zu", width, index);
    return buf;
}

namespace detail {

inline constexpr std::array<const char*, 8> kCommonImages{
    "C:\\Windows\\System32\\svchost.exe",   "C:\\Windows\\System32\\conhost.exe",
    "C:\\Windows\\System32\\taskhostw.exe", "C:\\Windows\\System32\\RuntimeBroker.exe",
    "C:\\Windows\\System32\\SearchProtocolHost.exe",
    "C:\\Program Files\\Google\\Chrome\\Application\\chrome.exe",
    "C:\\Windows\\System32\\backgroundTaskHost.exe", "C:\\Windows\\System32\\WmiPrvSE.exe"};

inline constexpr std::array<int, 4> kCommonPorts{443, 80, 53, 8080};

inline std::string hex_token(Rng& rng) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%08llx", static_cast<unsigned long long>(rng.next() & 0xffffffffULL));
    return buf;
}

inline std::string random_public_ip(Rng& rng) {
    // Draws are sequenced explicitly; operands of + are unsequenced.
    const auto a = 11 + rng.below(180);
    const auto b = rng.below(256);
    const auto c = rng.below(256);
    const auto d = 1 + rng.below(254);
    return std::to_string(a) + "." + std::to_string(b) + "." + std::to_string(c) + "." + std::to_string(d);
}

inline double clamp_time(double t, double duration) {
    return std::round(std::clamp(t, 0.0, duration) * 1000.0) / 1000.0;
}

/// One run: a short-lived process population rooted at two pre-existing
/// system processes, each process optionally writing files, opening
/// connections and exiting.
inline Run generate_run(std::string run_id, Label label, const BehaviourProfile& prof, double duration,
                        std::uint64_t seed) {
    Rng rng(seed);
    struct Proc {
        std::string pid;
        std::vector<std::string> files;
    };

    const auto host_c = 1 + rng.below(250);
    const auto host_d = 2 + rng.below(250);
    const std::string host_ip = "10.0." + std::to_string(host_c) + "." + std::to_string(host_d);
    std::uint64_t next_pid = 1000 + 4 * rng.below(2000);
    auto alloc_pid = [&] {
        next_pid += 4 * (1 + rng.below(8));
        return std::to_string(next_pid);
    };
    const std::array<std::string, 2> roots{alloc_pid(), alloc_pid()};

    std::vector<LogEvent> events;
    auto emit = [&](double t, EventType type, std::map<std::string, std::string> attrs, const char* sysmon_id) {
        attrs["sysmon_id"] = sysmon_id;
        events.push_back({clamp_time(t, duration), type, std::move(attrs)});
    };

    std::vector<Proc> procs;
    std::vector<std::string> all_files;
    std::vector<std::string> known_ips;
    std::uint64_t file_counter = 0;

    const unsigned n_proc = std::max(1u, rng.poisson(prof.mean_processes));
    std::vector<double> starts(n_proc);
    for (auto& s : starts) {
        const double horizon = rng.bernoulli(prof.early_fraction) ? 0.1 : 0.9;
        s = rng.uniform(0.0, horizon * duration);
    }
    std::sort(starts.begin(), starts.end());

    for (unsigned k = 0; k < n_proc; ++k) {
        const double t = starts[k];
        std::size_t parent_idx = procs.size(); // sentinel: a root process
        if (!procs.empty() && rng.bernoulli(prof.child_spawn_prob)) parent_idx = procs.size() - 1;
        const std::string parent_pid =
            parent_idx < procs.size() ? procs[parent_idx].pid : roots[static_cast<std::size_t>(rng.below(2))];

        std::string image;
        if (parent_idx < procs.size() && !procs[parent_idx].files.empty() && rng.bernoulli(prof.cycle_prob)) {
            const auto& pf = procs[parent_idx].files;
            image = pf[static_cast<std::size_t>(rng.below(pf.size()))];
        } else if (rng.bernoulli(0.8)) {
            image = kCommonImages[static_cast<std::size_t>(rng.below(kCommonImages.size()))];
        } else {
            image = "C:\\Users\\user\\AppData\\Local\\Temp\\" + hex_token(rng) + ".exe";
        }

        Proc proc{alloc_pid(), {}};
        emit(t, EventType::ProcessCreate,
             {{"process_id", proc.pid}, {"parent_process_id", parent_pid}, {"image", image}}, "1");

        const unsigned n_files = rng.poisson(prof.file_touch_rate);
        for (unsigned f = 0; f < n_files; ++f) {
            std::string target;
            if (!all_files.empty() && rng.bernoulli(prof.cycle_prob)) {
                target = all_files[static_cast<std::size_t>(rng.below(all_files.size()))];
            } else {
                target = "C:\\Users\\user\\Documents\\f" + std::to_string(file_counter++) + "_" + hex_token(rng) + ".dat";
                all_files.push_back(target);
            }
            proc.files.push_back(target);
            emit(t + rng.uniform(0.0, 10.0), EventType::FileCreate,
                 {{"process_id", proc.pid}, {"target_file", target}}, "11");
        }

        if (rng.bernoulli(prof.network_prob)) {
            const unsigned n_conn = 1 + rng.poisson(std::max(0.0, prof.network_fanout - 1.0));
            std::string dst;
            if (!known_ips.empty() && rng.bernoulli(prof.cycle_prob)) {
                dst = known_ips[static_cast<std::size_t>(rng.below(known_ips.size()))];
            } else {
                dst = random_public_ip(rng);
                known_ips.push_back(dst);
            }
            const int base_port = kCommonPorts[static_cast<std::size_t>(rng.below(kCommonPorts.size()))];
            double tc = t + rng.uniform(0.0, 5.0);
            for (unsigned c = 0; c < n_conn; ++c) {
                const int port = c > 0 && rng.bernoulli(prof.scan_prob) ? static_cast<int>(1 + rng.below(1024)) : base_port;
                emit(tc, EventType::NetworkConnect,
                     {{"process_id", proc.pid},
                      {"src_ip", host_ip},
                      {"src_port", std::to_string(49152 + rng.below(16384))},
                      {"dst_ip", dst},
                      {"dst_port", std::to_string(port)}},
                     "3");
                tc += rng.uniform(0.0, 2.0);
            }
        }

        if (rng.bernoulli(prof.terminate_prob))
            emit(t + rng.uniform(5.0, 60.0), EventType::ProcessTerminate, {{"process_id", proc.pid}}, "5");

        procs.push_back(std::move(proc));
    }

    // Log-forwarding agent shipping to the collector every 30 s and once more
    // at the end of the capture, so every run's last event is at `duration`.
    const std::string agent_pid = alloc_pid();
    for (double t = 30.0;; t += 30.0) {
        const double at = std::min(t, duration);
        emit(at, EventType::NetworkConnect,
             {{"process_id", agent_pid},
              {"src_ip", host_ip},
              {"src_port", std::to_string(49152 + rng.below(16384))},
              {"dst_ip", "10.0.0.5"},
              {"dst_port", "5044"}},
             "3");
        if (at >= duration) break;
    }

    std::stable_sort(events.begin(), events.end(),
                     [](const LogEvent& a, const LogEvent& b) { return a.timestamp < b.timestamp; });
    return Run{std::move(run_id), label, std::move(events)};
}

} // namespace detail

/// Labels are dealt by a seeded shuffle; run i is generated from
/// derive_seed(seed, i), so serial and parallel generation agree.
inline std::vector<Run> generate(const GenConfig& config) {
    validate(config);
    const std::size_t n = config.n_runs;
    std::vector<Label> labels(n, Label::Benign);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(anomalous_run_count(config)),
              Label::Anomalous);
    Rng label_rng(derive_seed(config.seed, ~std::uint64_t{0}));
    label_rng.shuffle(std::span<Label>(labels));

    std::vector<Run> runs(n);
    parallel_for(n, config.jobs, [&](std::size_t i) {
        const auto& prof = labels[i] == Label::Anomalous ? config.anomalous : config.benign;
        runs[i] = detail::generate_run(run_id_for(i, n), labels[i], prof, config.run_duration,
                                       derive_seed(config.seed, i));
    });
    return runs;
}

/// Writes one `<run_id>.jsonl` per run plus `manifest.json`.
inline void write_dataset(const std::vector<Run>& runs, const GenConfig& config, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json manifest;
    manifest["config"] = to_json(config);
    nlohmann::ordered_json index = nlohmann::ordered_json::array();
    for (const auto& run : runs) {
        const std::string file = run.run_id + ".jsonl";
        std::ofstream out(dir / file, std::ios::binary);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / file).string());
        out << serialize_run(run);
        nlohmann::ordered_json entry;
        entry["run_id"] = run.run_id;
        entry["label"] = to_string(run.label);
        entry["file"] = file;
        entry["events"] = run.events.size();
        index.push_back(std::move(entry));
    }
    manifest["runs"] = std::move(index);
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write manifest");
    out << manifest.dump(2) << '\n';
}

} // namespace topolog
