// Single-server queueing simulation of a Flash chip fed by binned traces.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wlhmm/cluster.hpp"
#include "wlhmm/hmm.hpp"
#include "wlhmm/stats.hpp"
#include "wlhmm/trace.hpp"

namespace wlhmm {

enum class Scheme { NoPriority, NonPreemptiveRead, PreemptiveRead };
enum class ArrivalSpread { BinStart, UniformInBin };
enum class OpClass { Read = 0, Write = 1, Erase = 2 };

std::string to_string(Scheme scheme);
std::string to_string(OpClass cls);
Scheme parse_scheme(const std::string& name);

struct ServiceTimes {
    double read_us = 0;   // per block
    double write_us = 0;  // per block
    double erase_us = 0;  // per erase
};

struct QueueSimConfig {
    ServiceTimes service;
    Scheme scheme = Scheme::NoPriority;
    int erase_per_writes = 64;
    ArrivalSpread spread = ArrivalSpread::BinStart;
    std::uint64_t seed = 0;
    std::size_t queue_cap = 10'000'000;  // waiting jobs before the run is flagged unstable
};

struct Arrival {
    double time_us = 0;
    OpClass cls = OpClass::Read;
    double service_us = 0;
};

struct ClassResult {
    double mean_queueing_ms = 0;
    std::size_t count = 0;
};

struct QueueRunResult {
    std::array<ClassResult, 3> classes;  // indexed by OpClass
    double utilization = 0;
    double busy_us = 0;
    double demand_us = 0;
    std::size_t writes = 0;
    std::size_t erases = 0;
    std::size_t max_queue = 0;
    bool unstable = false;

    const ClassResult& operator[](OpClass c) const { return classes[static_cast<std::size_t>(c)]; }
    /// Queueing time (service start minus arrival) per job, in submission order; only filled on request.
    std::vector<double> waits_us;
};

/// Each bin's read and write blocks become one job per block; one erase is
/// injected after every `erase_per_writes`-th write. Preemption is resume.
QueueRunResult simulate_queue(const BinnedTrace& binned, const QueueSimConfig& cfg);

/// Same engine over an explicit arrival list (sorted by time; ties keep list order).
QueueRunResult simulate_arrivals(std::span<const Arrival> arrivals, Scheme scheme, bool record_waits = false,
                                 std::size_t queue_cap = 10'000'000);

struct ClassComparison {
    double raw = 0;
    std::vector<double> hmm;
    ConfidenceBand band;
    bool inside = false;
};

struct SchemeComparison {
    Scheme scheme = Scheme::NoPriority;
    std::array<ClassComparison, 3> classes;
    double raw_utilization = 0;
};

struct CompareOptions {
    int replicates = 10;
    double level = 0.95;
    std::uint64_t seed = 0;
    std::vector<Scheme> schemes{Scheme::NoPriority, Scheme::NonPreemptiveRead, Scheme::PreemptiveRead};
};

/// Runs every scheme on the raw trace and on `replicates` model-generated traces.
std::vector<SchemeComparison> compare_raw_vs_hmm(const BinnedTrace& raw, const Hmm& hmm, const ClusterModel& clusters,
                                                 const QueueSimConfig& cfg, const CompareOptions& opts);

}  // namespace wlhmm
