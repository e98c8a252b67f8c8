#include "wlhmm/qsim.hpp"

#include <algorithm>
#include <deque>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>

#include "wlhmm/random.hpp"
#include "wlhmm/synth.hpp"

namespace wlhmm {

std::string to_string(Scheme scheme)
{
    switch (scheme) {
    case Scheme::NoPriority: return "no_priority";
    case Scheme::NonPreemptiveRead: return "nonpreemptive_read";
    case Scheme::PreemptiveRead: return "preemptive_read";
    }
    return "?";
}

std::string to_string(OpClass cls)
{
    switch (cls) {
    case OpClass::Read: return "read";
    case OpClass::Write: return "write";
    case OpClass::Erase: return "erase";
    }
    return "?";
}

Scheme parse_scheme(const std::string& name)
{
    if (name == "none" || name == "no_priority")
        return Scheme::NoPriority;
    if (name == "nonpreemptive" || name == "nonpreemptive_read")
        return Scheme::NonPreemptiveRead;
    if (name == "preemptive" || name == "preemptive_read")
        return Scheme::PreemptiveRead;
    throw std::invalid_argument("unknown scheme '" + name + "'");
}

namespace {

class ListSource {
public:
    explicit ListSource(std::span<const Arrival> arrivals) : arrivals_(arrivals) {}
    const Arrival* peek() const { return pos_ < arrivals_.size() ? &arrivals_[pos_] : nullptr; }
    void pop() { ++pos_; }

private:
    std::span<const Arrival> arrivals_;
    std::size_t pos_ = 0;
};

/// Expands bins into per-block arrivals lazily, one bin at a time.
class BinSource {
public:
    BinSource(const BinnedTrace& binned, const QueueSimConfig& cfg)
        : binned_(binned), cfg_(cfg), rng_(make_rng(cfg.seed)) { fill(); }

    const Arrival* peek() const { return pos_ < buffer_.size() ? &buffer_[pos_] : nullptr; }
    void pop()
    {
        if (++pos_ >= buffer_.size())
            fill();
    }
    std::size_t writes() const { return writes_; }
    std::size_t erases() const { return erases_; }

private:
    void fill()
    {
        buffer_.clear();
        pos_ = 0;
        while (buffer_.empty() && bin_ < binned_.size()) {
            const auto& b = binned_.bins[bin_];
            const double start = static_cast<double>(bin_) * static_cast<double>(binned_.bin_width_us);
            for (std::int64_t i = 0; i < b.reads; ++i)
                buffer_.push_back({start, OpClass::Read, cfg_.service.read_us});
            for (std::int64_t i = 0; i < b.writes; ++i) {
                buffer_.push_back({start, OpClass::Write, cfg_.service.write_us});
                if (++writes_ % static_cast<std::size_t>(cfg_.erase_per_writes) == 0) {
                    buffer_.push_back({start, OpClass::Erase, cfg_.service.erase_us});
                    ++erases_;
                }
            }
            if (cfg_.spread == ArrivalSpread::UniformInBin) {
                std::uniform_real_distribution<double> offset(0.0, static_cast<double>(binned_.bin_width_us));
                for (auto& a : buffer_)
                    a.time_us = start + offset(rng_);
                std::stable_sort(buffer_.begin(), buffer_.end(),
                                 [](const Arrival& x, const Arrival& y) { return x.time_us < y.time_us; });
            }
            ++bin_;
        }
    }

    const BinnedTrace& binned_;
    const QueueSimConfig& cfg_;
    Rng rng_;
    std::vector<Arrival> buffer_;
    std::size_t pos_ = 0;
    std::size_t bin_ = 0;
    std::size_t writes_ = 0;
    std::size_t erases_ = 0;
};

struct Job {
    double arrival = 0;
    double remaining = 0;
    OpClass cls = OpClass::Read;
    bool started = false;
    std::size_t seq = 0;
};

template <typename Source>
QueueRunResult run(Source& source, Scheme scheme, bool record_waits, std::size_t queue_cap)
{
    QueueRunResult res;
    std::array<double, 3> wait_sum{};
    std::deque<Job> reads;   // used only under read-priority schemes
    std::deque<Job> others;  // FCFS queue (all jobs under NoPriority)
    std::optional<Job> current;
    double t = 0;
    std::size_t seq = 0;
    const bool priority = scheme != Scheme::NoPriority;
    const bool preempt = scheme == Scheme::PreemptiveRead;

    auto admit = [&](double until) {
        while (const Arrival* a = source.peek()) {
            if (a->time_us > until)
                break;
            Job j{a->time_us, a->service_us, a->cls, false, seq++};
            res.demand_us += a->service_us;
            (priority && j.cls == OpClass::Read ? reads : others).push_back(j);
            source.pop();
        }
        const auto waiting = reads.size() + others.size();
        res.max_queue = std::max(res.max_queue, waiting);
        if (waiting > queue_cap && !res.unstable) {
            res.unstable = true;
            std::clog << "wlhmm: queue exceeded " << queue_cap << " waiting jobs; offered load exceeds capacity\n";
        }
    };
    auto start = [&](Job j) {
        if (!j.started) {
            const double w = t - j.arrival;
            wait_sum[static_cast<std::size_t>(j.cls)] += w;
            ++res.classes[static_cast<std::size_t>(j.cls)].count;
            if (record_waits) {
                if (res.waits_us.size() <= j.seq)
                    res.waits_us.resize(j.seq + 1, 0.0);
                res.waits_us[j.seq] = w;
            }
            j.started = true;
        }
        current = j;
    };

    for (;;) {
        if (!current) {
            admit(t);
            if (reads.empty() && others.empty()) {
                const Arrival* a = source.peek();
                if (!a)
                    break;
                t = std::max(t, a->time_us);
                admit(t);
            }
            auto& q = (!reads.empty()) ? reads : others;
            Job j = q.front();
            q.pop_front();
            start(j);
            continue;
        }
        const double finish = t + current->remaining;
        const Arrival* a = source.peek();
        if (a && a->time_us < finish) {
            const double dt = a->time_us - t;
            current->remaining -= dt;
            res.busy_us += dt;
            t = a->time_us;
            admit(t);
            if (preempt && current->cls != OpClass::Read && !reads.empty()) {
                others.push_front(*current);
                current.reset();
            }
        } else {
            res.busy_us += current->remaining;
            t = finish;
            current.reset();
        }
    }

    for (std::size_t c = 0; c < 3; ++c)
        if (res.classes[c].count > 0)
            res.classes[c].mean_queueing_ms = wait_sum[c] / static_cast<double>(res.classes[c].count) / 1000.0;
    res.writes = res.classes[static_cast<std::size_t>(OpClass::Write)].count;
    res.erases = res.classes[static_cast<std::size_t>(OpClass::Erase)].count;
    return res;
}

}  // namespace

QueueRunResult simulate_queue(const BinnedTrace& binned, const QueueSimConfig& cfg)
{
    if (binned.empty())
        throw std::invalid_argument("binned trace is empty");
    if (!(cfg.service.read_us > 0 && cfg.service.write_us > 0 && cfg.service.erase_us > 0))
        throw std::invalid_argument("service times must be positive");
    if (cfg.erase_per_writes < 1)
        throw std::invalid_argument("erase_per_writes must be at least 1");
    BinSource source(binned, cfg);
    auto res = run(source, cfg.scheme, false, cfg.queue_cap);
    const double horizon = static_cast<double>(binned.size()) * static_cast<double>(binned.bin_width_us);
    res.utilization = horizon > 0 ? res.demand_us / horizon : 0.0;
    return res;
}

QueueRunResult simulate_arrivals(std::span<const Arrival> arrivals, Scheme scheme, bool record_waits,
                                 std::size_t queue_cap)
{
    for (std::size_t i = 1; i < arrivals.size(); ++i)
        if (arrivals[i].time_us < arrivals[i - 1].time_us)
            throw std::invalid_argument("arrivals must be sorted by time");
    ListSource source(arrivals);
    auto res = run(source, scheme, record_waits, queue_cap);
    const double horizon = arrivals.empty() ? 0.0 : arrivals.back().time_us;
    res.utilization = horizon > 0 ? res.demand_us / horizon : 0.0;
    return res;
}

std::vector<SchemeComparison> compare_raw_vs_hmm(const BinnedTrace& raw, const Hmm& hmm, const ClusterModel& clusters,
                                                 const QueueSimConfig& cfg, const CompareOptions& opts)
{
    if (opts.replicates < 2)
        throw StatsError(StatsError::Kind::TooFewReplicates, "comparison needs at least two replicates");

    std::vector<BinnedTrace> synthetic;
    GenConfig gen;
    gen.length = raw.size();
    gen.bin_width_us = raw.bin_width_us;
    for (int i = 0; i < opts.replicates; ++i) {
        gen.seed = derive_seed(opts.seed, static_cast<std::uint64_t>(i));
        synthetic.push_back(generate_trace(hmm, clusters, gen));
    }

    std::vector<SchemeComparison> out;
    for (Scheme scheme : opts.schemes) {
        QueueSimConfig c = cfg;
        c.scheme = scheme;
        SchemeComparison cmp;
        cmp.scheme = scheme;
        const auto raw_run = simulate_queue(raw, c);
        cmp.raw_utilization = raw_run.utilization;
        for (std::size_t k = 0; k < 3; ++k)
            cmp.classes[k].raw = raw_run.classes[k].mean_queueing_ms;
        for (std::size_t i = 0; i < synthetic.size(); ++i) {
            c.seed = derive_seed(cfg.seed, i + 1);
            const auto r = simulate_queue(synthetic[i], c);
            for (std::size_t k = 0; k < 3; ++k)
                cmp.classes[k].hmm.push_back(r.classes[k].mean_queueing_ms);
        }
        for (auto& cls : cmp.classes) {
            cls.band = batch_means_ci(cls.hmm, opts.level);
            cls.inside = cls.band.contains(cls.raw);
        }
        out.push_back(std::move(cmp));
    }
    return out;
}

}  // namespace wlhmm
