// Validation statistics: per-bin moments, autocorrelation, replicate
// confidence bands and the raw-versus-model comparison protocol.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wlhmm/cluster.hpp"
#include "wlhmm/hmm.hpp"
#include "wlhmm/trace.hpp"

namespace wlhmm {

class StatsError : public std::runtime_error {
public:
    enum class Kind { TooFewBins, ZeroVariance, TooFewReplicates, InvalidArgument };
    StatsError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct StatsReport {
    double read_mean = 0;
    double read_std = 0;
    double write_mean = 0;
    double write_std = 0;
    std::optional<double> rw_correlation;  // undefined when either series is constant
    std::vector<double> acf_reads;         // lags 1..L
    std::vector<double> acf_writes;
};

struct ConfidenceBand {
    double mean = 0;
    double lo = 0;
    double hi = 0;
    double level = 0.95;
    int batches = 0;

    bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Sample means, standard deviations (n-1) and Pearson read/write correlation.
StatsReport summary(const BinnedTrace& binned);

/// rho(h) = sum_t (x_t - m)(x_{t+h} - m) / sum_t (x_t - m)^2, h = 1..max_lag.
std::vector<double> acf(std::span<const double> series, int max_lag);

/// Two-sided Student-t quantile t_{p, dof}.
double student_t_quantile(double p, double dof);

/// mean +- t_{(1+level)/2, k-1} s / sqrt(k) over k replicate values.
ConfidenceBand batch_means_ci(std::span<const double> values, double level = 0.95);

struct ValidateOptions {
    int replicates = 10;
    double level = 0.95;
    int max_lag = 100;
    std::uint64_t seed = 0;
    std::size_t length = 0;  // 0: raw trace length
};

struct MetricCheck {
    std::string name;
    std::optional<double> raw;
    ConfidenceBand band;
    bool inside = false;
};

struct ValidationReport {
    StatsReport raw;
    std::vector<StatsReport> replicates;
    std::vector<MetricCheck> metrics;  // read_mean, read_std, write_mean, write_std, rw_correlation
    std::vector<double> acf_reads_hmm;  // pooled over replicates
    std::vector<double> acf_writes_hmm;

    const MetricCheck& metric(const std::string& name) const;
    bool all_inside() const;
};

ValidationReport validate(const BinnedTrace& raw, const Hmm& hmm, const ClusterModel& clusters,
                          const ValidateOptions& opts);

}  // namespace wlhmm
