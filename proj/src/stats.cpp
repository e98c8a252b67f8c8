#include "wlhmm/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "wlhmm/random.hpp"
#include "wlhmm/synth.hpp"

namespace wlhmm {

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

/// ACF or an empty array when the series is constant.
std::vector<double> acf_or_empty(const Eigen::VectorXd& v, int max_lag)
{
    if (max_lag < 1 || v.size() <= max_lag)
        return {};
    try {
        auto x = to_vector(v);
        return acf(x, max_lag);
    } catch (const StatsError&) {
        return {};
    }
}

}  // namespace

StatsReport summary(const BinnedTrace& binned)
{
    if (binned.size() < 2)
        throw StatsError(StatsError::Kind::TooFewBins, "summary needs at least two bins");
    const Eigen::VectorXd r = binned.reads();
    const Eigen::VectorXd w = binned.writes();
    const double n = static_cast<double>(binned.size());

    StatsReport s;
    s.read_mean = r.mean();
    s.write_mean = w.mean();
    const Eigen::ArrayXd dr = r.array() - s.read_mean;
    const Eigen::ArrayXd dw = w.array() - s.write_mean;
    const double srr = dr.square().sum();
    const double sww = dw.square().sum();
    s.read_std = std::sqrt(srr / (n - 1));
    s.write_std = std::sqrt(sww / (n - 1));
    if (srr > 0 && sww > 0)
        s.rw_correlation = std::clamp((dr * dw).sum() / std::sqrt(srr * sww), -1.0, 1.0);
    return s;
}

std::vector<double> acf(std::span<const double> series, int max_lag)
{
    const auto n = series.size();
    if (max_lag < 1 || n <= static_cast<std::size_t>(max_lag))
        throw StatsError(StatsError::Kind::InvalidArgument, "need 1 <= max_lag < series length");
    const Eigen::Map<const Eigen::ArrayXd> x(series.data(), static_cast<Eigen::Index>(n));
    const Eigen::ArrayXd d = x - x.mean();
    const double denom = d.square().sum();
    if (!(denom > 0))
        throw StatsError(StatsError::Kind::ZeroVariance, "series has zero variance");
    std::vector<double> rho(static_cast<std::size_t>(max_lag));
    const auto len = static_cast<Eigen::Index>(n);
    for (Eigen::Index h = 1; h <= max_lag; ++h)
        rho[static_cast<std::size_t>(h - 1)] = (d.head(len - h) * d.tail(len - h)).sum() / denom;
    return rho;
}

double student_t_quantile(double p, double dof)
{
    boost::math::students_t dist(dof);
    return boost::math::quantile(dist, p);
}

ConfidenceBand batch_means_ci(std::span<const double> values, double level)
{
    if (values.size() < 2)
        throw StatsError(StatsError::Kind::TooFewReplicates, "confidence band needs at least two replicates");
    if (!(level > 0 && level < 1))
        throw StatsError(StatsError::Kind::InvalidArgument, "level must lie in (0, 1)");
    const Eigen::Map<const Eigen::ArrayXd> x(values.data(), static_cast<Eigen::Index>(values.size()));
    const double k = static_cast<double>(values.size());
    ConfidenceBand band;
    band.mean = x.mean();
    band.level = level;
    band.batches = static_cast<int>(values.size());
    const double s = std::sqrt((x - band.mean).square().sum() / (k - 1));
    const double half = student_t_quantile(0.5 + level / 2, k - 1) * s / std::sqrt(k);
    band.lo = band.mean - half;
    band.hi = band.mean + half;
    return band;
}

const MetricCheck& ValidationReport::metric(const std::string& name) const
{
    for (const auto& m : metrics)
        if (m.name == name)
            return m;
    throw std::out_of_range("no metric named " + name);
}

bool ValidationReport::all_inside() const
{
    return std::all_of(metrics.begin(), metrics.end(), [](const auto& m) { return m.inside; });
}

ValidationReport validate(const BinnedTrace& raw, const Hmm& hmm, const ClusterModel& clusters,
                          const ValidateOptions& opts)
{
    if (opts.replicates < 2)
        throw StatsError(StatsError::Kind::TooFewReplicates, "validation needs at least two replicates");

    ValidationReport report;
    report.raw = summary(raw);
    report.raw.acf_reads = acf_or_empty(raw.reads(), opts.max_lag);
    report.raw.acf_writes = acf_or_empty(raw.writes(), opts.max_lag);

    GenConfig cfg;
    cfg.length = opts.length ? opts.length : raw.size();
    cfg.bin_width_us = raw.bin_width_us;
    for (int i = 0; i < opts.replicates; ++i) {
        cfg.seed = derive_seed(opts.seed, static_cast<std::uint64_t>(i));
        const auto trace = generate_trace(hmm, clusters, cfg);
        auto s = summary(trace);
        s.acf_reads = acf_or_empty(trace.reads(), opts.max_lag);
        s.acf_writes = acf_or_empty(trace.writes(), opts.max_lag);
        report.replicates.push_back(std::move(s));
    }

    auto check = [&](const std::string& name, std::optional<double> raw_value, auto field) {
        std::vector<double> values;
        for (const auto& s : report.replicates)
            if (auto v = field(s))
                values.push_back(*v);
        MetricCheck m;
        m.name = name;
        m.raw = raw_value;
        if (values.size() >= 2) {
            m.band = batch_means_ci(values, opts.level);
            m.inside = raw_value && m.band.contains(*raw_value);
        } else {
            m.band.level = opts.level;
            m.band.batches = static_cast<int>(values.size());
        }
        report.metrics.push_back(m);
    };
    using O = std::optional<double>;
    check("read_mean", report.raw.read_mean, [](const StatsReport& s) { return O(s.read_mean); });
    check("read_std", report.raw.read_std, [](const StatsReport& s) { return O(s.read_std); });
    check("write_mean", report.raw.write_mean, [](const StatsReport& s) { return O(s.write_mean); });
    check("write_std", report.raw.write_std, [](const StatsReport& s) { return O(s.write_std); });
    check("rw_correlation", report.raw.rw_correlation, [](const StatsReport& s) { return s.rw_correlation; });

    auto pool = [&](auto member) {
        std::vector<double> pooled;
        std::size_t used = 0;
        for (const auto& s : report.replicates) {
            const auto& a = s.*member;
            if (a.empty())
                continue;
            pooled.resize(a.size(), 0.0);
            for (std::size_t h = 0; h < a.size(); ++h)
                pooled[h] += a[h];
            ++used;
        }
        for (auto& v : pooled)
            v /= static_cast<double>(used);
        return pooled;
    };
    report.acf_reads_hmm = pool(&StatsReport::acf_reads);
    report.acf_writes_hmm = pool(&StatsReport::acf_writes);
    return report;
}

}  // namespace wlhmm
