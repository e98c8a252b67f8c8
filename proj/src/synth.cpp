#include "wlhmm/synth.hpp"

#include <iostream>
#include <stdexcept>
#include <vector>

#include "wlhmm/random.hpp"

namespace wlhmm {

Eigen::Matrix2d covariance_factor(const ClusterStats& stats)
{
    const double sr = stats.std.x();
    const double sw = stats.std.y();
    double cov = stats.cov_rw;
    if (cov * cov > sr * sr * sw * sw)
        cov = 0;
    Eigen::Matrix2d L = Eigen::Matrix2d::Zero();
    L(0, 0) = sr;
    if (sr > 0) {
        L(1, 0) = cov / sr;
        L(1, 1) = std::sqrt(std::max(0.0, sw * sw - L(1, 0) * L(1, 0)));
    } else {
        L(1, 1) = sw;
    }
    return L;
}

BinnedTrace generate_trace(const Hmm& hmm, const ClusterModel& clusters, const GenConfig& cfg,
                           GenDiagnostics* diagnostics)
{
    if (cfg.length < 1)
        throw std::invalid_argument("generated trace length must be at least 1");
    if (hmm.symbols() != clusters.size())
        throw std::invalid_argument("HMM alphabet size does not match the cluster count");

    const auto path = simulate(hmm, cfg.length, derive_seed(cfg.seed, 0));
    std::vector<Eigen::Matrix2d> factors;
    for (const auto& c : clusters.clusters)
        factors.push_back(covariance_factor(c));

    auto rng = make_rng(cfg.seed, 1);
    BinnedTrace out;
    out.bin_width_us = cfg.bin_width_us;
    out.bins.reserve(cfg.length);
    std::size_t clamped = 0;
    for (int s : path.observations.obs) {
        const auto idx = static_cast<std::size_t>(s);
        auto draw = sample_bin(clusters.clusters[idx], factors[idx], rng, cfg.max_rejections);
        clamped += draw.clamped ? 1 : 0;
        out.bins.push_back(draw.bin);
    }
    if (clamped > 0)
        std::clog << "wlhmm: rejection budget exceeded for " << clamped << " of " << cfg.length
                  << " bins; clamped at zero\n";
    if (diagnostics)
        diagnostics->clamped = clamped;
    return out;
}

}  // namespace wlhmm
