// Synthetic binned traces from a fitted (HMM, cluster model) pair.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>

#include <Eigen/Core>

#include "wlhmm/cluster.hpp"
#include "wlhmm/hmm.hpp"
#include "wlhmm/trace.hpp"

namespace wlhmm {

struct GenConfig {
    std::size_t length = 0;
    std::uint64_t seed = 0;
    int max_rejections = 1000;
    std::int64_t bin_width_us = 5000;
};

struct SampledBin {
    Bin bin;
    bool clamped = false;  // rejection budget ran out; components clamped at zero
};

/// Lower-triangular factor of the cluster covariance. A covariance that is not
/// positive semi-definite has its read/write term dropped.
Eigen::Matrix2d covariance_factor(const ClusterStats& stats);

/// Draws a bin from N(centroid, covariance) truncated to the non-negative
/// quadrant by rejection, rounded half-up.
template <typename Generator>
SampledBin sample_bin(const ClusterStats& stats, const Eigen::Matrix2d& factor, Generator& rng, int max_rejections)
{
    auto round_half_up = [](double x) { return static_cast<std::int64_t>(std::floor(x + 0.5)); };
    if (stats.singleton_zero)
        return {};
    std::normal_distribution<double> z;
    Eigen::Vector2d x = stats.centroid;
    for (int attempt = 0; attempt < max_rejections; ++attempt) {
        x = stats.centroid + factor * Eigen::Vector2d(z(rng), z(rng));
        if (x.x() >= 0 && x.y() >= 0)
            return {{round_half_up(x.x()), round_half_up(x.y())}, false};
    }
    x = x.cwiseMax(0.0);
    return {{round_half_up(x.x()), round_half_up(x.y())}, true};
}

template <typename Generator>
SampledBin sample_bin(const ClusterStats& stats, Generator& rng, int max_rejections = 1000)
{
    return sample_bin(stats, covariance_factor(stats), rng, max_rejections);
}

struct GenDiagnostics {
    std::size_t clamped = 0;
};

/// Simulates the HMM for `cfg.length` bins and samples each bin from its cluster.
BinnedTrace generate_trace(const Hmm& hmm, const ClusterModel& clusters, const GenConfig& cfg,
                           GenDiagnostics* diagnostics = nullptr);

}  // namespace wlhmm
