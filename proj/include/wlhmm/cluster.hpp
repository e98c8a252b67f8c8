// Observation alphabet built from binned (reads, writes) points.
#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "wlhmm/observation.hpp"
#include "wlhmm/trace.hpp"

namespace wlhmm {

struct ClusterStats {
    int id = 0;
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();  // (reads, writes) per bin
    Eigen::Vector2d std = Eigen::Vector2d::Zero();
    double cov_rw = 0;
    std::size_t count = 0;
    bool singleton_zero = false;

    Eigen::Matrix2d covariance() const
    {
        Eigen::Matrix2d c;
        c << std.x() * std.x(), cov_rw, cov_rw, std.y() * std.y();
        return c;
    }
};

/// k-means over the joint (reads, writes) plane.
struct JointMode {
    int k = 1;
};

/// Independent 1-D k-means on reads and on writes; the alphabet is the
/// product of the two partitions. Levels are filled in by fitting.
struct ProductMode {
    int k_read = 1;
    int k_write = 1;
    std::vector<double> read_levels;
    std::vector<double> write_levels;
};

using ClusterMode = std::variant<JointMode, ProductMode>;

struct ClusterModel {
    std::vector<ClusterStats> clusters;
    ClusterMode mode = JointMode{};
    bool zero_singleton = false;  // cluster 0 is the reserved (0,0) singleton

    int size() const { return static_cast<int>(clusters.size()); }
};

class ClusterError : public std::runtime_error {
public:
    enum class Kind { TooFewDistinctPoints, InvalidArgument };
    ClusterError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct KMeansResult {
    Eigen::MatrixXd centroids;  // k x d
    std::vector<int> labels;
    std::vector<double> sse_history;  // weighted SSE after each assignment pass
    int iterations = 0;
};

/// Weighted Lloyd k-means with k-means++ seeding. Rows of `points` are
/// observations. Equidistant points go to the lowest centroid index; empty
/// clusters are re-seeded with the point farthest from its centroid.
KMeansResult kmeans(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights, int k, std::uint64_t seed,
                    int max_iter = 300);

ClusterModel fit_clusters(const BinnedTrace& binned, const ClusterMode& mode, bool reserve_zero_singleton,
                          std::uint64_t seed);

/// Observation id for a point. Joint mode: nearest centroid. Product mode:
/// nearest read level crossed with nearest write level.
int assign(const ClusterModel& model, const Eigen::Vector2d& point);

ObservationSequence observation_sequence(const ClusterModel& model, const BinnedTrace& binned);

}  // namespace wlhmm
