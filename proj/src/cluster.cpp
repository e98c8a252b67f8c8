#include "wlhmm/cluster.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <utility>

#include "wlhmm/random.hpp"

namespace wlhmm {

namespace {

int nearest(const Eigen::MatrixXd& centroids, const Eigen::RowVectorXd& x, double* dist = nullptr)
{
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
        const double d = (centroids.row(c) - x).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    if (dist)
        *dist = best_d;
    return best;
}

int nearest_level(const std::vector<double>& levels, double x)
{
    int best = 0;
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (std::abs(levels[i] - x) < std::abs(levels[static_cast<std::size_t>(best)] - x))
            best = static_cast<int>(i);
    return best;
}

/// Distinct points with multiplicities.
struct Weighted {
    Eigen::MatrixXd points;
    Eigen::VectorXd weights;
};

Weighted dedupe(const std::vector<Eigen::RowVectorXd>& rows)
{
    std::map<std::vector<double>, double> counts;
    for (const auto& r : rows)
        counts[std::vector<double>(r.data(), r.data() + r.size())] += 1.0;
    Weighted w;
    const auto d = rows.empty() ? 0 : rows.front().size();
    w.points.resize(static_cast<Eigen::Index>(counts.size()), d);
    w.weights.resize(static_cast<Eigen::Index>(counts.size()));
    Eigen::Index i = 0;
    for (const auto& [p, c] : counts) {
        w.points.row(i) = Eigen::Map<const Eigen::RowVectorXd>(p.data(), d);
        w.weights(i) = c;
        ++i;
    }
    return w;
}

/// Sorted 1-D k-means levels.
std::vector<double> levels_1d(const std::vector<double>& values, int k, std::uint64_t seed)
{
    std::vector<Eigen::RowVectorXd> rows;
    rows.reserve(values.size());
    for (double v : values)
        rows.push_back(Eigen::RowVectorXd::Constant(1, v));
    auto w = dedupe(rows);
    if (w.points.rows() < k)
        throw ClusterError(ClusterError::Kind::TooFewDistinctPoints,
                           "fewer distinct values than requested levels");
    auto km = kmeans(w.points, w.weights, k, seed);
    std::vector<double> levels(km.centroids.data(), km.centroids.data() + km.centroids.rows());
    std::sort(levels.begin(), levels.end());
    return levels;
}

void compute_stats(ClusterModel& model, const BinnedTrace& binned)
{
    const auto m = model.clusters.size();
    std::vector<Eigen::Vector2d> sum(m, Eigen::Vector2d::Zero());
    std::vector<std::size_t> count(m, 0);
    std::vector<int> label(binned.size());
    for (std::size_t i = 0; i < binned.size(); ++i) {
        const Eigen::Vector2d p(static_cast<double>(binned.bins[i].reads), static_cast<double>(binned.bins[i].writes));
        label[i] = assign(model, p);
        sum[static_cast<std::size_t>(label[i])] += p;
        ++count[static_cast<std::size_t>(label[i])];
    }
    std::vector<Eigen::Matrix2d> scatter(m, Eigen::Matrix2d::Zero());
    for (std::size_t c = 0; c < m; ++c)
        if (count[c] > 0)
            model.clusters[c].centroid = sum[c] / static_cast<double>(count[c]);
    for (std::size_t i = 0; i < binned.size(); ++i) {
        const auto c = static_cast<std::size_t>(label[i]);
        const Eigen::Vector2d d =
            Eigen::Vector2d(static_cast<double>(binned.bins[i].reads), static_cast<double>(binned.bins[i].writes)) -
            model.clusters[c].centroid;
        scatter[c] += d * d.transpose();
    }
    for (std::size_t c = 0; c < m; ++c) {
        auto& s = model.clusters[c];
        s.count = count[c];
        if (s.singleton_zero || count[c] < 2) {
            s.std.setZero();
            s.cov_rw = 0;
            continue;
        }
        const Eigen::Matrix2d cov = scatter[c] / static_cast<double>(count[c] - 1);
        s.std = cov.diagonal().cwiseSqrt();
        s.cov_rw = cov(0, 1);
    }
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights, int k, std::uint64_t seed,
                    int max_iter)
{
    const auto n = points.rows();
    if (k < 1 || weights.size() != n)
        throw ClusterError(ClusterError::Kind::InvalidArgument, "k must be positive and weights match points");
    if (n < k)
        throw ClusterError(ClusterError::Kind::TooFewDistinctPoints, "fewer points than clusters");

    auto rng = make_rng(seed);
    KMeansResult res;
    res.centroids.resize(k, points.cols());

    // k-means++ seeding
    std::vector<double> w(weights.data(), weights.data() + n);
    std::discrete_distribution<Eigen::Index> first(w.begin(), w.end());
    res.centroids.row(0) = points.row(first(rng));
    Eigen::VectorXd d2(n);
    for (Eigen::Index i = 0; i < n; ++i)
        d2(i) = (points.row(i) - res.centroids.row(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
        const Eigen::VectorXd score = d2.cwiseProduct(weights);
        Eigen::Index pick = 0;
        if (score.sum() > 0) {
            std::discrete_distribution<Eigen::Index> next(score.data(), score.data() + n);
            pick = next(rng);
        } else {
            score.maxCoeff(&pick);
        }
        res.centroids.row(c) = points.row(pick);
        for (Eigen::Index i = 0; i < n; ++i)
            d2(i) = std::min(d2(i), (points.row(i) - res.centroids.row(c)).squaredNorm());
    }

    res.labels.assign(static_cast<std::size_t>(n), -1);
    Eigen::VectorXd dist(n);
    for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
        bool changed = false;
        double sse = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const int c = nearest(res.centroids, points.row(i), &dist(i));
            sse += weights(i) * dist(i);
            if (c != res.labels[static_cast<std::size_t>(i)]) {
                res.labels[static_cast<std::size_t>(i)] = c;
                changed = true;
            }
        }

        // Re-seed empty clusters with the farthest point.
        Eigen::VectorXd mass = Eigen::VectorXd::Zero(k);
        for (Eigen::Index i = 0; i < n; ++i)
            mass(res.labels[static_cast<std::size_t>(i)]) += weights(i);
        for (int c = 0; c < k; ++c) {
            if (mass(c) > 0)
                continue;
            Eigen::Index far = 0;
            dist.maxCoeff(&far);
            mass(res.labels[static_cast<std::size_t>(far)]) -= weights(far);
            sse -= weights(far) * dist(far);
            res.labels[static_cast<std::size_t>(far)] = c;
            mass(c) += weights(far);
            dist(far) = 0;
            changed = true;
        }
        res.sse_history.push_back(sse);
        if (!changed)
            break;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
        for (Eigen::Index i = 0; i < n; ++i)
            sums.row(res.labels[static_cast<std::size_t>(i)]) += weights(i) * points.row(i);
        for (int c = 0; c < k; ++c)
            res.centroids.row(c) = sums.row(c) / mass(c);
    }
    return res;
}

ClusterModel fit_clusters(const BinnedTrace& binned, const ClusterMode& mode, bool reserve_zero_singleton,
                          std::uint64_t seed)
{
    if (binned.empty())
        throw ClusterError(ClusterError::Kind::InvalidArgument, "binned trace is empty");

    std::vector<Bin> points;
    points.reserve(binned.size());
    for (const auto& b : binned.bins)
        if (!(reserve_zero_singleton && b.reads == 0 && b.writes == 0))
            points.push_back(b);

    ClusterModel model;
    model.zero_singleton = reserve_zero_singleton;
    if (reserve_zero_singleton) {
        ClusterStats zero;
        zero.singleton_zero = true;
        model.clusters.push_back(zero);
    }

    if (const auto* joint = std::get_if<JointMode>(&mode)) {
        if (joint->k < 1)
            throw ClusterError(ClusterError::Kind::InvalidArgument, "k must be positive");
        std::vector<Eigen::RowVectorXd> rows;
        rows.reserve(points.size());
        for (const auto& b : points)
            rows.push_back(Eigen::RowVector2d(static_cast<double>(b.reads), static_cast<double>(b.writes)));
        auto w = dedupe(rows);
        if (w.points.rows() < joint->k)
            throw ClusterError(ClusterError::Kind::TooFewDistinctPoints,
                               "fewer distinct points than requested clusters");
        auto km = kmeans(w.points, w.weights, joint->k, seed);
        std::vector<Eigen::Vector2d> centroids;
        for (Eigen::Index c = 0; c < km.centroids.rows(); ++c)
            centroids.emplace_back(km.centroids(c, 0), km.centroids(c, 1));
        std::sort(centroids.begin(), centroids.end(), [](const auto& a, const auto& b) {
            return std::pair(a.x(), a.y()) < std::pair(b.x(), b.y());
        });
        for (const auto& c : centroids) {
            ClusterStats s;
            s.centroid = c;
            model.clusters.push_back(s);
        }
        model.mode = *joint;
    } else {
        auto product = std::get<ProductMode>(mode);
        if (product.k_read < 1 || product.k_write < 1)
            throw ClusterError(ClusterError::Kind::InvalidArgument, "level counts must be positive");
        std::vector<double> r, w;
        r.reserve(points.size());
        w.reserve(points.size());
        for (const auto& b : points) {
            r.push_back(static_cast<double>(b.reads));
            w.push_back(static_cast<double>(b.writes));
        }
        if (points.empty())
            throw ClusterError(ClusterError::Kind::TooFewDistinctPoints, "no points to cluster");
        product.read_levels = levels_1d(r, product.k_read, derive_seed(seed, 0));
        product.write_levels = levels_1d(w, product.k_write, derive_seed(seed, 1));
        for (double rl : product.read_levels)
            for (double wl : product.write_levels) {
                ClusterStats s;
                s.centroid = {rl, wl};
                model.clusters.push_back(s);
            }
        model.mode = product;
    }
    for (std::size_t i = 0; i < model.clusters.size(); ++i)
        model.clusters[i].id = static_cast<int>(i);

    compute_stats(model, binned);
    return model;
}

int assign(const ClusterModel& model, const Eigen::Vector2d& point)
{
    const int offset = model.zero_singleton ? 1 : 0;
    if (model.zero_singleton && point.isZero(0.0))
        return 0;
    if (const auto* product = std::get_if<ProductMode>(&model.mode)) {
        const int ir = nearest_level(product->read_levels, point.x());
        const int iw = nearest_level(product->write_levels, point.y());
        return offset + ir * static_cast<int>(product->write_levels.size()) + iw;
    }
    int best = offset;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = offset; c < model.size(); ++c) {
        const double d = (model.clusters[static_cast<std::size_t>(c)].centroid - point).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

ObservationSequence observation_sequence(const ClusterModel& model, const BinnedTrace& binned)
{
    ObservationSequence seq;
    seq.m = model.size();
    seq.obs.reserve(binned.size());
    for (const auto& b : binned.bins)
        seq.obs.push_back(assign(model, Eigen::Vector2d(static_cast<double>(b.reads), static_cast<double>(b.writes))));
    return seq;
}

}  // namespace wlhmm
