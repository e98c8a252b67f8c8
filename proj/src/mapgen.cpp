#include "wlhmm/mapgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wlhmm {

RunLengthStats run_lengths(std::span<const int> path, int states)
{
    if (path.empty())
        throw MapError(MapError::Kind::InvalidArgument, -1, "path is empty");
    std::vector<std::size_t> total(static_cast<std::size_t>(states), 0);
    RunLengthStats rl;
    rl.run_counts.assign(static_cast<std::size_t>(states), 0);
    for (std::size_t k = 0; k < path.size(); ++k) {
        const int s = path[k];
        if (s < 0 || s >= states)
            throw MapError(MapError::Kind::InvalidState, s, "path state outside [0, states)");
        ++total[static_cast<std::size_t>(s)];
        if (k == 0 || path[k - 1] != s)
            ++rl.run_counts[static_cast<std::size_t>(s)];
    }
    rl.mean_run.resize(static_cast<std::size_t>(states));
    for (std::size_t i = 0; i < rl.run_counts.size(); ++i)
        if (rl.run_counts[i] > 0)
            rl.mean_run[i] = static_cast<double>(total[i]) / static_cast<double>(rl.run_counts[i]);
    return rl;
}

MapModel generators(const Eigen::MatrixXd& Q, const RunLengthStats& runs, double bin_width_s, OffDiagonal variant)
{
    const auto r = Q.rows();
    if (Q.cols() != r || static_cast<Eigen::Index>(runs.mean_run.size()) != r)
        throw MapError(MapError::Kind::InvalidArgument, -1, "Q and run-length statistics disagree on state count");
    if (!(bin_width_s > 0))
        throw MapError(MapError::Kind::InvalidArgument, -1, "bin width must be positive");

    MapModel map;
    map.bin_width_s = bin_width_s;
    map.A = Eigen::MatrixXd::Zero(r, r);
    map.holding_mean.resize(r);
    map.geometric_holding.resize(r);
    for (Eigen::Index i = 0; i < r; ++i) {
        const auto& m = runs.mean_run[static_cast<std::size_t>(i)];
        if (!m)
            throw MapError(MapError::Kind::MissingState, static_cast<int>(i),
                           "state " + std::to_string(i) + " never appears in the Viterbi path");
        const double sojourn = bin_width_s * *m;
        const double off = 1.0 - Q(i, i);
        map.geometric_holding(i) = off > 0 ? bin_width_s / off : std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < r; ++j) {
            if (j == i)
                continue;
            double q = Q(i, j);
            if (variant == OffDiagonal::Renormalized)
                q = off > 0 ? q / off : 0.0;
            map.A(i, j) = q / sojourn;
        }
        map.A(i, i) = -(map.A.row(i).sum());
        map.holding_mean(i) = map.A(i, i) < 0 ? -1.0 / map.A(i, i) : sojourn;
        map.labels.push_back("state" + std::to_string(i));
    }
    return map;
}

std::vector<StateRate> state_rates(const BinnedTrace& binned, std::span<const int> path, int states,
                                   double bin_width_s)
{
    if (path.size() != binned.size())
        throw MapError(MapError::Kind::InvalidArgument, -1, "path and trace lengths differ");
    if (!(bin_width_s > 0))
        throw MapError(MapError::Kind::InvalidArgument, -1, "bin width must be positive");
    std::vector<double> reads(static_cast<std::size_t>(states), 0.0), writes(reads), count(reads);
    for (std::size_t k = 0; k < path.size(); ++k) {
        const int s = path[k];
        if (s < 0 || s >= states)
            throw MapError(MapError::Kind::InvalidState, s, "path state outside [0, states)");
        const auto i = static_cast<std::size_t>(s);
        reads[i] += static_cast<double>(binned.bins[k].reads);
        writes[i] += static_cast<double>(binned.bins[k].writes);
        count[i] += 1;
    }
    std::vector<StateRate> rates(static_cast<std::size_t>(states));
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (count[i] == 0)
            throw MapError(MapError::Kind::MissingState, static_cast<int>(i),
                           "state " + std::to_string(i) + " never appears in the Viterbi path");
        rates[i] = {reads[i] / count[i] / bin_width_s, writes[i] / count[i] / bin_width_s};
    }
    return rates;
}

Eigen::MatrixXd jump_chain(const Eigen::MatrixXd& A)
{
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(A.rows(), A.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double exit = -A(i, i);
        if (exit > 0) {
            P.row(i) = A.row(i) / exit;
            P(i, i) = 0;
        } else {
            P(i, i) = 1;
        }
    }
    return P;
}

Eigen::MatrixXd generator_from_jumps(const Eigen::MatrixXd& P, const Eigen::VectorXd& holding)
{
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(P.rows(), P.cols());
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        if (P(i, i) >= 1 || !std::isfinite(holding(i)))
            continue;  // absorbing
        A.row(i) = P.row(i) / holding(i);
        A(i, i) = 0;
        A(i, i) = -A.row(i).sum();
    }
    return A;
}

MapModel add_erase_state(const MapModel& map, int write_state, const EraseConfig& cfg)
{
    const auto r = map.states();
    if (write_state < 0 || write_state >= r)
        throw MapError(MapError::Kind::InvalidState, write_state, "write state out of range");
    if (!(cfg.ratio > 0) || !(cfg.pages_per_erase_block > 0) || !(cfg.erase_time_s > 0))
        throw MapError(MapError::Kind::InvalidArgument, write_state, "erase parameters must be positive");

    const Eigen::MatrixXd P = jump_chain(map.A);
    Eigen::MatrixXd Pe = Eigen::MatrixXd::Zero(r + 1, r + 1);
    Pe.topLeftCorner(r, r) = P;
    for (Eigen::Index i = 0; i < r; ++i) {
        Pe(i, r) = cfg.ratio * P(i, write_state);
        Pe.row(i) /= Pe.row(i).sum();
    }
    Pe(r, write_state) = 1.0;

    MapModel out = map;
    out.holding_mean.conservativeResize(r + 1);
    out.geometric_holding.conservativeResize(r + 1);
    if (cfg.holding_s) {
        out.holding_mean(r) = *cfg.holding_s;
    } else {
        // Erase work per erase visit covers the pages written per write-state
        // visit, spread over 1/ratio write visits.
        const double write_rate = map.rates.empty() ? 0.0 : map.rates[static_cast<std::size_t>(write_state)].write_bps;
        const double pages_per_visit = write_rate * map.holding_mean(write_state);
        const double blocks = pages_per_visit / cfg.pages_per_erase_block / cfg.ratio;
        out.holding_mean(r) = std::max(blocks, 1.0) * cfg.erase_time_s;
    }
    out.geometric_holding(r) = std::numeric_limits<double>::quiet_NaN();
    out.A = generator_from_jumps(Pe, out.holding_mean);
    if (!out.rates.empty())
        out.rates.push_back({0.0, 0.0});
    out.labels.push_back("ERASE");
    return out;
}

}  // namespace wlhmm
