// Continuous-time Markov arrival process parameters derived from a fitted
// HMM and its Viterbi decoding.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wlhmm/trace.hpp"

namespace wlhmm {

class MapError : public std::runtime_error {
public:
    enum class Kind { MissingState, InvalidState, InvalidArgument };
    MapError(Kind kind, int state, const std::string& what) : std::runtime_error(what), kind_(kind), state_(state) {}
    Kind kind() const { return kind_; }
    int state() const { return state_; }

private:
    Kind kind_;
    int state_;
};

struct RunLengthStats {
    std::vector<std::optional<double>> mean_run;  // bins; empty for states absent from the path
    std::vector<std::size_t> run_counts;
};

struct StateRate {
    double read_bps = 0;   // blocks per second
    double write_bps = 0;
};

enum class OffDiagonal {
    Renormalized,  // a_ij = q_ij / (1 - q_ii) / (w m_i): exit rate is exactly 1 / (w m_i)
    Raw            // a_ij = q_ij / (w m_i)
};

struct MapModel {
    double bin_width_s = 0;
    Eigen::MatrixXd A;                  // generator, 1/s
    Eigen::VectorXd holding_mean;       // s
    Eigen::VectorXd geometric_holding;  // w / (1 - q_ii), reported only
    std::vector<StateRate> rates;
    std::vector<std::string> labels;

    Eigen::Index states() const { return A.rows(); }
};

struct EraseConfig {
    double ratio = 1.0 / 64;
    double pages_per_erase_block = 64;
    double erase_time_s = 0.002;          // per erase block
    std::optional<double> holding_s;      // overrides the derived erase holding time
};

/// Mean length of maximal constant runs per state.
RunLengthStats run_lengths(std::span<const int> path, int states);

/// Generator from transition probabilities and Viterbi run lengths.
MapModel generators(const Eigen::MatrixXd& Q, const RunLengthStats& runs, double bin_width_s,
                    OffDiagonal variant = OffDiagonal::Renormalized);

/// Per-state mean blocks per bin over the bins decoded to that state, divided by the bin width.
std::vector<StateRate> state_rates(const BinnedTrace& binned, std::span<const int> path, int states,
                                   double bin_width_s);

/// Embedded jump chain p_ij = a_ij / -a_ii (absorbing states keep p_ii = 1).
Eigen::MatrixXd jump_chain(const Eigen::MatrixXd& A);

/// Generator with the given jump chain and mean holding times.
Eigen::MatrixXd generator_from_jumps(const Eigen::MatrixXd& P, const Eigen::VectorXd& holding);

/// Appends an erase state: every state i jumps to it with probability
/// ratio * p(i -> write_state) (rows renormalised), and it always returns to write_state.
MapModel add_erase_state(const MapModel& map, int write_state, const EraseConfig& cfg = {});

}  // namespace wlhmm
