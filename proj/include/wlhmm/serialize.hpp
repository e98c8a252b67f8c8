// JSON and CSV forms of the model and report types.
#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include <json.hpp>

#include "wlhmm/cluster.hpp"
#include "wlhmm/hmm.hpp"
#include "wlhmm/mapgen.hpp"
#include "wlhmm/qsim.hpp"
#include "wlhmm/stats.hpp"

namespace wlhmm {

using Json = nlohmann::json;

// {r, m, nu, Q, G}; extra keys are ignored.
Json to_json(const Hmm& hmm);
Hmm hmm_from_json(const Json& j);

// {mode, zero_singleton, clusters: [{id, centroid, std, cov_rw, count, singleton_zero}]}
Json to_json(const ClusterModel& model);
ClusterModel cluster_model_from_json(const Json& j);

// {bin_width_s, A, holding_mean_s, geometric_holding_s, rates: [{read_bps, write_bps}], labels}
Json to_json(const MapModel& map);
MapModel map_model_from_json(const Json& j);

Json to_json(const StatsReport& s);
Json to_json(const ConfidenceBand& band);
Json to_json(const ValidationReport& report);
Json to_json(const QueueRunResult& run);
// scheme -> class -> {raw, hmm_mean, ci_lo, ci_hi, inside}
Json to_json(const std::vector<SchemeComparison>& table);

// lag,acf_raw_reads,acf_hmm_reads,acf_raw_writes,acf_hmm_writes
void write_acf_csv(std::ostream& out, const ValidationReport& report);
// bin_index,state
void write_states_csv(std::ostream& out, std::span<const int> states);
std::vector<int> read_states_csv(std::istream& in);
// iteration,log_likelihood
void write_trajectory_csv(std::ostream& out, std::span<const double> log_likelihood);

}  // namespace wlhmm
