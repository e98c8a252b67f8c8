// wlhmm: file-staged pipeline from block IO traces to HMM and MAP parameters.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "manifest.hpp"
#include "wlhmm/cluster.hpp"
#include "wlhmm/hmm.hpp"
#include "wlhmm/mapgen.hpp"
#include "wlhmm/qsim.hpp"
#include "wlhmm/serialize.hpp"
#include "wlhmm/stats.hpp"
#include "wlhmm/synth.hpp"
#include "wlhmm/trace.hpp"

namespace fs = std::filesystem;
using namespace wlhmm;
using cli::Manifest;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kValidationFailed = 2;

std::ifstream open_in(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return in;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& fn)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    fn(out);
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

void write_json(const fs::path& path, const Json& j)
{
    write_file(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

Json read_json(const fs::path& path)
{
    auto in = open_in(path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

BinnedTrace read_binned(const fs::path& path, std::int64_t width)
{
    auto in = open_in(path);
    return read_binned_csv(in, width);
}

/// `out.json` -> `out<suffix>`
fs::path sibling(const fs::path& path, const std::string& suffix)
{
    fs::path p = path;
    p.replace_extension();
    return fs::path(p.string() + suffix);
}

ObservationSequence observations(const ClusterModel& clusters, const BinnedTrace& binned, const Hmm* hmm)
{
    auto seq = observation_sequence(clusters, binned);
    if (hmm && hmm->symbols() != seq.m)
        throw std::runtime_error("model has " + std::to_string(hmm->symbols()) + " symbols but the cluster model has " +
                                 std::to_string(seq.m));
    return seq;
}

std::set<std::size_t> parse_keep(const std::string& text)
{
    std::set<std::size_t> keep;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty())
            continue;
        std::size_t used = 0;
        const long long v = std::stoll(item, &used);
        if (used != item.size() || v < 0)
            throw CLI::ValidationError("--keep", "'" + item + "' is not a non-negative integer");
        keep.insert(static_cast<std::size_t>(v));
    }
    return keep;
}

std::vector<int> parse_int_list(const std::string& flag, const std::string& text)
{
    std::vector<int> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || item.empty())
            throw CLI::ValidationError(flag, "'" + item + "' is not an integer");
        out.push_back(v);
    }
    return out;
}

// Options shared by several subcommands.
struct Common {
    std::int64_t bin_width_us = 5000;
    std::uint64_t seed = 0;
};

void add_width(CLI::App* cmd, Common& c)
{
    cmd->add_option("--bin-width-us", c.bin_width_us, "Bin width in microseconds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

void add_seed(CLI::App* cmd, Common& c)
{
    cmd->add_option("--seed", c.seed, "Seed for all randomness in this command")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Workload characterisation of block IO traces with hidden Markov models"};
    app.set_version_flag("--version", std::string(WLHMM_VERSION));
    app.require_subcommand(1);
    app.footer("Each command writes <output>.manifest.json describing its inputs, parameters and seed.\n"
               "Exit status: 0 success, 1 error, 2 validation metric outside its band.");

    Common common;
    int status = kOk;
    std::function<void()> action;

    // bin
    std::string in_path, out_path, model_path, clusters_path, states_path;
    auto* bin = app.add_subcommand("bin", "Aggregate a raw trace into read/write block counts per bin");
    bin->add_option("--input", in_path, "Raw trace CSV: timestamp_us,op,size_blocks (op R or W)")->required();
    bin->add_option("--output", out_path, "Binned CSV: bin_index,reads,writes")->required();
    add_width(bin, common);
    bin->callback([&] {
        action = [&] {
            auto in = open_in(in_path);
            const auto binned = bin_trace(parse_trace(in), common.bin_width_us);
            write_file(out_path, [&](std::ostream& out) { write_binned_csv(out, binned); });
            Manifest m("bin");
            m.input(in_path);
            m.output(out_path);
            m.parameters() = {{"bin_width_us", common.bin_width_us}, {"bins", binned.size()}};
            m.write(out_path);
            std::cout << "binned " << binned.size() << " bins of " << common.bin_width_us << " us\n";
        };
    });

    // thin
    std::size_t period = 10;
    std::string keep_text;
    auto* thin = app.add_subcommand("thin", "Keep only selected phases of a periodic binned trace");
    thin->add_option("--input", in_path, "Binned CSV")->required();
    thin->add_option("--output", out_path, "Binned CSV")->required();
    thin->add_option("--period", period, "Period in bins")->check(CLI::PositiveNumber)->capture_default_str();
    thin->add_option("--keep", keep_text, "Comma-separated phases to keep, e.g. 0,1,2,4")->required();
    add_width(thin, common);
    thin->callback([&] {
        action = [&] {
            const auto keep = parse_keep(keep_text);
            const auto out = thin_periodic(read_binned(in_path, common.bin_width_us), period, keep);
            write_file(out_path, [&](std::ostream& o) { write_binned_csv(o, out); });
            Manifest m("thin");
            m.input(in_path);
            m.output(out_path);
            m.parameters() = {{"period", period}, {"keep", keep}, {"bin_width_us", common.bin_width_us}};
            m.write(out_path);
            std::cout << "kept " << out.size() << " bins\n";
        };
    });

    // cluster
    std::string mode = "joint";
    int k = 8, kr = 2, kw = 4;
    bool zero_singleton = false;
    auto* cluster = app.add_subcommand("cluster", "Build the observation alphabet by k-means");
    cluster->add_option("--input", in_path, "Binned CSV")->required();
    cluster->add_option("--output", out_path, "Cluster model JSON")->required();
    cluster->add_option("--mode", mode, "joint: k-means on (reads, writes); product: 1-D levels crossed")
        ->check(CLI::IsMember({"joint", "product"}))
        ->capture_default_str();
    cluster->add_option("--k", k, "Cluster count in joint mode")->check(CLI::PositiveNumber)->capture_default_str();
    cluster->add_option("--kr", kr, "Read levels in product mode")->check(CLI::PositiveNumber)->capture_default_str();
    cluster->add_option("--kw", kw, "Write levels in product mode")->check(CLI::PositiveNumber)->capture_default_str();
    cluster->add_flag("--zero-singleton", zero_singleton, "Reserve observation 0 for empty bins");
    add_width(cluster, common);
    add_seed(cluster, common);
    cluster->footer("Output: {mode, zero_singleton, clusters:[{id, centroid:[r,w], std:[r,w], cov_rw, count, "
                    "singleton_zero}]}");
    cluster->callback([&] {
        action = [&] {
            const auto binned = read_binned(in_path, common.bin_width_us);
            ClusterMode cm = mode == "joint" ? ClusterMode(JointMode{k}) : ClusterMode(ProductMode{kr, kw, {}, {}});
            const auto model = fit_clusters(binned, cm, zero_singleton, common.seed);
            write_json(out_path, to_json(model));
            Manifest m("cluster");
            m.input(in_path);
            m.output(out_path);
            m.seed(common.seed);
            m.parameters() = {{"mode", mode}, {"zero_singleton", zero_singleton}, {"bin_width_us", common.bin_width_us}};
            if (mode == "joint")
                m.parameters()["k"] = k;
            else
                m.parameters().update({{"kr", kr}, {"kw", kw}});
            m.write(out_path);
            std::cout << model.size() << " observation values\n";
        };
    });

    // fit
    int states = 3;
    BaumWelchOptions bw;
    std::string trajectory_path;
    auto* fit = app.add_subcommand("fit", "Estimate an HMM by Baum-Welch");
    fit->add_option("--input", in_path, "Binned CSV")->required();
    fit->add_option("--clusters", clusters_path, "Cluster model JSON")->required();
    fit->add_option("--output", out_path, "HMM JSON {r, m, nu, Q, G}")->required();
    fit->add_option("--trajectory", trajectory_path, "Log-likelihood CSV (default <output>.trajectory.csv)");
    fit->add_option("--states", states, "Hidden state count")->check(CLI::PositiveNumber)->capture_default_str();
    fit->add_option("--restarts", bw.restarts, "Random initialisations")->check(CLI::PositiveNumber)->capture_default_str();
    fit->add_option("--tol", bw.tol, "Stop when the log-likelihood changes by less than this")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    fit->add_option("--max-iter", bw.max_iter, "Iteration limit")->check(CLI::NonNegativeNumber)->capture_default_str();
    add_width(fit, common);
    add_seed(fit, common);
    fit->callback([&] {
        action = [&] {
            const auto binned = read_binned(in_path, common.bin_width_us);
            const auto clusters = cluster_model_from_json(read_json(clusters_path));
            const auto obs = observations(clusters, binned, nullptr);
            bw.seed = common.seed;
            const auto result = baum_welch<double>(obs, states, bw);
            const fs::path traj = trajectory_path.empty() ? sibling(out_path, ".trajectory.csv") : fs::path(trajectory_path);
            auto j = to_json(result.model);
            j["log_likelihood"] = result.log_likelihood.back();
            j["iterations"] = result.iterations;
            j["converged"] = result.converged;
            j["degenerate_states"] = result.degenerate_states;
            write_json(out_path, j);
            write_file(traj, [&](std::ostream& o) { write_trajectory_csv(o, result.log_likelihood); });
            Manifest m("fit");
            m.input(in_path);
            m.input(clusters_path);
            m.output(out_path);
            m.output(traj);
            m.seed(common.seed);
            m.parameters() = {{"states", states},         {"restarts", bw.restarts}, {"tol", bw.tol},
                              {"max_iter", bw.max_iter}, {"bin_width_us", common.bin_width_us}};
            m.write(out_path);
            for (int s : result.degenerate_states)
                std::cerr << "warning: state " << s << " received no posterior mass\n";
            std::cout << "log-likelihood " << result.log_likelihood.back() << " after " << result.iterations
                      << " iterations" << (result.converged ? "" : " (not converged)") << '\n';
        };
    });

    // sweep
    std::string candidates = "1,2,3,4";
    auto* sweep = app.add_subcommand("sweep", "Fit several state counts and flag near-duplicate states");
    sweep->add_option("--input", in_path, "Binned CSV")->required();
    sweep->add_option("--clusters", clusters_path, "Cluster model JSON")->required();
    sweep->add_option("--output", out_path, "Sweep report JSON")->required();
    sweep->add_option("--states", candidates, "Comma-separated state counts")->capture_default_str();
    sweep->add_option("--restarts", bw.restarts, "Random initialisations")->check(CLI::PositiveNumber)->capture_default_str();
    sweep->add_option("--tol", bw.tol, "Convergence tolerance")->check(CLI::PositiveNumber)->capture_default_str();
    sweep->add_option("--max-iter", bw.max_iter, "Iteration limit")->check(CLI::NonNegativeNumber)->capture_default_str();
    add_width(sweep, common);
    add_seed(sweep, common);
    sweep->callback([&] {
        action = [&] {
            const auto rs = parse_int_list("--states", candidates);
            for (int r : rs)
                if (r < 1)
                    throw CLI::ValidationError("--states", "state counts must be positive");
            const auto binned = read_binned(in_path, common.bin_width_us);
            const auto obs = observations(cluster_model_from_json(read_json(clusters_path)), binned, nullptr);
            bw.seed = common.seed;
            const auto entries = sweep_states(obs, rs, bw);
            Json out = Json::array();
            for (const auto& e : entries) {
                Json dup = Json::array();
                for (auto [a, b] : e.near_duplicates)
                    dup.push_back({a, b});
                out.push_back({{"states", e.states},
                               {"log_likelihood", e.log_likelihood},
                               {"per_symbol", e.per_symbol},
                               {"iterations", e.iterations},
                               {"near_duplicates", dup},
                               {"model", to_json(e.model)}});
                std::cout << "r=" << e.states << " log-likelihood " << e.log_likelihood;
                if (!e.near_duplicates.empty())
                    std::cout << "  near-duplicate states: " << dup.dump();
                std::cout << '\n';
            }
            write_json(out_path, out);
            Manifest m("sweep");
            m.input(in_path);
            m.input(clusters_path);
            m.output(out_path);
            m.seed(common.seed);
            m.parameters() = {{"states", rs},      {"restarts", bw.restarts},   {"tol", bw.tol},
                              {"max_iter", bw.max_iter}, {"bin_width_us", common.bin_width_us}};
            m.write(out_path);
        };
    });

    // decode
    auto* decode = app.add_subcommand("decode", "Most probable hidden state per bin (Viterbi)");
    decode->add_option("--input", in_path, "Binned CSV")->required();
    decode->add_option("--clusters", clusters_path, "Cluster model JSON")->required();
    decode->add_option("--model", model_path, "HMM JSON")->required();
    decode->add_option("--output", out_path, "State CSV: bin_index,state")->required();
    add_width(decode, common);
    decode->callback([&] {
        action = [&] {
            const auto binned = read_binned(in_path, common.bin_width_us);
            const auto hmm = hmm_from_json(read_json(model_path));
            const auto path = viterbi(hmm, observations(cluster_model_from_json(read_json(clusters_path)), binned, &hmm));
            write_file(out_path, [&](std::ostream& o) { write_states_csv(o, path.states); });
            Manifest m("decode");
            m.input(in_path);
            m.input(clusters_path);
            m.input(model_path);
            m.output(out_path);
            m.parameters() = {{"bin_width_us", common.bin_width_us}, {"max_log_posterior", path.max_log_posterior}};
            m.write(out_path);
            std::cout << "max log posterior " << path.max_log_posterior << '\n';
        };
    });

    // gen
    std::size_t length = 0;
    int replicates = 1;
    auto* gen = app.add_subcommand("gen", "Generate synthetic binned traces from a model");
    gen->add_option("--model", model_path, "HMM JSON")->required();
    gen->add_option("--clusters", clusters_path, "Cluster model JSON")->required();
    gen->add_option("--output", out_path, "Binned CSV; with several replicates, <stem>_<i>.csv")->required();
    gen->add_option("--length", length, "Bins per trace")->required()->check(CLI::PositiveNumber);
    gen->add_option("--replicates", replicates, "Number of traces")->check(CLI::PositiveNumber)->capture_default_str();
    add_width(gen, common);
    add_seed(gen, common);
    gen->footer("Replicate i uses seed stream i, matching the traces generated internally by validate.");
    gen->callback([&] {
        action = [&] {
            const auto hmm = hmm_from_json(read_json(model_path));
            const auto clusters = cluster_model_from_json(read_json(clusters_path));
            Manifest m("gen");
            m.input(model_path);
            m.input(clusters_path);
            m.seed(common.seed);
            std::size_t clamped = 0;
            for (int i = 0; i < replicates; ++i) {
                GenConfig cfg{length, derive_seed(common.seed, static_cast<std::uint64_t>(i)), 1000, common.bin_width_us};
                GenDiagnostics diag;
                const auto trace = generate_trace(hmm, clusters, cfg, &diag);
                clamped += diag.clamped;
                fs::path p = out_path;
                if (replicates > 1)
                    p = sibling(out_path, "_" + std::to_string(i) + fs::path(out_path).extension().string());
                write_file(p, [&](std::ostream& o) { write_binned_csv(o, trace); });
                m.output(p);
            }
            m.parameters() = {{"length", length},
                              {"replicates", replicates},
                              {"bin_width_us", common.bin_width_us},
                              {"clamped_bins", clamped}};
            m.write(out_path);
            std::cout << "generated " << replicates << " trace(s) of " << length << " bins\n";
        };
    });

    // validate
    ValidateOptions vopts;
    std::string acf_path;
    auto* validate_cmd = app.add_subcommand("validate", "Compare a raw trace with model-generated replicates");
    validate_cmd->add_option("--input", in_path, "Raw binned CSV")->required();
    validate_cmd->add_option("--model", model_path, "HMM JSON")->required();
    validate_cmd->add_option("--clusters", clusters_path, "Cluster model JSON")->required();
    validate_cmd->add_option("--output", out_path, "Validation report JSON")->required();
    validate_cmd->add_option("--acf", acf_path, "ACF CSV (default <output>.acf.csv)");
    validate_cmd->add_option("--replicates", vopts.replicates, "Synthetic traces")
        ->check(CLI::Range(2, 1 << 20))
        ->capture_default_str();
    validate_cmd->add_option("--level", vopts.level, "Confidence level")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    validate_cmd->add_option("--max-lag", vopts.max_lag, "Largest ACF lag")->check(CLI::PositiveNumber)->capture_default_str();
    validate_cmd->add_option("--length", vopts.length, "Bins per replicate (default: raw length)");
    add_width(validate_cmd, common);
    add_seed(validate_cmd, common);
    validate_cmd->footer("Exits with status 2 when any raw metric falls outside its band.");
    validate_cmd->callback([&] {
        action = [&] {
            const auto raw = read_binned(in_path, common.bin_width_us);
            const auto hmm = hmm_from_json(read_json(model_path));
            const auto clusters = cluster_model_from_json(read_json(clusters_path));
            vopts.seed = common.seed;
            const auto report = validate(raw, hmm, clusters, vopts);
            const fs::path acf_out = acf_path.empty() ? sibling(out_path, ".acf.csv") : fs::path(acf_path);
            write_json(out_path, to_json(report));
            write_file(acf_out, [&](std::ostream& o) { write_acf_csv(o, report); });
            Manifest m("validate");
            m.input(in_path);
            m.input(model_path);
            m.input(clusters_path);
            m.output(out_path);
            m.output(acf_out);
            m.seed(common.seed);
            m.parameters() = {{"replicates", vopts.replicates}, {"level", vopts.level}, {"max_lag", vopts.max_lag},
                              {"length", vopts.length},         {"bin_width_us", common.bin_width_us}};
            m.write(out_path);
            for (const auto& metric : report.metrics) {
                std::cout << metric.name << ": raw ";
                if (metric.raw)
                    std::cout << *metric.raw;
                else
                    std::cout << "undefined";
                std::cout << " band [" << metric.band.lo << ", " << metric.band.hi << "] "
                          << (metric.inside ? "inside" : "OUTSIDE") << '\n';
            }
            if (!report.all_inside())
                status = kValidationFailed;
        };
    });

    // map
    std::string offdiag = "renormalized";
    int erase_from = -1;
    EraseConfig erase;
    double erase_holding = 0;
    auto* map_cmd = app.add_subcommand("map", "Derive CTMC generator and per-state rates from a decoded trace");
    map_cmd->add_option("--input", in_path, "Binned CSV")->required();
    map_cmd->add_option("--model", model_path, "HMM JSON (for Q)")->required();
    map_cmd->add_option("--states", states_path, "State CSV from decode")->required();
    map_cmd->add_option("--output", out_path, "MAP JSON")->required();
    map_cmd->add_option("--offdiag", offdiag, "renormalized: exit rate 1/(w m_i); raw: q_ij/(w m_i)")
        ->check(CLI::IsMember({"renormalized", "raw"}))
        ->capture_default_str();
    map_cmd->add_option("--erase-state-from", erase_from, "Add an erase state fed from this write state");
    map_cmd->add_option("--erase-ratio", erase.ratio, "Erase entries per write-state entry")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    map_cmd->add_option("--erase-pages", erase.pages_per_erase_block, "Pages per erase block")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    map_cmd->add_option("--erase-time-s", erase.erase_time_s, "Time to erase one block")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    map_cmd->add_option("--erase-holding-s", erase_holding, "Override the erase state's mean holding time")
        ->check(CLI::PositiveNumber);
    add_width(map_cmd, common);
    map_cmd->footer("Output: {bin_width_s, A, holding_mean_s, geometric_holding_s, rates:[{read_bps, write_bps}], "
                    "labels}");
    map_cmd->callback([&] {
        action = [&] {
            const auto binned = read_binned(in_path, common.bin_width_us);
            const auto hmm = hmm_from_json(read_json(model_path));
            auto sin = open_in(states_path);
            const auto path = read_states_csv(sin);
            const int r = static_cast<int>(hmm.states());
            const double w = binned.bin_width_s();
            auto map = generators(hmm.Q, run_lengths(path, r), w,
                                  offdiag == "raw" ? OffDiagonal::Raw : OffDiagonal::Renormalized);
            map.rates = state_rates(binned, path, r, w);
            if (erase_from >= 0) {
                if (erase_holding > 0)
                    erase.holding_s = erase_holding;
                map = add_erase_state(map, erase_from, erase);
            }
            write_json(out_path, to_json(map));
            Manifest m("map");
            m.input(in_path);
            m.input(model_path);
            m.input(states_path);
            m.output(out_path);
            m.parameters() = {{"offdiag", offdiag}, {"bin_width_us", common.bin_width_us}};
            if (erase_from >= 0)
                m.parameters().update({{"erase_state_from", erase_from},
                                       {"erase_ratio", erase.ratio},
                                       {"erase_pages", erase.pages_per_erase_block},
                                       {"erase_time_s", erase.erase_time_s},
                                       {"erase_holding_s", map.holding_mean(map.states() - 1)}});
            m.write(out_path);
            std::cout << map.states() << "-state generator written\n";
        };
    });

    // qsim
    std::string scheme_name = "all", spread = "bin-start";
    QueueSimConfig qcfg;
    CompareOptions copts;
    copts.replicates = 0;
    auto* qsim = app.add_subcommand("qsim", "Single-server Flash queue fed by a binned trace");
    qsim->add_option("--input", in_path, "Binned CSV")->required();
    qsim->add_option("--output", out_path, "Queueing report JSON")->required();
    qsim->add_option("--scheme", scheme_name, "all, none, nonpreemptive or preemptive")
        ->check(CLI::IsMember({"all", "none", "nonpreemptive", "preemptive"}))
        ->capture_default_str();
    qsim->add_option("--service-read", qcfg.service.read_us, "Read service time per block (us)")
        ->required()
        ->check(CLI::PositiveNumber);
    qsim->add_option("--service-write", qcfg.service.write_us, "Write service time per block (us)")
        ->required()
        ->check(CLI::PositiveNumber);
    qsim->add_option("--service-erase", qcfg.service.erase_us, "Erase service time (us)")
        ->required()
        ->check(CLI::PositiveNumber);
    qsim->add_option("--erase-per-writes", qcfg.erase_per_writes, "One erase after this many writes")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    qsim->add_option("--spread", spread, "Arrival times within a bin")
        ->check(CLI::IsMember({"bin-start", "uniform"}))
        ->capture_default_str();
    qsim->add_option("--replicates", copts.replicates, "Also run this many model-generated traces (needs --model)");
    qsim->add_option("--model", model_path, "HMM JSON for the comparison");
    qsim->add_option("--clusters", clusters_path, "Cluster model JSON for the comparison");
    qsim->add_option("--level", copts.level, "Confidence level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    add_width(qsim, common);
    add_seed(qsim, common);
    qsim->footer("With --replicates the report is scheme -> class -> {raw, hmm_mean, ci_lo, ci_hi, inside}.");
    qsim->callback([&] {
        action = [&] {
            const auto raw = read_binned(in_path, common.bin_width_us);
            qcfg.spread = spread == "uniform" ? ArrivalSpread::UniformInBin : ArrivalSpread::BinStart;
            qcfg.seed = common.seed;
            std::vector<Scheme> schemes = copts.schemes;
            if (scheme_name != "all")
                schemes = {parse_scheme(scheme_name)};
            Manifest m("qsim");
            m.input(in_path);
            Json report;
            if (copts.replicates > 0) {
                if (model_path.empty() || clusters_path.empty())
                    throw CLI::ValidationError("--replicates", "requires --model and --clusters");
                const auto hmm = hmm_from_json(read_json(model_path));
                const auto clusters = cluster_model_from_json(read_json(clusters_path));
                m.input(model_path);
                m.input(clusters_path);
                copts.seed = common.seed;
                copts.schemes = schemes;
                const auto table = compare_raw_vs_hmm(raw, hmm, clusters, qcfg, copts);
                report = to_json(table);
                for (const auto& row : table)
                    for (std::size_t c = 0; c < 3; ++c)
                        std::cout << to_string(row.scheme) << ' ' << to_string(static_cast<OpClass>(c)) << ": raw "
                                  << row.classes[c].raw << " ms, model [" << row.classes[c].band.lo << ", "
                                  << row.classes[c].band.hi << "]\n";
            } else {
                for (Scheme s : schemes) {
                    qcfg.scheme = s;
                    const auto run = simulate_queue(raw, qcfg);
                    report[to_string(s)] = to_json(run);
                    std::cout << to_string(s) << ": read " << run[OpClass::Read].mean_queueing_ms << " ms, write "
                              << run[OpClass::Write].mean_queueing_ms << " ms, erase "
                              << run[OpClass::Erase].mean_queueing_ms << " ms, utilisation " << run.utilization
                              << '\n';
                }
            }
            write_json(out_path, report);
            m.output(out_path);
            m.seed(common.seed);
            m.parameters() = {{"scheme", scheme_name},
                              {"service_read_us", qcfg.service.read_us},
                              {"service_write_us", qcfg.service.write_us},
                              {"service_erase_us", qcfg.service.erase_us},
                              {"erase_per_writes", qcfg.erase_per_writes},
                              {"spread", spread},
                              {"replicates", copts.replicates},
                              {"level", copts.level},
                              {"bin_width_us", common.bin_width_us}};
            m.write(out_path);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kError;
    }

    try {
        action();
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kError;
    }
    return status;
}
