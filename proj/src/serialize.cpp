#include "wlhmm/serialize.hpp"

#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

namespace wlhmm {

namespace {

Json matrix_json(const Eigen::MatrixXd& m)
{
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Json vector_json(const Eigen::VectorXd& v)
{
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(std::isfinite(v(i)) ? Json(v(i)) : Json(nullptr));
    return out;
}

Eigen::MatrixXd matrix_from(const Json& j)
{
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw std::invalid_argument("ragged matrix in JSON");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

Eigen::VectorXd vector_from(const Json& j)
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) =
            j[i].is_null() ? std::numeric_limits<double>::quiet_NaN() : j[i].get<double>();
    return v;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json to_json(const Hmm& hmm)
{
    return {{"r", hmm.states()}, {"m", hmm.symbols()}, {"nu", vector_json(hmm.nu)}, {"Q", matrix_json(hmm.Q)},
            {"G", matrix_json(hmm.G)}};
}

Hmm hmm_from_json(const Json& j)
{
    Hmm hmm{vector_from(j.at("nu")), matrix_from(j.at("Q")), matrix_from(j.at("G"))};
    if (j.contains("r") && j["r"].get<Eigen::Index>() != hmm.states())
        throw HmmError(HmmError::Kind::InvalidModel, "declared r does not match Q");
    if (j.contains("m") && j["m"].get<Eigen::Index>() != hmm.symbols())
        throw HmmError(HmmError::Kind::InvalidModel, "declared m does not match G");
    hmm.check();
    return hmm;
}

Json to_json(const ClusterModel& model)
{
    Json mode;
    if (const auto* joint = std::get_if<JointMode>(&model.mode)) {
        mode = {{"type", "joint"}, {"k", joint->k}};
    } else {
        const auto& p = std::get<ProductMode>(model.mode);
        mode = {{"type", "product"},
                {"k_read", p.k_read},
                {"k_write", p.k_write},
                {"read_levels", p.read_levels},
                {"write_levels", p.write_levels}};
    }
    Json clusters = Json::array();
    for (const auto& c : model.clusters)
        clusters.push_back({{"id", c.id},
                            {"centroid", {c.centroid.x(), c.centroid.y()}},
                            {"std", {c.std.x(), c.std.y()}},
                            {"cov_rw", c.cov_rw},
                            {"count", c.count},
                            {"singleton_zero", c.singleton_zero}});
    return {{"mode", mode}, {"zero_singleton", model.zero_singleton}, {"clusters", clusters}};
}

ClusterModel cluster_model_from_json(const Json& j)
{
    ClusterModel model;
    const auto& mode = j.at("mode");
    if (mode.at("type") == "joint") {
        model.mode = JointMode{mode.at("k").get<int>()};
    } else if (mode.at("type") == "product") {
        ProductMode p;
        p.k_read = mode.at("k_read").get<int>();
        p.k_write = mode.at("k_write").get<int>();
        p.read_levels = mode.at("read_levels").get<std::vector<double>>();
        p.write_levels = mode.at("write_levels").get<std::vector<double>>();
        model.mode = p;
    } else {
        throw std::invalid_argument("unknown cluster mode");
    }
    model.zero_singleton = j.value("zero_singleton", false);
    for (const auto& c : j.at("clusters")) {
        ClusterStats s;
        s.id = c.at("id").get<int>();
        s.centroid = {c.at("centroid").at(0).get<double>(), c.at("centroid").at(1).get<double>()};
        s.std = {c.at("std").at(0).get<double>(), c.at("std").at(1).get<double>()};
        s.cov_rw = c.value("cov_rw", 0.0);
        s.count = c.value("count", std::size_t{0});
        s.singleton_zero = c.value("singleton_zero", false);
        if (s.id != static_cast<int>(model.clusters.size()))
            throw std::invalid_argument("cluster ids must be 0..m-1 in order");
        if ((s.std.array() < 0).any())
            throw std::invalid_argument("cluster standard deviations must be non-negative");
        model.clusters.push_back(s);
    }
    return model;
}

Json to_json(const MapModel& map)
{
    Json rates = Json::array();
    for (const auto& r : map.rates)
        rates.push_back({{"read_bps", r.read_bps}, {"write_bps", r.write_bps}});
    return {{"bin_width_s", map.bin_width_s},
            {"A", matrix_json(map.A)},
            {"holding_mean_s", vector_json(map.holding_mean)},
            {"geometric_holding_s", vector_json(map.geometric_holding)},
            {"rates", rates},
            {"labels", map.labels}};
}

MapModel map_model_from_json(const Json& j)
{
    MapModel map;
    map.bin_width_s = j.at("bin_width_s").get<double>();
    map.A = matrix_from(j.at("A"));
    map.holding_mean = vector_from(j.at("holding_mean_s"));
    if (j.contains("geometric_holding_s"))
        map.geometric_holding = vector_from(j["geometric_holding_s"]);
    for (const auto& r : j.value("rates", Json::array()))
        map.rates.push_back({r.at("read_bps").get<double>(), r.at("write_bps").get<double>()});
    map.labels = j.value("labels", std::vector<std::string>{});
    return map;
}

Json to_json(const StatsReport& s)
{
    return {{"read_mean", s.read_mean},   {"read_std", s.read_std},
            {"write_mean", s.write_mean}, {"write_std", s.write_std},
            {"rw_correlation", optional_json(s.rw_correlation)}};
}

Json to_json(const ConfidenceBand& band)
{
    return {{"mean", band.mean}, {"lo", band.lo}, {"hi", band.hi}, {"level", band.level}, {"batches", band.batches}};
}

Json to_json(const ValidationReport& report)
{
    Json metrics = Json::array();
    for (const auto& m : report.metrics)
        metrics.push_back(
            {{"name", m.name}, {"raw", optional_json(m.raw)}, {"band", to_json(m.band)}, {"inside", m.inside}});
    Json reps = Json::array();
    for (const auto& r : report.replicates)
        reps.push_back(to_json(r));
    return {{"raw", to_json(report.raw)},
            {"metrics", metrics},
            {"replicates", reps},
            {"all_inside", report.all_inside()}};
}

Json to_json(const QueueRunResult& run)
{
    Json classes = Json::object();
    for (auto c : {OpClass::Read, OpClass::Write, OpClass::Erase})
        classes[to_string(c)] = {{"mean_queueing_ms", run[c].mean_queueing_ms}, {"count", run[c].count}};
    return {{"classes", classes},     {"utilization", run.utilization}, {"busy_us", run.busy_us},
            {"demand_us", run.demand_us}, {"erases", run.erases},       {"max_queue", run.max_queue},
            {"unstable", run.unstable}};
}

Json to_json(const std::vector<SchemeComparison>& table)
{
    Json out = Json::object();
    for (const auto& row : table) {
        Json classes = Json::object();
        for (auto c : {OpClass::Read, OpClass::Write, OpClass::Erase}) {
            const auto& cc = row.classes[static_cast<std::size_t>(c)];
            classes[to_string(c)] = {{"raw", cc.raw},        {"hmm_mean", cc.band.mean}, {"ci_lo", cc.band.lo},
                                     {"ci_hi", cc.band.hi}, {"inside", cc.inside},      {"replicates", cc.hmm}};
        }
        classes["raw_utilization"] = row.raw_utilization;
        out[to_string(row.scheme)] = classes;
    }
    return out;
}

void write_acf_csv(std::ostream& out, const ValidationReport& report)
{
    out << "lag,acf_raw_reads,acf_hmm_reads,acf_raw_writes,acf_hmm_writes\n";
    const std::size_t lags = std::max({report.raw.acf_reads.size(), report.acf_reads_hmm.size(),
                                       report.raw.acf_writes.size(), report.acf_writes_hmm.size()});
    auto cell = [](const std::vector<double>& v, std::size_t i) {
        std::ostringstream s;
        if (i < v.size())
            s << std::setprecision(10) << v[i];
        return s.str();
    };
    for (std::size_t i = 0; i < lags; ++i)
        out << i + 1 << ',' << cell(report.raw.acf_reads, i) << ',' << cell(report.acf_reads_hmm, i) << ','
            << cell(report.raw.acf_writes, i) << ',' << cell(report.acf_writes_hmm, i) << '\n';
}

void write_states_csv(std::ostream& out, std::span<const int> states)
{
    out << "bin_index,state\n";
    for (std::size_t i = 0; i < states.size(); ++i)
        out << i << ',' << states[i] << '\n';
}

std::vector<int> read_states_csv(std::istream& in)
{
    std::vector<int> states;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || (line_no == 1 && line == "bin_index,state"))
            continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("malformed state row at line " + std::to_string(line_no));
        states.push_back(std::stoi(line.substr(comma + 1)));
    }
    return states;
}

void write_trajectory_csv(std::ostream& out, std::span<const double> log_likelihood)
{
    out << "iteration,log_likelihood\n" << std::setprecision(17);
    for (std::size_t i = 0; i < log_likelihood.size(); ++i)
        out << i << ',' << log_likelihood[i] << '\n';
}

}  // namespace wlhmm
