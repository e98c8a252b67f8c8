#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracle.hpp"
#include "wlhmm/serialize.hpp"

using namespace wlhmm;

TEST_CASE("HMM JSON round-trips bit-exactly")
{
    std::mt19937_64 rng(1);
    const auto h = oracle::random_hmm(4, 6, rng);
    const auto j = to_json(h);
    CHECK(j["r"] == 4);
    CHECK(j["m"] == 6);
    const auto back = hmm_from_json(Json::parse(j.dump()));
    CHECK(back.nu == h.nu);
    CHECK(back.Q == h.Q);
    CHECK(back.G == h.G);
}

TEST_CASE("HMM JSON is validated")
{
    auto j = to_json(Hmm{Eigen::Vector2d(0.5, 0.5), Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)});
    auto bad = j;
    bad["Q"][0][0] = 0.7;
    CHECK_THROWS_AS(hmm_from_json(bad), HmmError);
    bad = j;
    bad["r"] = 3;
    CHECK_THROWS_AS(hmm_from_json(bad), HmmError);
    bad = j;
    bad["G"][1] = Json::array({1.0});
    CHECK_THROWS(hmm_from_json(bad));
    bad = j;
    bad.erase("nu");
    CHECK_THROWS(hmm_from_json(bad));
}

TEST_CASE("cluster models round-trip in both modes")
{
    ClusterModel joint;
    joint.zero_singleton = true;
    joint.mode = JointMode{2};
    joint.clusters.resize(3);
    joint.clusters[0].singleton_zero = true;
    joint.clusters[0].count = 9;
    for (int i = 1; i < 3; ++i) {
        auto& c = joint.clusters[std::size_t(i)];
        c.id = i;
        c.centroid = {1.25 * i, 0.1 + i};
        c.std = {0.3 * i, 1.0 / 3};
        c.cov_rw = -0.01 * i;
        c.count = std::size_t(10 * i);
    }
    const auto j = cluster_model_from_json(Json::parse(to_json(joint).dump()));
    CHECK(j.zero_singleton);
    CHECK(std::get<JointMode>(j.mode).k == 2);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(j.clusters[i].centroid == joint.clusters[i].centroid);
        CHECK(j.clusters[i].std == joint.clusters[i].std);
        CHECK(j.clusters[i].cov_rw == joint.clusters[i].cov_rw);
        CHECK(j.clusters[i].count == joint.clusters[i].count);
        CHECK(j.clusters[i].singleton_zero == joint.clusters[i].singleton_zero);
    }

    ClusterModel product;
    product.mode = ProductMode{2, 1, {3.5, 20.0}, {7.0}};
    product.clusters.resize(2);
    product.clusters[1].id = 1;
    const auto p = cluster_model_from_json(to_json(product));
    const auto& mode = std::get<ProductMode>(p.mode);
    CHECK(mode.read_levels == std::vector<double>{3.5, 20.0});
    CHECK(mode.write_levels == std::vector<double>{7.0});

    auto broken = to_json(product);
    broken["clusters"][1]["id"] = 5;
    CHECK_THROWS(cluster_model_from_json(broken));
    broken = to_json(product);
    broken["mode"]["type"] = "radial";
    CHECK_THROWS(cluster_model_from_json(broken));
}

TEST_CASE("MAP models keep non-finite entries as null")
{
    MapModel m;
    m.bin_width_s = 0.005;
    m.A = Eigen::MatrixXd(2, 2);
    m.A << -2, 2, 0.5, -0.5;
    m.holding_mean = Eigen::Vector2d(0.5, 2);
    m.geometric_holding = Eigen::Vector2d(0.4, std::nan(""));
    m.rates = {{100, 0}, {0, 300}};
    m.labels = {"a", "ERASE"};
    const auto j = to_json(m);
    CHECK(j["geometric_holding_s"][1].is_null());
    const auto back = map_model_from_json(Json::parse(j.dump()));
    CHECK(back.A == m.A);
    CHECK(back.holding_mean == m.holding_mean);
    CHECK(std::isnan(back.geometric_holding(1)));
    CHECK(back.rates[1].write_bps == 300);
    CHECK(back.labels == m.labels);
}

TEST_CASE("state and trajectory CSVs")
{
    const std::vector<int> states{0, 2, 2, 1};
    std::stringstream s;
    write_states_csv(s, states);
    CHECK(s.str() == "bin_index,state\n0,0\n1,2\n2,2\n3,1\n");
    CHECK(read_states_csv(s) == states);
    std::istringstream bad("bin_index,state\n0 1\n");
    CHECK_THROWS(read_states_csv(bad));

    std::ostringstream t;
    const std::vector<double> ll{-10.5, -3.25};
    write_trajectory_csv(t, ll);
    CHECK(t.str() == "iteration,log_likelihood\n0,-10.5\n1,-3.25\n");
}

TEST_CASE("ACF CSV and report JSON")
{
    ValidationReport r;
    r.raw.acf_reads = {0.5, 0.25};
    r.raw.acf_writes = {0.1, 0.0};
    r.acf_reads_hmm = {0.4, 0.2};
    r.acf_writes_hmm = {0.2, 0.1};
    r.raw.read_mean = 3;
    MetricCheck m;
    m.name = "read_mean";
    m.raw = 3;
    m.band = {3, 2, 4, 0.95, 10};
    m.inside = true;
    r.metrics.push_back(m);
    std::ostringstream csv;
    write_acf_csv(csv, r);
    CHECK(csv.str() == "lag,acf_raw_reads,acf_hmm_reads,acf_raw_writes,acf_hmm_writes\n1,0.5,0.4,0.1,0.2\n2,0.25,0.2,0,0.1\n");
    const auto j = to_json(r);
    CHECK(j["all_inside"] == true);
    CHECK(j["metrics"][0]["band"]["lo"] == 2.0);
    CHECK(j["raw"]["rw_correlation"].is_null());
}

TEST_CASE("queue comparison JSON layout")
{
    SchemeComparison row;
    row.scheme = Scheme::PreemptiveRead;
    row.classes[1].raw = 1.5;
    row.classes[1].band = {1.4, 1.2, 1.6, 0.95, 5};
    row.classes[1].inside = true;
    const auto j = to_json(std::vector<SchemeComparison>{row});
    CHECK(j["preemptive_read"]["write"]["raw"] == 1.5);
    CHECK(j["preemptive_read"]["write"]["ci_hi"] == 1.6);
    CHECK(j["preemptive_read"]["write"]["inside"] == true);
    CHECK(j["preemptive_read"].contains("erase"));
}
