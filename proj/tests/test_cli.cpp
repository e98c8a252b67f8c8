#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "wlhmm/serialize.hpp"

namespace fs = std::filesystem;
using namespace wlhmm;

namespace {

const fs::path work = fs::current_path() / "cli_work";

int run(const std::string& args)
{
    const std::string cmd = std::string(WLHMM_CLI) + " " + args + " > " + (work / "last.log").string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string p(const std::string& name) { return (work / name).string(); }

void write_toy_trace()
{
    fs::remove_all(work);
    fs::create_directories(work);
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> gap(50, 900), size(1, 8);
    std::uniform_real_distribution<double> u;
    std::ofstream out(work / "trace.csv");
    out << "timestamp_us,op,size_blocks\n";
    long long t = 0;
    for (int i = 0; i < 20000; ++i) {
        t += gap(rng);
        const bool read_phase = (t / 2000000) % 2 == 0;
        out << t << ',' << (u(rng) < (read_phase ? 0.85 : 0.15) ? 'R' : 'W') << ',' << size(rng) << '\n';
    }
}

}  // namespace

TEST_CASE("pipeline bin -> cluster -> fit -> decode -> map")
{
    write_toy_trace();
    REQUIRE(run("bin --input " + p("trace.csv") + " --output " + p("b.csv")) == 0);
    REQUIRE(run("cluster --input " + p("b.csv") + " --mode product --kr 2 --kw 2 --zero-singleton --seed 3 --output " +
                p("c.json")) == 0);
    REQUIRE(run("fit --input " + p("b.csv") + " --clusters " + p("c.json") +
                " --states 2 --restarts 2 --seed 4 --output " + p("h.json")) == 0);
    REQUIRE(run("decode --input " + p("b.csv") + " --clusters " + p("c.json") + " --model " + p("h.json") +
                " --output " + p("s.csv")) == 0);
    REQUIRE(run("map --input " + p("b.csv") + " --model " + p("h.json") + " --states " + p("s.csv") +
                " --erase-state-from 1 --output " + p("map.json")) == 0);

    for (const char* f : {"b.csv", "c.json", "h.json", "h.trajectory.csv", "s.csv", "map.json"})
        CHECK(fs::exists(work / f));
    const auto hmm = hmm_from_json(Json::parse(slurp(work / "h.json")));
    CHECK(hmm.states() == 2);
    CHECK(hmm.symbols() == 5);
    const auto map = map_model_from_json(Json::parse(slurp(work / "map.json")));
    CHECK(map.states() == 3);
    CHECK(map.labels.back() == "ERASE");

    const auto manifest = Json::parse(slurp(work / "map.json.manifest.json"));
    CHECK(manifest["command"] == "map");
    CHECK(manifest["inputs"].size() == 3);
    CHECK(manifest["inputs"][0]["sha256"].get<std::string>().size() == 64);
    CHECK(Json::parse(slurp(work / "h.json.manifest.json"))["seed"] == 4);

    // Stage outputs are deterministic given the seed.
    const auto first = slurp(work / "h.json");
    REQUIRE(run("fit --input " + p("b.csv") + " --clusters " + p("c.json") +
                " --states 2 --restarts 2 --seed 4 --output " + p("h2.json")) == 0);
    CHECK(slurp(work / "h2.json") == first);
}

TEST_CASE("single-state fit reproduces observation frequencies")
{
    write_toy_trace();
    REQUIRE(run("bin --input " + p("trace.csv") + " --output " + p("b.csv")) == 0);
    REQUIRE(run("cluster --input " + p("b.csv") + " --k 3 --seed 1 --output " + p("c.json")) == 0);
    REQUIRE(run("fit --input " + p("b.csv") + " --clusters " + p("c.json") + " --states 1 --output " + p("h.json")) == 0);
    const auto clusters = cluster_model_from_json(Json::parse(slurp(work / "c.json")));
    const auto hmm = hmm_from_json(Json::parse(slurp(work / "h.json")));
    double total = 0;
    for (const auto& c : clusters.clusters)
        total += double(c.count);
    for (const auto& c : clusters.clusters)
        CHECK(hmm.G(0, c.id) == doctest::Approx(double(c.count) / total).epsilon(1e-12));
    CHECK(hmm.Q(0, 0) == 1.0);
}

TEST_CASE("gen, thin, validate and qsim")
{
    write_toy_trace();
    REQUIRE(run("bin --input " + p("trace.csv") + " --output " + p("b.csv")) == 0);
    REQUIRE(run("cluster --input " + p("b.csv") + " --k 4 --seed 1 --output " + p("c.json")) == 0);
    REQUIRE(run("fit --input " + p("b.csv") + " --clusters " + p("c.json") + " --states 2 --output " + p("h.json")) == 0);

    REQUIRE(run("gen --model " + p("h.json") + " --clusters " + p("c.json") + " --length 2000 --seed 5 --output " +
                p("g.csv")) == 0);
    const int v = run("validate --input " + p("g.csv") + " --model " + p("h.json") + " --clusters " + p("c.json") +
                      " --replicates 10 --max-lag 10 --seed 8 --output " + p("v.json"));
    const auto report = Json::parse(slurp(work / "v.json"));
    CHECK(v == (report["all_inside"].get<bool>() ? 0 : 2));
    CHECK(report["metrics"].size() == 5);
    CHECK(fs::exists(work / "v.acf.csv"));

    REQUIRE(run("gen --model " + p("h.json") + " --clusters " + p("c.json") +
                " --length 50 --replicates 3 --seed 5 --output " + p("r.csv")) == 0);
    for (const char* f : {"r_0.csv", "r_1.csv", "r_2.csv"})
        CHECK(fs::exists(work / f));

    REQUIRE(run("thin --input " + p("g.csv") + " --period 10 --keep 0,1,2,4 --output " + p("t.csv")) == 0);
    std::ifstream tin(work / "t.csv");
    CHECK(read_binned_csv(tin, 5000).size() == 800);

    REQUIRE(run("qsim --input " + p("b.csv") + " --service-read 20 --service-write 100 --service-erase 1500 --output " +
                p("q.json")) == 0);
    const auto q = Json::parse(slurp(work / "q.json"));
    CHECK(q.contains("no_priority"));
    CHECK(q["preemptive_read"]["classes"]["read"]["mean_queueing_ms"].get<double>() <=
          q["no_priority"]["classes"]["read"]["mean_queueing_ms"].get<double>());

    REQUIRE(run("qsim --input " + p("b.csv") + " --service-read 20 --service-write 100 --service-erase 1500 " +
                "--scheme nonpreemptive --replicates 3 --model " + p("h.json") + " --clusters " + p("c.json") +
                " --output " + p("q2.json")) == 0);
    CHECK(Json::parse(slurp(work / "q2.json"))["nonpreemptive_read"]["write"].contains("ci_lo"));

    REQUIRE(run("sweep --input " + p("b.csv") + " --clusters " + p("c.json") + " --states 1,2 --restarts 1 --output " +
                p("sw.json")) == 0);
    CHECK(Json::parse(slurp(work / "sw.json")).size() == 2);
}

TEST_CASE("errors exit with status 1 and name the problem")
{
    write_toy_trace();
    CHECK(run("bin --input " + p("missing.csv") + " --output " + p("x.csv")) == 1);
    CHECK(slurp(work / "last.log").find("missing.csv") != std::string::npos);

    CHECK(run("fit --states three --input a --clusters b --output c") == 1);
    CHECK(slurp(work / "last.log").find("--states") != std::string::npos);

    {
        std::ofstream bad(work / "bad.csv");
        bad << "timestamp_us,op,size_blocks\n10,R,4\n20,X,1\n";
    }
    CHECK(run("bin --input " + p("bad.csv") + " --output " + p("x.csv")) == 1);
    CHECK(slurp(work / "last.log").find("line 3") != std::string::npos);

    CHECK(run("nosuchcommand") == 1);
    CHECK(run("--help") == 0);
}
