#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mtdc/cli.hpp"
#include "support/fixtures.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "mtdc");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = mtdc::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("mtdc_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

json read(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::string bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path write_grid(const fs::path& dir, const std::string& name, const json& j) {
    const fs::path p = dir / name;
    std::ofstream(p) << j.dump(2);
    return p;
}

const std::string case4 = mtdc::testing::data_path("case4.json").string();
const std::string scenario4 = mtdc::testing::data_path("scenario4.json").string();

} // namespace

TEST_CASE("powerflow on case4") {
    const auto dir = fresh_dir("pf");
    const auto r = run({"powerflow", case4, "--out-dir", dir.string(), "--starts", "20"});
    CHECK(r.code == 0);
    const auto j = read(dir / "powerflow.json");
    CHECK(j["schema"] == 1);
    CHECK(j["status"] == "certified");
    CHECK(j["converged"] == true);
    CHECK(j["alpha"].get<double>() == doctest::Approx(0.0100037).epsilon(1e-5));
    CHECK(j["V_P"].size() == 3);
    CHECK(j["uniqueness"]["converged"] == 20);
    CHECK(fs::exists(dir / "powerflow_trace.csv"));
    std::ifstream csv(dir / "powerflow_trace.csv");
    std::string first;
    std::getline(csv, first);
    CHECK(first == "# schema=1");
}

TEST_CASE("powerflow output is deterministic") {
    const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
    REQUIRE(run({"powerflow", case4, "--out-dir", a.string()}).code == 0);
    REQUIRE(run({"powerflow", case4, "--out-dir", b.string()}).code == 0);
    CHECK(bytes(a / "powerflow.json") == bytes(b / "powerflow.json"));
    CHECK(bytes(a / "powerflow_trace.csv") == bytes(b / "powerflow_trace.csv"));
}

TEST_CASE("a grid without power nodes is rejected") {
    const auto dir = fresh_dir("nopower");
    json g = read(case4);
    json nodes = json::array();
    for (const auto& n : g["nodes"])
        if (n["kind"] == "voltage") nodes.push_back(n);
    nodes.push_back({{"id", "v2"}, {"kind", "voltage"}, {"v_set", 1.0}});
    g["nodes"] = nodes;
    json e = g["edges"][0];
    e["id"] = "x";
    e["from"] = nodes[0]["id"];
    e["to"] = "v2";
    g["edges"] = json::array({e});
    const auto p = write_grid(dir, "grid.json", g);
    const auto r = run({"powerflow", p.string(), "--out-dir", dir.string()});
    CHECK(r.code == 1);
    CHECK_FALSE(r.err.empty());
}

TEST_CASE("an overloaded grid is not certified") {
    const auto dir = fresh_dir("overload");
    json g = read(case4);
    for (auto& n : g["nodes"])
        if (n["kind"] == "power") n["p_ref"] = n["p_ref"].get<double>() * 100.0;
    const auto p = write_grid(dir, "grid.json", g);
    auto r = run({"powerflow", p.string(), "--delta", "0.99", "--out-dir", dir.string()});
    CHECK(r.code == 2);
    CHECK(read(dir / "powerflow.json")["status"] == "alpha_ge_1");
    r = run({"powerflow", p.string(), "--delta", "0.99", "--force", "--out-dir", dir.string()});
    CHECK(r.code == 2);
    const auto j = read(dir / "powerflow.json");
    CHECK(j["alpha"].get<double>() >= 1.0);
    CHECK(j["status"] == "converged_uncertified");
}

TEST_CASE("full pipeline and report") {
    const auto dir = fresh_dir("pipeline");
    const std::string out = dir.string();
    REQUIRE(run({"powerflow", case4, "--out-dir", out}).code == 0);

    auto missing = run({"report", "--out-dir", out});
    CHECK(missing.code == 1);
    CHECK(missing.err.find("missing stage: stability") != std::string::npos);

    const auto st = run({"stability", case4, "--out-dir", out});
    CHECK(st.code == 0);
    const auto sj = read(dir / "stability.json");
    CHECK(sj["status"] == "certified");
    CHECK(sj["verified"] == true);
    CHECK(sj["points"].size() == 7);

    const auto sim = run({"simulate", scenario4, "--out-dir", out});
    CHECK(sim.code == 0);
    const auto mj = read(dir / "simulation.json");
    CHECK(mj["settle"]["pass"] == true);
    CHECK(mj["events"].size() == 6);

    CHECK(run({"mmc-verify", "--out-dir", out}).code == 0);
    CHECK(read(dir / "mmc.json")["reduction_valid"] == true);

    const auto rep = run({"report", "--out-dir", out});
    CHECK(rep.code == 0);
    const auto rj = read(dir / "report.json");
    CHECK(rj["stages"].size() == 4);
    CHECK(rep.out.find("powerflow") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
    CHECK(run({}).code == 1);
    CHECK(run({"powerflow"}).code == 1);
    CHECK(run({"powerflow", case4, "--bogus"}).code == 1);
    CHECK(run({"powerflow", "/no/such/file.json"}).code == 1);
    CHECK(run({"powerflow", case4, "--droop", "nonsense"}).code == 1);
    CHECK(run({"simulate", scenario4, "--integrator", "euler"}).code == 1);
    CHECK(run({"--help"}).code == 0);
}
