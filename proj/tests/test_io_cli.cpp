#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "afree/io.hpp"
#include "afree/oscillation.hpp"
#include "test_helpers.hpp"

using namespace afree;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    fs::path dir = fs::temp_directory_path() / "afree_io_tests";
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Runs the CLI binary (path from the AFREE_CLI environment variable, set by
// ctest; falls back to ./afree for direct runs from the build directory)
// and returns its exit code.
int run_cli(const std::string& args) {
    const char* cli = std::getenv("AFREE_CLI");
    std::string binary = cli != nullptr ? cli : "./afree";
    std::string cmd = binary + " " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

fs::path cli_out(const std::string& name) {
    fs::path dir = temp_dir() / name;
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("json writer emits ordered keys and fixed floats", "[io]") {
    JsonWriter w;
    w.begin_object();
    w.field("name", "report");
    w.field("value", 0.1);
    w.field("count", 3);
    w.field("flag", true);
    w.key("list").begin_array();
    w.value(1.0);
    w.value(2.5);
    w.end_array();
    w.end_object();
    std::string text = w.str();
    CHECK(text.find("\"name\": \"report\"") != std::string::npos);
    CHECK(text.find("0.10000000000000001") != std::string::npos);  // %.17g of 0.1
    CHECK(text.find("\"name\"") < text.find("\"value\""));
    CHECK(nlohmann::json::parse(text).at("count") == 3);
}

TEST_CASE("operator files round-trip and reject malformed input", "[io]") {
    fs::path dir = temp_dir();
    LinearOperator div3 = divergence_operator(3);
    fs::path path = dir / "div3.json";
    atomic_write_file(path, operator_to_json_string(div3));

    LinearOperator loaded = load_operator_file(path);
    CHECK(loaded.num_vars() == 3);
    CHECK(loaded.state_dim() == 3);
    CHECK(loaded.num_equations() == 1);
    for (int i = 0; i < 3; ++i) CHECK((loaded.coeff(i) - div3.coeff(i)).norm() == 0.0);

    fs::path bad = dir / "bad.json";
    atomic_write_file(bad, "{\"N\": 2, \"d\": 2}\n");
    CHECK_THROWS_AS(load_operator_file(bad), ParseError);
    atomic_write_file(bad, "not json at all\n");
    CHECK_THROWS_AS(load_operator_file(bad), ParseError);
}

TEST_CASE("builtin operator names resolve", "[io]") {
    CHECK(resolve_operator("euler").state_dim() == 10);
    CHECK(resolve_operator("divergence-2d").num_vars() == 2);
    CHECK(resolve_operator("divergence-4d").num_vars() == 4);
    CHECK(resolve_operator("demo-nonconstant").state_dim() == 2);
    CHECK_THROWS_AS(resolve_operator("no-such-file.json"), ParseError);
}

TEST_CASE("measure files round-trip", "[io]") {
    fs::path dir = temp_dir();
    Eigen::VectorXd a(2), b(2);
    a << 0.0, 1.0;
    b << 2.0, -1.0;
    DiscreteYoungMeasure nu = DiscreteYoungMeasure::two_point(a, b, 0.25);
    fs::path path = dir / "nu.json";
    atomic_write_file(path, measure_to_json_string(nu));
    DiscreteYoungMeasure loaded = load_measure_file(path);
    REQUIRE(loaded.support_size() == 2);
    CHECK(measure_distance(loaded, nu) <= 1e-12);
}

TEST_CASE("field csv round-trips", "[io]") {
    fs::path dir = temp_dir();
    LinearOperator div2 = divergence_operator(2);
    LaminateSpec spec;
    spec.z1 = Eigen::Vector2d(0.0, 1.0);
    spec.z2 = Eigen::Vector2d(0.0, -1.0);
    spec.xi = Eigen::Vector2i(1, 0);
    PeriodicField field = synthesize_laminate(div2, spec, {16, 4});
    fs::path path = dir / "field.csv";
    atomic_write_file(path, field_to_csv(field));

    PeriodicField loaded = load_field_csv(path);
    REQUIRE(loaded.grid().dims() == field.grid().dims());
    REQUIRE(loaded.components() == field.components());
    double diff = 0.0;
    for (std::int64_t node = 0; node < field.node_count(); ++node)
        diff = std::max(diff, (loaded.value(node) - field.value(node)).norm());
    CHECK(diff == 0.0);
}

TEST_CASE("cli rank-check exit codes", "[cli]") {
    fs::path ok = cli_out("rank_euler");
    CHECK(run_cli("rank-check --operator euler --samples 300 --out " + ok.string()) == 0);
    auto report = nlohmann::json::parse(read_file(ok / "rank_check.json"));
    CHECK(report.at("constant") == true);
    CHECK(report.at("rank") == 4);
    CHECK(report.at("evidence_only") == true);

    fs::path div = cli_out("rank_div");
    CHECK(run_cli("rank-check --operator divergence-3d --samples 100 --out " + div.string()) == 0);
    CHECK(nlohmann::json::parse(read_file(div / "rank_check.json")).at("rank") == 1);

    fs::path demo = cli_out("rank_demo");
    CHECK(run_cli("rank-check --operator demo-nonconstant --samples 100 --out " + demo.string()) == 1);
    auto demo_report = nlohmann::json::parse(read_file(demo / "rank_check.json"));
    CHECK(demo_report.at("constant") == false);
    CHECK(demo_report.contains("witness"));

    fs::path missing = cli_out("rank_missing");
    CHECK(run_cli("rank-check --operator /no/such/file.json --out " + missing.string()) == 2);
}

TEST_CASE("cli wave-cone exit codes", "[cli]") {
    fs::path member = cli_out("wc_member");
    CHECK(run_cli("wave-cone --operator divergence-2d --state 1,0 --out " + member.string()) == 0);

    // First counterexample state: determinant p(1)^3 = 1, not a member.
    fs::path non = cli_out("wc_non");
    std::string z1 = "1,1,0,0,0.66666666666666663,0,0,-0.33333333333333331,0,1.3333333333333333";
    CHECK(run_cli("wave-cone --operator euler --state " + z1 + " --out " + non.string()) == 1);
    auto report = nlohmann::json::parse(read_file(non / "wave_cone.json"));
    CHECK(report.at("member") == false);
    CHECK(report.at("z_rank") == 4);
}

TEST_CASE("cli laminate writes field, measure and residual", "[cli]") {
    fs::path out = cli_out("lam");
    CHECK(run_cli("laminate --operator divergence-2d --z1 0,1 --z2 0,-1 --lambda 0.5 --xi 1,0 "
                  "--dims 64,4 --out " +
                  out.string()) == 0);
    CHECK(fs::exists(out / "field.csv"));
    auto measure = nlohmann::json::parse(read_file(out / "young_measure.json"));
    CHECK(measure.at("atoms").size() == 2);
    auto residual = nlohmann::json::parse(read_file(out / "residual.json"));
    CHECK(residual.at("residual_l2").get<double>() <= 1e-10);

    // A rigid pair is refused with exit 1.
    fs::path rigid = cli_out("lam_rigid");
    CHECK(run_cli("laminate --operator divergence-2d --z1 1,0 --z2 -1,0 --xi 1,0 --dims 16,4 --out " +
                  rigid.string()) == 1);
}

TEST_CASE("cli rigidity demo field reconstructs", "[cli]") {
    fs::path out = cli_out("rigidity");
    CHECK(run_cli("rigidity --operator euler --z1 1,0,0,0,0,0,0,0,0,1 --z2 0,0,0,0,0,0,0,0,0,0 "
                  "--demo-dims 6,6,6,6 --seed 3 --out " +
                  out.string()) == 0);
    auto report = nlohmann::json::parse(read_file(out / "rigidity.json"));
    double error = report.at("reconstruction_error").get<double>();
    double e_norm = report.at("e_norm").get<double>();
    double kappa = report.at("kappa").get<double>();
    double h = report.at("grid_h").get<double>();
    CHECK(error <= kappa * (e_norm + 2.0 * h));
}

TEST_CASE("cli qc-probe reports a certified violation", "[cli]") {
    fs::path out = cli_out("probe");
    CHECK(run_cli("qc-probe --operator divergence-2d --g neg-dir-sq:0,1 --z 0.5,0.5 --cutoff 2 "
                  "--dims 8,8 --restarts 5 --out " +
                  out.string()) == 1);
    auto report = nlohmann::json::parse(read_file(out / "probe.json"));
    CHECK(report.at("violation_certified") == true);
    CHECK(report.at("gap").get<double>() < 0.0);
    CHECK(fs::exists(out / "witness.csv"));

    fs::path convex = cli_out("probe_convex");
    CHECK(run_cli("qc-probe --operator divergence-2d --g norm-sq --z 0.5,0.5 --cutoff 2 --dims 8,8 "
                  "--restarts 3 --out " +
                  convex.string()) == 0);
}

TEST_CASE("cli euler-counterexample certifies and is deterministic", "[cli]") {
    fs::path a = cli_out("ce_a");
    fs::path b = cli_out("ce_b");
    std::string base = "euler-counterexample --kappa 1 --gamma-exp 2 --gamma 2 --test-degree 2 --out ";
    CHECK(run_cli(base + a.string()) == 0);
    CHECK(run_cli(base + b.string()) == 0);
    CHECK(read_file(a / "counterexample.json") == read_file(b / "counterexample.json"));
    CHECK(read_file(a / "manifest.json") == read_file(b / "manifest.json"));

    auto report = nlohmann::json::parse(read_file(a / "counterexample.json"));
    CHECK(report.at("certified") == true);
    CHECK(report.at("det_numeric").get<double>() == Catch::Approx(22.5));
    CHECK(report.at("det_formula").get<double>() == Catch::Approx(-22.5));
    CHECK(report.at("jensen").at("separating_gap").get<double>() < 0.0);

    // Degenerate gamma: exit 2.
    fs::path degenerate = cli_out("ce_deg");
    CHECK(run_cli("euler-counterexample --gamma 1 --out " + degenerate.string()) == 2);

    // The exported measure bundle feeds mvs-check.
    fs::path mvs = cli_out("ce_mvs");
    CHECK(run_cli("mvs-check --measure " + (a / "nu_tilde.json").string() + " --test-degree 2 --out " +
                  mvs.string()) == 0);
    auto mvs_report = nlohmann::json::parse(read_file(mvs / "mvs_check.json"));
    CHECK(mvs_report.at("pass") == true);
    CHECK(mvs_report.at("max_residual").get<double>() <= 1e-12);
}
