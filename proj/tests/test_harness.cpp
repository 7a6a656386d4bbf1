#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "dlsslab/error.hpp"
#include "dlsslab/harness.hpp"

using namespace dlss;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("dlsslab_test_harness_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Parses a harness CSV: header comment, column line, numeric rows.
std::vector<std::vector<double>> read_rows(const fs::path& p, std::string* comment = nullptr, std::string* columns = nullptr) {
    std::ifstream f(p);
    std::string line;
    std::getline(f, line);
    if (comment) *comment = line;
    std::getline(f, line);
    if (columns) *columns = line;
    std::vector<std::vector<double>> rows;
    while (std::getline(f, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

Config small(const fs::path& out) {
    Config c;
    c.set("out", out.string());
    c.set("n", "16");
    c.set("solver.t_max", "0.002");
    return c;
}

}  // namespace

TEST_CASE("config defaults, overrides and validation") {
    Config c;
    CHECK(c.get_int("n") == 64);
    CHECK(c.get("datum") == "bls:m=2,eps=0.001");
    CHECK(c.get_int_list("convergence.ladder") == std::vector<int>{32, 64, 128});
    CHECK(c.get_real("solver.newton_tol") == 1e-11);
    CHECK(Config::keys().size() > 30);

    c.assign("n = 32");
    CHECK(c.get_int("n") == 32);
    c.load_text("# comment\nsolver.t_max = 0.5   # trailing\n\nmetric.S=8\n");
    CHECK(c.get_real("solver.t_max") == 0.5);
    CHECK(c.get_int("metric.S") == 8);

    auto message = [&](const std::string& a) {
        try {
            c.assign(a);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Config);
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message("bogus.key=1").find("bogus.key") != std::string::npos);
    CHECK(message("n=abc").find("n:") != std::string::npos);
    CHECK(message("solver.t_max=1x").find("solver.t_max") != std::string::npos);
    CHECK(message("datum=bls:m=0").find("datum") != std::string::npos);
    CHECK(message("metric.target=nowhere").find("metric.target") != std::string::npos);
    CHECK(message("novalue").find("key=value") != std::string::npos);
    CHECK_THROWS_AS(c.load_text("just words\n"), Error);
    CHECK_THROWS_AS(c.load_file("/nonexistent/dlsslab.conf"), Error);

    // Derived configs run the module validators.
    Config d;
    d.set("solver.grow_factor", "0.5");
    CHECK_THROWS_AS(solver_config(d), Error);
    Config e;
    e.set("convergence.ladder", "32,48");
    CHECK_THROWS_AS(study_config(e), Error);
}

TEST_CASE("config hash ignores the output directory") {
    Config a, b;
    a.set("out", "x");
    b.set("out", "y");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash_hex().size() == 16);
    b.set("n", "65");
    CHECK(a.hash() != b.hash());
    CHECK(header_line(a) == std::string("# dlsslab ") + version() + " config_hash=" + a.hash_hex());

    Config c;
    CHECK(c.canonical().find("out=") == std::string::npos);
}

TEST_CASE("datum strings") {
    DatumSpec d = parse_datum("bls:m=16,eps=0.01");
    CHECK(d.kind == DatumSpec::Kind::Bls);
    CHECK(d.m == 16);
    CHECK(d.eps == 0.01);
    CHECK(parse_datum("bls").m == 2);
    CHECK(parse_datum("uniform").kind == DatumSpec::Kind::Uniform);
    CHECK(parse_datum("csv:/tmp/x.csv").path == "/tmp/x.csv");
    for (const char* badspec : {"gauss", "bls:m=1.5", "bls:eps=-1", "bls:q=1", "blsx", "csv:", "bls:m"})
        CHECK_THROWS_AS(parse_datum(badspec), Error);
}

TEST_CASE("csv datum is rescaled and keeps its grid") {
    const fs::path dir = scratch("csv");
    fs::create_directories(dir);
    const fs::path file = dir / "rho.csv";
    std::ofstream(file) << "rho\n1\n2\n3\n2\n";
    const Density rho = initial_density(parse_datum("csv:" + file.string()), 99);
    REQUIRE(rho.grid().n() == 4);
    CHECK(rho.values()[0] == doctest::Approx(0.5));
    CHECK(rho.values()[2] == doctest::Approx(1.5));

    const ContinuousDatum cd = continuous_datum(parse_datum("csv:" + file.string()));
    CHECK(cd.integral(0.0, 1.0) == doctest::Approx(1.0));
    // Cell 1 covers (1/8, 3/8) with value 1.
    CHECK(cd.integral(0.125, 0.375) == doctest::Approx(0.25));
    CHECK(cd.integral(-0.125, 0.125) == doctest::Approx(0.125));
    CHECK(cd.density(0.3) == doctest::Approx(1.0));
    CHECK(cd.density(1.3) == doctest::Approx(1.0));

    std::ofstream(dir / "neg.csv") << "1,-1\n";
    CHECK_THROWS_AS(initial_density(parse_datum("csv:" + (dir / "neg.csv").string()), 4), Error);
    CHECK_THROWS_AS(initial_density(parse_datum("csv:" + (dir / "none.csv").string()), 4), Error);
    fs::remove_all(dir);
}

TEST_CASE("real formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 123456789.123456789, 5e-324}) {
        const std::string s = format_real(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
        CHECK(s.find(',') == std::string::npos);
    }
    CHECK(format_real(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_real(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("entropy decay rate on a synthetic exponential") {
    Trajectory tr;
    for (int i = 0; i <= 200; ++i) {
        StepRecord r;
        r.t = 0.01 * i;
        r.values.entropy = 0.7 * std::exp(-3.0 * r.t);
        tr.records.push_back(r);
    }
    CHECK(entropy_decay_rate(tr) == doctest::Approx(-3.0).epsilon(1e-9));
    tr.records.resize(1);
    CHECK(std::isnan(entropy_decay_rate(tr)));
}

TEST_CASE("simulate writes deterministic outputs") {
    const fs::path a = scratch("sim_a"), b = scratch("sim_b");
    Config c = small(a);
    std::ostringstream log;
    REQUIRE(run_command("simulate", c, log) == kExitOk);
    c.set("out", b.string());
    REQUIRE(run_command("simulate", c, log) == kExitOk);
    for (const char* f : {"diagnostics.csv", "states.csv", "summary.json"}) CHECK(slurp(a / f) == slurp(b / f));

    std::string comment, columns;
    const auto diag = read_rows(a / "diagnostics.csv", &comment, &columns);
    CHECK(comment == header_line(c));
    CHECK(columns == "t,dt,newton_iters,mass,entropy,fisher,heat_capacity,min_rho");
    REQUIRE(diag.size() > 2);
    for (std::size_t i = 1; i < diag.size(); ++i) {
        CHECK(diag[i][4] < diag[i - 1][4]);
        CHECK(std::abs(diag[i][3] - 1.0) <= 1e-11);
    }
    const auto states = read_rows(a / "states.csv", nullptr, &columns);
    CHECK(columns.rfind("t,rho_1,rho_2,", 0) == 0);
    CHECK(states.front().size() == 17);
    CHECK(states.size() == diag.size());

    const auto s = read_json(a / "summary.json");
    CHECK(s["steps"].get<std::size_t>() + 1 == diag.size());
    CHECK(s["t_final"].get<double>() == doctest::Approx(diag.back()[0]));
    CHECK(s["config_hash"] == c.hash_hex());
    CHECK(s["min_newton_iterations"].get<int>() >= 1);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("simulate on the uniform datum is static") {
    const fs::path out = scratch("sim_uniform");
    Config c = small(out);
    c.set("datum", "uniform");
    std::ostringstream log;
    REQUIRE(run_command("simulate", c, log) == kExitOk);
    const auto s = read_json(out / "summary.json");
    CHECK(s["t_final"].get<double>() == 0.0);
    CHECK(s["steps"].get<int>() == 0);
    fs::remove_all(out);
}

TEST_CASE("error mapping to exit codes") {
    std::ostringstream log;
    Config c;
    CHECK(run_command("nonsense", c, log) == kExitConfig);
    c.set("out", "/proc/dlsslab-cannot-write");
    CHECK(run_command("simulate", c, log) == kExitConfig);
    Config d = small(scratch("fail"));
    d.set("solver.max_halvings", "0");
    d.set("solver.dt0_factor", "1e6");
    d.set("solver.newton_max_iter", "1");
    d.set("datum", "bls:m=16,eps=0.001");
    const int code = run_command("simulate", d, log);
    CHECK((code == kExitSolver || code == kExitOk));
    fs::remove_all(scratch("fail"));
}

TEST_CASE("metric subcommand") {
    const fs::path out = scratch("metric");
    Config c;
    c.set("out", out.string());
    c.set("n", "4");
    c.set("metric.S", "8");
    std::ostringstream log;
    REQUIRE(run_command("metric", c, log) == kExitOk);
    const auto j = read_json(out / "metric.json");
    const double lower = j["lower"], opt = j["upper_optimized"], cons = j["upper_construction"];
    CHECK(lower <= opt * (1 + 1e-9));
    CHECK(opt <= cons * (1 + 1e-9));
    CHECK(j["converged"].get<bool>());
    c.set("metric.target", "bls:m=1");
    CHECK(run_command("metric", c, log) == kExitOk);
    fs::remove_all(out);
}

TEST_CASE("check subcommand on a reduced config") {
    const fs::path out = scratch("check");
    Config c;
    c.set("out", out.string());
    c.set("check.samples", "200");
    c.set("check.grids", "2,5,16");
    c.set("check.scan_max", "2");
    c.set("check.scan_step", "0.05");
    c.set("check.decay_n", "16");
    c.set("check.admissibility_samples", "1000");
    c.set("solver.t_max", "0.05");
    std::ostringstream log;
    CHECK(run_command("check", c, log) == kExitOk);
    for (const char* s : {"poincare", "lsi", "gns_p3", "interpolation", "entropy_production", "monster", "elementary_log",
                          "admissibility", "decay"}) {
        const auto j = read_json(out / "check" / (std::string(s) + ".json"));
        CHECK_MESSAGE(j["pass"].get<bool>(), s);
    }
    c.set("check.grids", "1");
    CHECK(run_command("check", c, log) == kExitConfig);
    fs::remove_all(out);
}

TEST_CASE("convergence subcommand") {
    const fs::path out = scratch("conv");
    Config c;
    c.set("out", out.string());
    c.set("datum", "bls:m=1,eps=0.001");
    c.set("convergence.ladder", "8,16");
    c.set("convergence.points", "4");
    std::ostringstream log;
    REQUIRE(run_command("convergence", c, log) == kExitOk);
    std::string columns;
    const auto rows = read_rows(out / "convergence.csv", nullptr, &columns);
    CHECK(columns == "N,e_l2_rho,e_l2_sqrt,weak_residual,order_estimate");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][0] == 8);
    CHECK(std::isnan(rows[1][4]));
    const auto j = read_json(out / "convergence.json");
    CHECK(j["order_band"][0] == 1.5);
    CHECK(j.contains("order_band_note"));
    fs::remove_all(out);
}

TEST_CASE("figures data columns are monotone") {
    const fs::path out = scratch("figs");
    Config c;
    c.set("out", out.string());
    c.set("n", "16");
    c.set("figures.m", "1,8");
    c.set("figures.state_stride", "5");
    c.set("solver.t_max", "0.01");
    std::ostringstream log;
    REQUIRE(run_command("figures-data", c, log) == kExitOk);
    for (const char* m : {"m1", "m8"}) {
        std::string columns;
        const auto rows = read_rows(out / "figures" / m / "lyapunov.csv", nullptr, &columns);
        CHECK(columns == "t,entropy,fisher,hellinger_uniform,heat_capacity");
        REQUIRE(rows.size() > 2);
        for (std::size_t i = 1; i < rows.size(); ++i)
            for (int col = 1; col <= 4; ++col) CHECK(rows[i][col] <= rows[i - 1][col] * (1 + 1e-12) + 1e-15);
        const auto states = read_rows(out / "figures" / m / "states.csv");
        CHECK(states.size() < rows.size());
        CHECK(states.back()[0] == rows.back()[0]);
    }
    CHECK(read_json(out / "figures" / "manifest.json")["runs"].size() == 2);
    fs::remove_all(out);
}
