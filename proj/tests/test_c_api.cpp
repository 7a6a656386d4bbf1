#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "doctest.h"
#include "dlsslab/dlsslab.h"

namespace fs = std::filesystem;

namespace {

struct Cfg {
    dlsslab_config* p = nullptr;
    Cfg() { REQUIRE(dlsslab_config_new(&p) == DLSSLAB_OK); }
    ~Cfg() { dlsslab_config_free(p); }
};

std::vector<double> bump(std::size_t n, double a) {
    std::vector<double> v(n);
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        v[k] = 1.0 + a * std::cos(2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n));
        s += v[k];
    }
    for (double& x : v) x *= static_cast<double>(n) / s;
    return v;
}

int shell(const std::string& cmd) {
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_CASE("version and status names") {
    CHECK(std::string(dlsslab_version()).size() > 0);
    CHECK(std::string(dlsslab_status_name(DLSSLAB_CONFIG_ERROR)) == "config error");
    CHECK(std::string(dlsslab_status_name(static_cast<dlsslab_status>(99))) == "unknown status");
}

TEST_CASE("config handle") {
    Cfg c;
    char buf[64];
    std::size_t len = 0;
    CHECK(dlsslab_config_get(c.p, "n", buf, sizeof buf, &len) == DLSSLAB_OK);
    CHECK(std::string(buf) == "64");
    CHECK(len == 2);
    CHECK(dlsslab_config_get(c.p, "datum", buf, 4, &len) == DLSSLAB_BUFFER_TOO_SMALL);
    CHECK(len == std::string("bls:m=2,eps=0.001").size());

    uint64_t h0 = 0, h1 = 0;
    CHECK(dlsslab_config_hash(c.p, &h0) == DLSSLAB_OK);
    CHECK(dlsslab_config_set(c.p, "n", "32") == DLSSLAB_OK);
    CHECK(dlsslab_config_hash(c.p, &h1) == DLSSLAB_OK);
    CHECK(h0 != h1);

    CHECK(dlsslab_config_set(c.p, "no.such.key", "1") == DLSSLAB_CONFIG_ERROR);
    CHECK(std::string(dlsslab_last_error()).find("no.such.key") != std::string::npos);
    CHECK(dlsslab_config_assign(c.p, "solver.t_max=0.25") == DLSSLAB_OK);
    CHECK(std::string(dlsslab_last_error()).empty());
    CHECK(dlsslab_config_set(nullptr, "n", "1") == DLSSLAB_INVALID_ARGUMENT);
    CHECK(dlsslab_config_load_file(c.p, "/nonexistent.conf") == DLSSLAB_CONFIG_ERROR);

    CHECK(dlsslab_config_key_count() > 30);
    CHECK(std::string(dlsslab_config_key(0)) == "n");
    CHECK(dlsslab_config_key(100000) == nullptr);
}

TEST_CASE("kernels") {
    const std::vector<double> u(8, 1.0);
    std::vector<double> out(8, 7.0);
    REQUIRE(dlsslab_rhs(8, u.data(), out.data()) == DLSSLAB_OK);
    for (double v : out) CHECK(v == 0.0);

    const auto r = bump(16, 0.5);
    out.assign(16, 0.0);
    REQUIRE(dlsslab_rhs(16, r.data(), out.data()) == DLSSLAB_OK);
    double sum = 0.0;
    for (double v : out) sum += v;
    CHECK(std::abs(sum) < 1e-9);
    // The peak of a cosine bump flattens.
    CHECK(out[0] < 0.0);

    dlsslab_record rec{};
    REQUIRE(dlsslab_functionals(8, u.data(), &rec) == DLSSLAB_OK);
    CHECK(rec.entropy == 0.0);
    CHECK(rec.mass == doctest::Approx(1.0));
    REQUIRE(dlsslab_functionals(16, r.data(), &rec) == DLSSLAB_OK);
    CHECK(rec.entropy > 0.0);

    std::vector<double> neg = {2.0, 0.0};
    CHECK(dlsslab_rhs(2, neg.data(), out.data()) == DLSSLAB_POSITIVITY_REQUIRED);
    std::vector<double> heavy = {2.0, 2.0};
    CHECK(dlsslab_rhs(2, heavy.data(), out.data()) == DLSSLAB_INVALID_ARGUMENT);
    CHECK(dlsslab_rhs(1, u.data(), out.data()) == DLSSLAB_INVALID_ARGUMENT);

    dlsslab_distance d{};
    const auto q = bump(4, -0.3);
    REQUIRE(dlsslab_distance_bounds(4, bump(4, 0.4).data(), q.data(), 8, &d) == DLSSLAB_OK);
    CHECK(d.lower <= d.upper_optimized * (1 + 1e-9));
    CHECK(d.upper_optimized <= d.upper_construction * (1 + 1e-9));
    CHECK(d.converged == 1);
    CHECK(dlsslab_distance_bounds(4, q.data(), q.data(), 0, &d) != DLSSLAB_OK);
}

TEST_CASE("trajectory handle") {
    Cfg c;
    REQUIRE(dlsslab_config_set(c.p, "n", "16") == DLSSLAB_OK);
    REQUIRE(dlsslab_config_set(c.p, "solver.t_max", "0.001") == DLSSLAB_OK);
    dlsslab_trajectory* t = nullptr;
    REQUIRE(dlsslab_simulate(c.p, &t) == DLSSLAB_OK);
    CHECK(dlsslab_trajectory_grid(t) == 16);
    const std::size_t nr = dlsslab_trajectory_records(t);
    REQUIRE(nr > 1);
    CHECK(dlsslab_trajectory_states(t) == nr);
    dlsslab_record first{}, last{};
    CHECK(dlsslab_trajectory_record(t, 0, &first) == DLSSLAB_OK);
    CHECK(dlsslab_trajectory_record(t, nr - 1, &last) == DLSSLAB_OK);
    CHECK(last.entropy < first.entropy);
    CHECK(last.t == doctest::Approx(0.001));
    CHECK(dlsslab_trajectory_record(t, nr, &last) == DLSSLAB_INVALID_ARGUMENT);
    std::vector<double> rho(16);
    double time = -1.0;
    CHECK(dlsslab_trajectory_state(t, nr - 1, &time, rho.data(), rho.size()) == DLSSLAB_OK);
    CHECK(time == last.t);
    CHECK(dlsslab_trajectory_state(t, 0, &time, rho.data(), 8) == DLSSLAB_BUFFER_TOO_SMALL);
    dlsslab_trajectory_free(t);

    REQUIRE(dlsslab_config_set(c.p, "datum", "bls:m=1") == DLSSLAB_OK);
    REQUIRE(dlsslab_config_set(c.p, "n", "1") == DLSSLAB_OK);
    CHECK(dlsslab_simulate(c.p, &t) == DLSSLAB_CONFIG_ERROR);
    CHECK(t == nullptr);
}

TEST_CASE("run with a log callback") {
    Cfg c;
    const fs::path out = fs::temp_directory_path() / "dlsslab_test_c_api_run";
    fs::remove_all(out);
    REQUIRE(dlsslab_config_set(c.p, "out", out.string().c_str()) == DLSSLAB_OK);
    REQUIRE(dlsslab_config_set(c.p, "n", "8") == DLSSLAB_OK);
    REQUIRE(dlsslab_config_set(c.p, "solver.t_max", "0.001") == DLSSLAB_OK);
    std::vector<std::string> lines;
    auto sink = [](const char* text, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(text); };
    CHECK(dlsslab_run("simulate", c.p, sink, &lines) == 0);
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].rfind("simulate:", 0) == 0);
    CHECK(fs::exists(out / "summary.json"));
    lines.clear();
    CHECK(dlsslab_run("bogus", c.p, sink, &lines) == 2);
    CHECK(std::string(dlsslab_last_error()).find("bogus") != std::string::npos);
    fs::remove_all(out);
}

TEST_CASE("command-line tool") {
    const char* cli = std::getenv("DLSSLAB_CLI");
    if (!cli) {
        MESSAGE("DLSSLAB_CLI not set; skipping");
        return;
    }
    const fs::path dir = fs::temp_directory_path() / "dlsslab_test_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string exe = std::string("\"") + cli + "\"";
    const std::string quiet = " >/dev/null 2>&1";

    CHECK(shell(exe + " --version" + quiet) == 0);
    CHECK(shell(exe + " --list-keys >" + (dir / "keys.txt").string()) == 0);
    CHECK(shell(exe + quiet) == 2);
    CHECK(shell(exe + " frobnicate" + quiet) == 2);
    CHECK(shell(exe + " simulate --set nope=1" + quiet) == 2);
    CHECK(shell(exe + " simulate --n two" + quiet) == 2);
    CHECK(shell(exe + " simulate --datum bls:m=16,eps=0 --out " + dir.string() + quiet) == 2);

    std::ofstream(dir / "run.conf") << "# small run\nn = 12\nsolver.t_max = 0.001\n";
    const std::string base = exe + " simulate --config " + (dir / "run.conf").string() + " --datum bls:m=8,eps=0.001";
    REQUIRE(shell(base + " --out " + (dir / "a").string() + quiet) == 0);
    REQUIRE(shell(base + " --out " + (dir / "b").string() + " --set solver.t_max=0.001" + quiet) == 0);
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(f), {});
    };
    CHECK(slurp(dir / "a" / "states.csv") == slurp(dir / "b" / "states.csv"));
    CHECK(slurp(dir / "a" / "states.csv").find("rho_12") != std::string::npos);

    std::ofstream(dir / "check.conf") << "check.samples = 50\ncheck.grids = 2,4\ncheck.scan_max = 1\ncheck.scan_step = 0.1\n"
                                         "check.decay_n = 8\ncheck.admissibility_samples = 100\nsolver.t_max = 0.01\n";
    CHECK(shell(exe + " check --config " + (dir / "check.conf").string() + " --out " + (dir / "c").string() + quiet) == 0);
    CHECK(fs::exists(dir / "c" / "check" / "decay.json"));
    fs::remove_all(dir);
}
