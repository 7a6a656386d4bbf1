#include "dlsslab/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "dlsslab/error.hpp"
#include "dlsslab/functionals.hpp"
#include "dlsslab/inequalities.hpp"
#include "dlsslab/mobility.hpp"
#include "dlsslab/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dlss {

const char* version() noexcept { return DLSSLAB_VERSION; }

namespace {

enum class Kind { Int, Long, U64, Real, Text, IntList, RealList, Datum, Target };

struct KeySpec {
    const char* key;
    const char* value;
    Kind kind;
};

const KeySpec kSchema[] = {
    {"n", "64", Kind::Int},
    {"datum", "bls:m=2,eps=0.001", Kind::Datum},
    {"seed", "1", Kind::U64},
    {"out", "dlsslab-out", Kind::Text},
    {"solver.dt0_factor", "0.01", Kind::Real},
    {"solver.newton_tol", "1e-11", Kind::Real},
    {"solver.newton_max_iter", "25", Kind::Int},
    {"solver.shrink_threshold", "4", Kind::Int},
    {"solver.grow_threshold", "3", Kind::Int},
    {"solver.grow_factor", "1.05", Kind::Real},
    {"solver.shrink_factor", "0.5", Kind::Real},
    {"solver.entropy_stop", "1e-14", Kind::Real},
    {"solver.t_max", "1", Kind::Real},
    {"solver.positivity_floor", "1e-300", Kind::Real},
    {"solver.max_halvings", "40", Kind::Int},
    {"solver.max_steps", "0", Kind::Long},
    {"output.state_stride", "1", Kind::Int},
    {"metric.S", "32", Kind::Int},
    {"metric.max_iterations", "5000", Kind::Int},
    {"metric.rel_tol", "1e-8", Kind::Real},
    {"metric.barrier_floor", "1e-12", Kind::Real},
    {"metric.target", "random", Kind::Target},
    {"convergence.ladder", "32,64,128", Kind::IntList},
    {"convergence.dt_factor", "0.01", Kind::Real},
    {"convergence.k", "1", Kind::Int},
    {"convergence.window_scale", "1", Kind::Real},
    {"convergence.points", "16", Kind::Int},
    {"convergence.decay_factor", "10", Kind::Real},
    {"check.samples", "10000", Kind::Int},
    {"check.grids", "2,3,4,8,16,32,64,128", Kind::IntList},
    {"check.gns_p", "2,3,4,6", Kind::RealList},
    {"check.scan_max", "10", Kind::Real},
    {"check.scan_step", "0.01", Kind::Real},
    {"check.decay_n", "64", Kind::Int},
    {"check.decay_m", "2", Kind::Int},
    {"check.admissibility_samples", "100000", Kind::Int},
    {"figures.m", "1,2,8,16", Kind::IntList},
    {"figures.eps", "0.001", Kind::Real},
    {"figures.state_stride", "10", Kind::Int},
};

const KeySpec* find_key(const std::string& key) {
    for (const KeySpec& s : kSchema)
        if (key == s.key) return &s;
    return nullptr;
}

[[noreturn]] void bad(const std::string& key, const std::string& what) {
    throw Error(ErrorCode::Config, key + ": " + what);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(const std::string& s, T& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto r = std::from_chars(first, last, out);
    return r.ec == std::errc() && r.ptr == last && first != last;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

double parse_real(const std::string& key, const std::string& v) {
    double x = 0.0;
    if (!parse_number(v, x) || !std::isfinite(x)) bad(key, "expected a real number, got '" + v + "'");
    return x;
}

long parse_long(const std::string& key, const std::string& v) {
    long x = 0;
    if (!parse_number(v, x)) bad(key, "expected an integer, got '" + v + "'");
    return x;
}

void validate_value(const KeySpec& s, const std::string& v) {
    const std::string key = s.key;
    switch (s.kind) {
        case Kind::Int: {
            const long x = parse_long(key, v);
            if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) bad(key, "out of range");
            break;
        }
        case Kind::Long: parse_long(key, v); break;
        case Kind::U64: {
            std::uint64_t x = 0;
            if (!parse_number(v, x)) bad(key, "expected an unsigned integer, got '" + v + "'");
            break;
        }
        case Kind::Real: parse_real(key, v); break;
        case Kind::Text:
            if (v.empty()) bad(key, "must not be empty");
            break;
        case Kind::IntList:
            if (v.empty()) bad(key, "expected a comma-separated list");
            for (const auto& p : split(v, ',')) parse_long(key, p);
            break;
        case Kind::RealList:
            if (v.empty()) bad(key, "expected a comma-separated list");
            for (const auto& p : split(v, ',')) parse_real(key, p);
            break;
        case Kind::Datum:
            try {
                parse_datum(v);
            } catch (const Error& e) {
                bad(key, e.what());
            }
            break;
        case Kind::Target:
            if (v != "random" && v != "uniform") {
                try {
                    parse_datum(v);
                } catch (const Error& e) {
                    bad(key, std::string("expected random, uniform or a datum: ") + e.what());
                }
            }
            break;
    }
}

int positive_int(const Config& c, const std::string& key, int min) {
    const int v = c.get_int(key);
    if (v < min) bad(key, "must be >= " + std::to_string(min));
    return v;
}

void ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create directory " + p.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + p.string());
    return f;
}

void write_json(const fs::path& p, const json& j) {
    std::ofstream f = open_out(p);
    f << j.dump(2) << "\n";
    if (!f) throw Error(ErrorCode::Io, "write failed: " + p.string());
}

json stamp(const Config& c) { return json{{"dlsslab_version", version()}, {"config_hash", c.hash_hex()}}; }

json real_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_state_row(std::ostream& os, double t, const Density& rho) {
    os << format_real(t);
    for (double v : rho.values()) os << ',' << format_real(v);
    os << '\n';
}

void write_state_header(std::ostream& os, int n) {
    os << 't';
    for (int k = 1; k <= n; ++k) os << ",rho_" << k;
    os << '\n';
}

double uniform_hellinger_sq(const Density& rho) {
    double s = 0.0;
    for (double v : rho.values()) {
        const double d = std::sqrt(v) - 1.0;
        s += d * d;
    }
    return rho.grid().delta() * s;
}

json report_json(const InequalityReport& r) {
    json comps = json::object();
    for (const auto& [k, v] : r.components) comps[k] = real_or_null(v);
    return json{{"name", r.name},         {"samples", r.samples},     {"worst_margin", real_or_null(r.worst_margin)},
                {"worst_case", r.worst_case}, {"worst_input", r.worst_input}, {"tolerance", r.tolerance},
                {"pass", r.pass},         {"components", comps}};
}

}  // namespace

Config::Config() {
    for (const KeySpec& s : kSchema) values_[s.key] = s.value;
}

void Config::set(const std::string& key, const std::string& value) {
    const KeySpec* s = find_key(key);
    if (!s) throw Error(ErrorCode::Config, key + ": unknown key");
    const std::string v = trim(value);
    validate_value(*s, v);
    values_[key] = v;
}

void Config::assign(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Config, "expected key=value, got '" + assignment + "'");
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void Config::load_text(const std::string& text, const std::string& origin) {
    std::istringstream is(text);
    std::string line;
    int number = 0;
    while (std::getline(is, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.find('=') == std::string::npos)
            throw Error(ErrorCode::Config, origin + ":" + std::to_string(number) + ": expected key = value");
        assign(line);
    }
}

void Config::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::Config, "config: cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    load_text(ss.str(), path);
}

const std::string& Config::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw Error(ErrorCode::Config, key + ": unknown key");
    return it->second;
}

int Config::get_int(const std::string& key) const { return static_cast<int>(parse_long(key, get(key))); }
long Config::get_long(const std::string& key) const { return parse_long(key, get(key)); }

std::uint64_t Config::get_u64(const std::string& key) const {
    std::uint64_t x = 0;
    if (!parse_number(get(key), x)) bad(key, "expected an unsigned integer");
    return x;
}

double Config::get_real(const std::string& key) const { return parse_real(key, get(key)); }

std::vector<int> Config::get_int_list(const std::string& key) const {
    std::vector<int> out;
    for (const auto& p : split(get(key), ',')) out.push_back(static_cast<int>(parse_long(key, p)));
    return out;
}

std::vector<double> Config::get_real_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& p : split(get(key), ',')) out.push_back(parse_real(key, p));
    return out;
}

std::vector<std::string> Config::keys() {
    std::vector<std::string> k;
    for (const KeySpec& s : kSchema) k.emplace_back(s.key);
    return k;
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        if (k == "out") continue;
        out += k + "=" + v + "\n";
    }
    return out;
}

std::uint64_t Config::hash() const {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : canonical()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string Config::hash_hex() const {
    char buf[17];
    const auto r = std::to_chars(buf, buf + 16, hash(), 16);
    std::string s(buf, r.ptr);
    return std::string(16 - s.size(), '0') + s;
}

DatumSpec parse_datum(const std::string& text) {
    DatumSpec d;
    if (text == "uniform") {
        d.kind = DatumSpec::Kind::Uniform;
        return d;
    }
    if (text.rfind("csv:", 0) == 0) {
        d.kind = DatumSpec::Kind::Csv;
        d.path = text.substr(4);
        if (d.path.empty()) throw Error(ErrorCode::Config, "csv datum needs a path");
        return d;
    }
    if (text.rfind("bls", 0) != 0) throw Error(ErrorCode::Config, "unknown datum '" + text + "'");
    d.kind = DatumSpec::Kind::Bls;
    if (text.size() > 3) {
        if (text[3] != ':') throw Error(ErrorCode::Config, "unknown datum '" + text + "'");
        for (const auto& part : split(text.substr(4), ',')) {
            const auto eq = part.find('=');
            if (eq == std::string::npos) throw Error(ErrorCode::Config, "datum parameter '" + part + "' needs '='");
            const std::string k = trim(part.substr(0, eq));
            const std::string v = trim(part.substr(eq + 1));
            if (k == "m") {
                long m = 0;
                if (!parse_number(v, m) || m < 1 || m > 64) throw Error(ErrorCode::Config, "datum m must be an integer in [1, 64]");
                d.m = static_cast<int>(m);
            } else if (k == "eps") {
                double e = 0.0;
                if (!parse_number(v, e) || !(e > 0.0) || !std::isfinite(e)) throw Error(ErrorCode::Config, "datum eps must be > 0");
                d.eps = e;
            } else {
                throw Error(ErrorCode::Config, "unknown datum parameter '" + k + "'");
            }
        }
    }
    return d;
}

std::vector<double> read_csv_values(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::Config, "datum: cannot read " + path);
    std::vector<double> v;
    std::string line;
    while (std::getline(f, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        for (const auto& cell : split(line, ',')) {
            if (cell.empty()) continue;
            double x = 0.0;
            if (!parse_number(cell, x)) {
                if (v.empty()) continue;  // header row
                throw Error(ErrorCode::Config, "datum: bad number '" + cell + "' in " + path);
            }
            if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorCode::Config, "datum: values must be finite and >= 0");
            v.push_back(x);
        }
    }
    if (v.size() < 2) throw Error(ErrorCode::Config, "datum: need at least two values in " + path);
    double mass = 0.0;
    for (double x : v) mass += x;
    if (!(mass > 0.0)) throw Error(ErrorCode::Config, "datum: values sum to zero");
    mass /= static_cast<double>(v.size());
    for (double& x : v) x /= mass;
    return v;
}

ContinuousDatum continuous_datum(const DatumSpec& spec) {
    switch (spec.kind) {
        case DatumSpec::Kind::Uniform: return uniform_datum();
        case DatumSpec::Kind::Bls: return bls_datum(spec.m, spec.eps);
        case DatumSpec::Kind::Csv: break;
    }
    // Piecewise constant on the file's own cells, which are centred at k / n.
    auto values = std::make_shared<std::vector<double>>(read_csv_values(spec.path));
    const int n = static_cast<int>(values->size());
    auto primitive = [values, n](double x) {
        // integral from -1/(2n) to x
        const double y = x + 0.5 / n;
        const double periods = std::floor(y);
        const double r = (y - periods) * n;
        const int full = std::min(static_cast<int>(r), n - 1);
        double s = periods;  // each period carries unit mass
        for (int k = 0; k < full; ++k) s += (*values)[static_cast<std::size_t>(k)] / n;
        s += (r - full) / n * (*values)[static_cast<std::size_t>(full)];
        return s;
    };
    ContinuousDatum d;
    d.name = "csv:" + spec.path;
    d.density = [values, n](double x) {
        return (*values)[static_cast<std::size_t>(Grid(n).cell_of(x - std::floor(x)))];
    };
    d.integral = [primitive](double a, double b) { return primitive(b) - primitive(a); };
    return d;
}

Density initial_density(const DatumSpec& spec, int n) {
    if (spec.kind == DatumSpec::Kind::Csv) {
        std::vector<double> v = read_csv_values(spec.path);
        const Grid g(static_cast<int>(v.size()));
        return Density(g, std::move(v), 1e-10);
    }
    if (n < 2) throw Error(ErrorCode::Config, "n: must be >= 2");
    return project_initial(continuous_datum(spec), Grid(n));
}

SolverConfig solver_config(const Config& c) {
    SolverConfig s;
    s.dt0_factor = c.get_real("solver.dt0_factor");
    s.newton_tol = c.get_real("solver.newton_tol");
    s.newton_max_iter = c.get_int("solver.newton_max_iter");
    s.shrink_threshold = c.get_int("solver.shrink_threshold");
    s.grow_threshold = c.get_int("solver.grow_threshold");
    s.grow_factor = c.get_real("solver.grow_factor");
    s.shrink_factor = c.get_real("solver.shrink_factor");
    s.entropy_stop = c.get_real("solver.entropy_stop");
    s.t_max = c.get_real("solver.t_max");
    s.positivity_floor = c.get_real("solver.positivity_floor");
    s.max_halvings = c.get_int("solver.max_halvings");
    s.max_steps = c.get_long("solver.max_steps");
    s.state_stride = c.get_int("output.state_stride");
    if (s.state_stride < 0) bad("output.state_stride", "must be >= 0");
    s.validate();
    return s;
}

MetricConfig metric_config(const Config& c) {
    MetricConfig m;
    m.S = c.get_int("metric.S");
    m.max_iterations = c.get_int("metric.max_iterations");
    m.rel_tol = c.get_real("metric.rel_tol");
    m.barrier_floor = c.get_real("metric.barrier_floor");
    m.validate();
    return m;
}

StudyConfig study_config(const Config& c) {
    StudyConfig s;
    s.ladder = c.get_int_list("convergence.ladder");
    s.dt_factor = c.get_real("convergence.dt_factor");
    s.k = c.get_int("convergence.k");
    s.window_scale = c.get_real("convergence.window_scale");
    s.points = c.get_int("convergence.points");
    s.decay_factor = c.get_real("convergence.decay_factor");
    s.solver = solver_config(c);
    s.validate();
    return s;
}

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

std::string header_line(const Config& c) {
    return std::string("# dlsslab ") + version() + " config_hash=" + c.hash_hex();
}

double entropy_decay_rate(const Trajectory& traj) {
    const auto& r = traj.records;
    if (r.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double h_last = r.back().values.entropy;
    if (!(h_last > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    std::size_t first = r.size() - 1;
    while (first > 0 && r[first - 1].values.entropy <= 10.0 * h_last && r[first - 1].values.entropy > 0.0) --first;
    const std::size_t m = r.size() - first;
    if (m < 2) return std::numeric_limits<double>::quiet_NaN();
    double st = 0.0, sy = 0.0;
    for (std::size_t i = first; i < r.size(); ++i) {
        st += r[i].t;
        sy += std::log(r[i].values.entropy);
    }
    st /= static_cast<double>(m);
    sy /= static_cast<double>(m);
    double num = 0.0, den = 0.0;
    for (std::size_t i = first; i < r.size(); ++i) {
        const double dt = r[i].t - st;
        num += dt * (std::log(r[i].values.entropy) - sy);
        den += dt * dt;
    }
    return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

int cli_simulate(const Config& c, std::ostream& log) {
    const SolverConfig sc = solver_config(c);
    const Density rho0 = initial_density(parse_datum(c.get("datum")), c.get_int("n"));
    const fs::path out = c.get("out");
    ensure_dir(out);
    const Trajectory tr = simulate(rho0, sc);

    std::ofstream diag = open_out(out / "diagnostics.csv");
    diag << header_line(c) << "\n";
    diag << "t,dt,newton_iters,mass,entropy,fisher,heat_capacity,min_rho\n";
    for (const StepRecord& r : tr.records)
        diag << format_real(r.t) << ',' << format_real(r.dt) << ',' << r.newton_iterations << ',' << format_real(r.values.mass)
             << ',' << format_real(r.values.entropy) << ',' << format_real(r.values.fisher) << ','
             << format_real(r.values.heat_capacity) << ',' << format_real(r.values.min_density) << '\n';

    std::ofstream states = open_out(out / "states.csv");
    states << header_line(c) << "\n";
    write_state_header(states, tr.grid.n());
    for (const StoredState& s : tr.states) write_state_row(states, tr.records[s.record].t, s.rho);

    int min_iter = 0, max_iter = 0;
    double mass_drift = 0.0, min_rho = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tr.records.size(); ++i) {
        const StepRecord& r = tr.records[i];
        if (i > 0) {
            min_iter = i == 1 ? r.newton_iterations : std::min(min_iter, r.newton_iterations);
            max_iter = std::max(max_iter, r.newton_iterations);
        }
        mass_drift = std::max(mass_drift, std::abs(r.values.mass - 1.0));
        min_rho = std::min(min_rho, r.values.min_density);
    }
    json summary = stamp(c);
    summary["n"] = tr.grid.n();
    summary["datum"] = c.get("datum");
    summary["t_final"] = tr.t_final();
    summary["steps"] = tr.steps();
    summary["stopped_on_entropy"] = tr.stopped_on_entropy;
    summary["min_newton_iterations"] = min_iter;
    summary["max_newton_iterations"] = max_iter;
    summary["entropy_initial"] = tr.records.front().values.entropy;
    summary["entropy_final"] = tr.records.back().values.entropy;
    summary["entropy_decay_rate"] = real_or_null(entropy_decay_rate(tr));
    summary["max_mass_drift"] = mass_drift;
    summary["min_rho"] = min_rho;
    write_json(out / "summary.json", summary);
    log << "simulate: N=" << tr.grid.n() << " steps=" << tr.steps() << " t_final=" << format_real(tr.t_final())
        << " H=" << format_real(tr.records.back().values.entropy) << " -> " << out.string() << "\n";
    return kExitOk;
}

int cli_convergence(const Config& c, std::ostream& log) {
    const StudyConfig sc = study_config(c);
    const ContinuousDatum datum = continuous_datum(parse_datum(c.get("datum")));
    const fs::path out = c.get("out");
    ensure_dir(out);
    const RefinementStudy s = run_study(datum, sc);

    std::ofstream csv = open_out(out / "convergence.csv");
    csv << header_line(c) << "\n";
    csv << "N,e_l2_rho,e_l2_sqrt,weak_residual,order_estimate\n";
    for (const LevelResult& l : s.levels)
        csv << l.n << ',' << format_real(l.e_l2_rho) << ',' << format_real(l.e_l2_sqrt) << ',' << format_real(l.weak_residual)
            << ',' << format_real(l.order_estimate) << '\n';

    json j = stamp(c);
    j["datum"] = s.datum;
    j["T"] = s.T;
    j["window"] = {s.t_a, s.t_b};
    j["times"] = s.times;
    json levels = json::array();
    for (const LevelResult& l : s.levels)
        levels.push_back({{"N", l.n}, {"dt", l.dt}, {"steps", l.steps}, {"e_l2_rho", real_or_null(l.e_l2_rho)},
                          {"e_l2_sqrt", real_or_null(l.e_l2_sqrt)}, {"order_estimate", real_or_null(l.order_estimate)},
                          {"order_sqrt", real_or_null(l.order_sqrt)}, {"e_projected", real_or_null(l.e_projected)},
                          {"order_projected", real_or_null(l.order_projected)}, {"weak_residual", l.weak_residual}});
    j["levels"] = levels;
    j["order_estimate"] = real_or_null(s.order_estimate);
    j["order_sqrt"] = real_or_null(s.order_sqrt);
    j["order_projected"] = real_or_null(s.order_projected);
    j["order_band"] = {1.5, 2.5};
    j["order_in_band"] = s.order_estimate >= 1.5 && s.order_estimate <= 2.5;
    j["order_band_note"] =
        "The band is a heuristic from the scheme's second-order consistency; the convergence theorem gives no rate. "
        "Piecewise-constant reconstructions on staggered meshes differ at first order in L2.";
    j["errors_decreasing"] = s.errors_decreasing;
    j["sqrt_errors_decreasing"] = s.sqrt_errors_decreasing;
    j["residual_decreasing"] = s.residual_decreasing;
    write_json(out / "convergence.json", j);
    log << "convergence: order=" << format_real(s.order_estimate) << " errors_decreasing=" << s.errors_decreasing
        << " residual_decreasing=" << s.residual_decreasing << " -> " << out.string() << "\n";
    return kExitOk;
}

int cli_metric(const Config& c, std::ostream& log) {
    const MetricConfig mc = metric_config(c);
    const Density rho0 = initial_density(parse_datum(c.get("datum")), c.get_int("n"));
    const std::string target = c.get("metric.target");
    Density rho1 = Density::uniform(rho0.grid());
    if (target == "random") {
        rho1 = random_positive_density(rho0.grid(), c.get_u64("seed"));
    } else if (target != "uniform") {
        rho1 = initial_density(parse_datum(target), rho0.grid().n());
        if (!(rho1.grid() == rho0.grid())) bad("metric.target", "grid size differs from the datum");
    }
    const fs::path out = c.get("out");
    ensure_dir(out);
    const DistanceReport r = distance_report(rho0, rho1, mc);
    json j = stamp(c);
    j["n"] = rho0.grid().n();
    j["S"] = mc.S;
    j["lower"] = r.lower;
    j["upper_construction"] = r.upper_construction;
    j["upper_optimized"] = r.upper_optimized;
    j["upper_optimized_2S"] = r.upper_optimized_2s;
    j["iterations"] = r.iterations;
    j["iterations_2S"] = r.iterations_2s;
    j["converged"] = r.converged;
    write_json(out / "metric.json", j);
    log << j.dump() << "\n";
    return kExitOk;
}

int cli_check(const Config& c, std::ostream& log) {
    const std::uint64_t seed = c.get_u64("seed");
    const long samples = positive_int(c, "check.samples", 1);
    const std::vector<int> grids = c.get_int_list("check.grids");
    for (int n : grids)
        if (n < 2) bad("check.grids", "grid sizes must be >= 2");
    const std::vector<double> ps = c.get_real_list("check.gns_p");
    for (double p : ps)
        if (!(p >= 2.0)) bad("check.gns_p", "exponents must be >= 2");
    const double scan_max = c.get_real("check.scan_max");
    const double scan_step = c.get_real("check.scan_step");
    if (!(scan_step > 0.0) || !(scan_max >= scan_step)) bad("check.scan_step", "need 0 < scan_step <= scan_max");
    const int decay_n = positive_int(c, "check.decay_n", 2);
    const int decay_m = positive_int(c, "check.decay_m", 1);
    const int adm = positive_int(c, "check.admissibility_samples", 1);
    const SolverConfig sc = solver_config(c);

    const fs::path out = fs::path(c.get("out")) / "check";
    ensure_dir(out);
    bool all = true;
    auto emit = [&](const std::string& name, json body, bool pass) {
        body["suite"] = name;
        body["pass"] = pass;
        body.update(stamp(c));
        write_json(out / (name + ".json"), body);
        log << "check " << name << ": " << (pass ? "pass" : "FAIL") << "\n";
        all = all && pass;
    };
    auto per_grid = [&](const std::string& name, const std::function<InequalityReport(const Grid&)>& fn) {
        json reports = json::array();
        bool pass = true;
        for (int n : grids) {
            const InequalityReport r = fn(Grid(n));
            json jr = report_json(r);
            jr["N"] = n;
            reports.push_back(jr);
            pass = pass && r.pass;
        }
        emit(name, json{{"reports", reports}}, pass);
    };

    {
        json reports = json::array();
        bool pass = true;
        for (int n : grids) {
            const Grid g(n);
            const InequalityReport r = poincare_suite(g, samples, seed);
            json jr = report_json(r);
            jr["N"] = n;
            jr["constant"] = poincare_constant(g);
            jr["saturation_gap"] = poincare_saturation(g);
            const bool ok = r.pass && std::abs(poincare_saturation(g)) <= 1e-10;
            jr["pass"] = ok;
            reports.push_back(jr);
            pass = pass && ok;
        }
        emit("poincare", json{{"reports", reports}}, pass);
    }
    per_grid("lsi", [&](const Grid& g) { return lsi_suite(g, samples, seed); });
    for (double p : ps) {
        std::string tag = format_real(p);
        std::replace(tag.begin(), tag.end(), '.', '_');
        per_grid("gns_p" + tag, [&](const Grid& g) { return gns_suite(g, p, samples, seed); });
    }
    per_grid("interpolation", [&](const Grid& g) { return interpolation_suite(g, samples, seed); });
    per_grid("entropy_production", [&](const Grid& g) { return entropy_production_suite(g, samples, seed); });
    {
        const InequalityReport r = monster_scan(scan_max, scan_step);
        emit("monster", report_json(r), r.pass);
    }
    {
        const InequalityReport r = elementary_log_scan(scan_max, scan_step);
        emit("elementary_log", report_json(r), r.pass);
    }
    {
        const AdmissibilityReport r = admissibility_report(adm, seed);
        emit("admissibility",
             json{{"samples", r.samples},
                  {"counterexamples", r.counterexamples},
                  {"worst_concavity_margin", r.worst_concavity_margin},
                  {"worst_comparison_margin", r.worst_comparison_margin}},
             r.ok());
    }
    {
        DatumSpec d;
        d.m = decay_m;
        const Trajectory tr = simulate(initial_density(d, decay_n), sc);
        json body = report_json(decay_suite(tr));
        body["N"] = decay_n;
        body["m"] = decay_m;
        emit("decay", body, body["pass"].get<bool>());
    }
    return all ? kExitOk : kExitSuite;
}

int cli_figures_data(const Config& c, std::ostream& log) {
    const std::vector<int> ms = c.get_int_list("figures.m");
    const double eps = c.get_real("figures.eps");
    if (!(eps > 0.0)) bad("figures.eps", "must be > 0");
    const int stride = positive_int(c, "figures.state_stride", 1);
    const int n = positive_int(c, "n", 2);
    SolverConfig sc = solver_config(c);
    sc.state_stride = 1;  // every state enters the Hellinger column
    for (int m : ms)
        if (m < 1) bad("figures.m", "exponents must be >= 1");

    const fs::path root = fs::path(c.get("out")) / "figures";
    ensure_dir(root);
    std::vector<Trajectory> runs(ms.size());
    parallel_for(ms.size(), [&](std::size_t i) {
        DatumSpec d;
        d.m = ms[i];
        d.eps = eps;
        runs[i] = simulate(initial_density(d, n), sc);
    });
    json manifest = stamp(c);
    manifest["n"] = n;
    manifest["eps"] = eps;
    manifest["lyapunov_columns"] = {"t", "entropy", "fisher", "hellinger_uniform", "heat_capacity"};
    manifest["hellinger_uniform"] = "delta * sum (sqrt(rho) - 1)^2";
    json runs_json = json::array();
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const Trajectory& tr = runs[i];
        const fs::path dir = root / ("m" + std::to_string(ms[i]));
        ensure_dir(dir);
        std::ofstream ly = open_out(dir / "lyapunov.csv");
        ly << header_line(c) << "\n";
        ly << "t,entropy,fisher,hellinger_uniform,heat_capacity\n";
        for (const StoredState& s : tr.states) {
            const StepRecord& r = tr.records[s.record];
            ly << format_real(r.t) << ',' << format_real(r.values.entropy) << ',' << format_real(r.values.fisher) << ','
               << format_real(uniform_hellinger_sq(s.rho)) << ',' << format_real(r.values.heat_capacity) << '\n';
        }
        std::ofstream st = open_out(dir / "states.csv");
        st << header_line(c) << "\n";
        write_state_header(st, tr.grid.n());
        for (std::size_t k = 0; k < tr.states.size(); ++k)
            if (k % static_cast<std::size_t>(stride) == 0 || k + 1 == tr.states.size())
                write_state_row(st, tr.records[tr.states[k].record].t, tr.states[k].rho);
        runs_json.push_back({{"m", ms[i]},
                             {"dir", dir.filename().string()},
                             {"steps", tr.steps()},
                             {"t_final", tr.t_final()},
                             {"entropy_decay_rate", real_or_null(entropy_decay_rate(tr))}});
        log << "figures-data: m=" << ms[i] << " steps=" << tr.steps() << " -> " << dir.string() << "\n";
    }
    manifest["runs"] = runs_json;
    write_json(root / "manifest.json", manifest);
    return kExitOk;
}

int run_command(const std::string& command, const Config& c, std::ostream& log) {
    try {
        if (command == "simulate") return cli_simulate(c, log);
        if (command == "convergence") return cli_convergence(c, log);
        if (command == "metric") return cli_metric(c, log);
        if (command == "check") return cli_check(c, log);
        if (command == "figures-data") return cli_figures_data(c, log);
        log << "error: unknown subcommand '" << command << "'\n";
        return kExitConfig;
    } catch (const Error& e) {
        log << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        switch (e.code()) {
            case ErrorCode::Config:
            case ErrorCode::InvalidArgument:
            case ErrorCode::Io: return kExitConfig;
            default: return kExitSolver;
        }
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitSolver;
    }
}

}  // namespace dlss
