#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "dlsslab/convergence.hpp"
#include "dlsslab/density.hpp"
#include "dlsslab/flow.hpp"
#include "dlsslab/metric.hpp"

namespace dlss {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitSuite = 4;

const char* version() noexcept;

/// Flat key = value configuration over a fixed schema. Unknown keys and
/// malformed values are rejected with an Error(Config) naming the key.
class Config {
public:
    Config();

    void set(const std::string& key, const std::string& value);
    /// "key=value"
    void assign(const std::string& assignment);
    /// Lines "key = value"; '#' starts a comment.
    void load_file(const std::string& path);
    void load_text(const std::string& text, const std::string& origin = "<text>");

    const std::string& get(const std::string& key) const;
    int get_int(const std::string& key) const;
    long get_long(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    double get_real(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;
    std::vector<double> get_real_list(const std::string& key) const;

    static std::vector<std::string> keys();
    /// Sorted "key=value" lines; the output directory is excluded.
    std::string canonical() const;
    /// FNV-1a of canonical().
    std::uint64_t hash() const;
    std::string hash_hex() const;

private:
    std::map<std::string, std::string> values_;
};

struct DatumSpec {
    enum class Kind { Bls, Uniform, Csv } kind = Kind::Bls;
    int m = 2;
    double eps = 1e-3;
    std::string path;
};

/// bls:m=INT,eps=REAL | uniform | csv:PATH
DatumSpec parse_datum(const std::string& text);
/// CSV data is read as cell values on its own grid and rescaled to unit mass.
std::vector<double> read_csv_values(const std::string& path);
ContinuousDatum continuous_datum(const DatumSpec& spec);
/// Initial density; a CSV datum fixes its own grid and ignores n.
Density initial_density(const DatumSpec& spec, int n);

SolverConfig solver_config(const Config& c);
MetricConfig metric_config(const Config& c);
StudyConfig study_config(const Config& c);

/// 17 significant digits, locale independent.
std::string format_real(double v);
/// "# dlsslab <version> config_hash=<hex>"
std::string header_line(const Config& c);

/// LSQ slope of log H against t over the final decade of entropy decay; NaN
/// when fewer than two records fall in it.
double entropy_decay_rate(const Trajectory& traj);

int cli_simulate(const Config& c, std::ostream& log);
int cli_convergence(const Config& c, std::ostream& log);
int cli_metric(const Config& c, std::ostream& log);
int cli_check(const Config& c, std::ostream& log);
int cli_figures_data(const Config& c, std::ostream& log);

/// Dispatches a subcommand and maps errors to exit codes. Messages go to log.
int run_command(const std::string& command, const Config& c, std::ostream& log);

}  // namespace dlss
