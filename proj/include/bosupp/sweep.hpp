#ifndef BOSUPP_SWEEP_HPP
#define BOSUPP_SWEEP_HPP

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bosupp/fock.hpp"

namespace bosupp {

inline constexpr const char* kSweepVersion = "0.1.0";
inline constexpr const char* kCsvSchema = "sweep-csv-1";

// Parsed `name(arg, key=value, ...)` descriptor.  Codes use positional
// arguments (cat(2,2)), channels and protocols use named ones (loss(mu=0.05),
// cf(K=2)).  `text` keeps the original spelling for metadata echoes.
struct Descriptor {
    std::string name;
    std::vector<double> positional;
    std::map<std::string, std::string> named;
    std::string text;

    bool has(const std::string& key) const { return named.count(key) > 0; }
    double num(const std::string& key, double fallback) const;
    int integer(const std::string& key, int fallback) const;
    std::string str(const std::string& key, const std::string& fallback) const;
};

Descriptor parse_descriptor(const std::string& text);

struct SweepAxis {
    std::string param;          // mu | eta | nbar | z | p | bell_p
    std::vector<double> grid;   // strictly increasing
};

struct AveragingMode {
    enum class Kind { exact_haar, monte_carlo, fixed_state };
    Kind kind = Kind::exact_haar;
    int samples = 2000;              // monte-carlo
    unsigned long long seed = 1;     // monte-carlo sample stream
    cplx c0 = cplx(1.0, 0.0);        // fixed-state coefficients
    cplx c1 = cplx(0.0, 0.0);

    std::string describe() const;
};

struct ExperimentConfig {
    Descriptor code;
    Descriptor cv;        // defaults to none
    Descriptor dv;        // defaults to none
    Descriptor protocol;  // defaults to none
    SweepAxis sweep;
    AveragingMode averaging;
    std::string output;   // CSV path; the metadata sidecar appends .meta.json
    int dim = 40;
    int guard = 8;
    unsigned long long seed = 1;
    int jobs = 1;
    std::vector<std::string> assumptions;  // echoed into the sidecar
};

// key = value lines, # comments, optional [section] headers.  Errors carry
// `origin:line:` context.
ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<config>");
ExperimentConfig parse_config_file(const std::string& path);

struct ResultRow {
    double sweep_value = 0.0;
    double f_supp = 0.0;
    double f_unsupp = 0.0;
    double p_succ = 0.0;
    std::optional<double> f_closed;
    std::optional<double> p_closed;
    double leakage = 0.0;
    double mc_stderr = 0.0;   // sidecar diagnostic, not a CSV column
    bool aborted = false;
    std::string error;
};

struct RunReport {
    std::vector<ResultRow> rows;
    // 0 ok, 3 closed-form tolerance violation, 4 aborted rows (leakage or
    // herald starvation).  Config errors throw std::invalid_argument instead.
    int exit_code = 0;
    std::vector<std::string> messages;
};

// Evaluates every sweep row (config.jobs workers, deterministic output).
RunReport evaluate(const ExperimentConfig& config);

std::string csv_text(const ExperimentConfig& config, const std::vector<ResultRow>& rows);
std::string metadata_text(const ExperimentConfig& config, const RunReport& report);

// evaluate + write CSV and sidecar to config.output.
RunReport run_experiment(const ExperimentConfig& config);

// Bundled sweep configs behind one figure; outputs land in out_dir.
// Names: fig3 fig4 fig5 fig6 fig7 fig8 fig9 fig10c.
std::vector<ExperimentConfig> figure_bundle(const std::string& name, const std::string& out_dir);

// Writes each bundled config (for provenance) next to its outputs and runs it.
// Returns the worst exit code over the bundle.
int run_figure(const std::string& name, const std::string& out_dir, int jobs_override = 0);

}  // namespace bosupp

#endif
