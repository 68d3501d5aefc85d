#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "twoscale/functionals.hpp"
#include "twoscale/hydro.hpp"
#include "twoscale/macro_ode.hpp"
#include "twoscale/tabulated.hpp"

namespace twoscale {

struct LadderEntry {
    int N = 0;
    int M = 0;
    int K() const { return N / M; }
};

struct ExperimentConfig {
    std::string name = "default";
    std::vector<std::string> potentials{"gaussian", "cos:0.2:1"};
    std::vector<LadderEntry> ladder{{64, 8}, {256, 16}, {1024, 32}};
    std::vector<LadderEntry> gibbs_pairs{{16, 2}, {64, 4}, {256, 8}};
    double m = 0.0;
    double T = 0.5;
    double output_every = 0.01;

    double amplitude = 1.0;          // zeta0 = m + a sin(2 pi theta)
    double entropy_amplitude = 0.5;
    double epsilon = 0.05;
    std::vector<double> entropy_times{0.05, 0.1, 0.2};

    double dt_micro = 1e-3;
    double dt_macro = 0.0;  // 0: stability bound
    double dt_hydro = 0.0;  // 0: CFL limit
    int hydro_cells = 1024;

    int replicas = 4096;
    int burn_in_sweeps = 300;
    int audit_replicas = 256;
    int audit_burn_in = 200;
    int kappa_probes = 8;

    double gibbs_amplitude = 0.5;
    int gibbs_samples = 100000;
    int gibbs_chains = 32;
    int gibbs_time_samples = 4000;
    int gibbs_time_nodes = 11;

    GridSpec table{-4.0, 4.0, 801};

    int fp_nodes = 1601;
    double fp_half_width = 8.0;
    double fp_T = 0.5;
    double fp_u0 = 0.5;
    double fp_var0 = 0.5;

    std::uint64_t seed = 20240601;
    std::string out = "runs";
    int threads = 1;

    void validate() const;
    std::string to_ini() const;
    int n_outputs() const;
};

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);

struct LedgerEntry {
    std::string group;  // "ladder" or "pairs"
    std::string potential;
    int N = 0, M = 0;
    ConstantsLedger c;
    bool rho_assumed = false;
    double alpha_se = 0.0;
    double xi0 = 0.0;  // Xi(T, M, N) with Theta(0) = 0 and group-uniform constants
};

struct Ledger {
    std::vector<LedgerEntry> entries;
    std::uint64_t id = 0;

    std::string text() const;  // CSV, one row per entry
    void seal();
    void verify() const;       // ConsistencyError if the content no longer matches the id
    std::string id_hex() const;
    const LedgerEntry& at(const std::string& group, const std::string& potential, int N, int M) const;
    // worst case over the group
    ConstantsLedger uniform(const std::string& group, const std::string& potential) const;
};

std::uint64_t fnv1a64(const std::string& s);

struct Table {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int col(const std::string& c) const;
    double get(std::size_t row, const std::string& c) const { return rows.at(row).at(col(c)); }
    void write_csv(std::ostream& os) const;
};

struct Check {
    std::string name;
    bool pass = true;
    std::string detail;
};

struct ExperimentResult {
    std::string experiment;
    std::vector<Table> tables;
    std::vector<Check> checks;
    std::vector<std::string> notes;
    std::string ledger_id;
    double seconds = 0.0;
    // per-section cost, including the build time of every cached table or trajectory the section used
    std::vector<std::pair<std::string, double>> timings;

    bool passed() const;
    const Table& table(const std::string& name) const;
    const Check& check(const std::string& name) const;
    double timing(const std::string& section) const;
};

// largest generalized Rayleigh quotient M^2 |(I - N P^t P) x|^2 / <x, A x>
double estimate_gamma(int N, int M, int n_probes, std::uint64_t seed, int iterations = 300);

std::string file_tag(const std::string& potential);

class Harness {
public:
    explicit Harness(ExperimentConfig cfg);
    ~Harness();
    Harness(const Harness&) = delete;
    Harness& operator=(const Harness&) = delete;

    const ExperimentConfig& config() const { return cfg_; }
    const Ledger& ledger();

    ExperimentResult run_assumption_audit();
    ExperimentResult run_tabulate();
    ExperimentResult run_hydrodynamic_limit();
    ExperimentResult run_macro();
    ExperimentResult run_hydro();
    ExperimentResult run_local_gibbs();
    ExperimentResult run_entropy_convergence();

    // "audit", "tabulate", "micro", "macro", "hydro", "gibbs", "entropy" or "all"
    std::vector<ExperimentResult> run(const std::string& which);

    struct Cache;

private:
    ExperimentConfig cfg_;
    std::unique_ptr<Cache> cache_;
};

// <dir>/<experiment>/{config.ini, ledger.csv, *.csv, summary.txt} and <dir>/summary.txt
void emit_report(const std::vector<ExperimentResult>& results, const Ledger& ledger, const ExperimentConfig& cfg,
                 const std::string& dir);

}  // namespace twoscale
