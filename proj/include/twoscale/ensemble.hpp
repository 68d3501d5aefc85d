#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twoscale/kawasaki.hpp"
#include "twoscale/potential.hpp"
#include "twoscale/projection.hpp"
#include "twoscale/stats.hpp"

namespace twoscale {

// R replicas of N spins on X_{N,m}, row-major.
struct MicroEnsemble {
    int n_sites = 0;
    double mean = 0.0;
    int replicas = 0;
    std::uint64_t rng_seed = 0;
    std::vector<double> x;
    double t = 0.0;
    double dt = 0.0;
    std::uint64_t step = 0;
    std::string potential_tag = "gaussian";

    double* row(int r) { return x.data() + static_cast<std::size_t>(r) * n_sites; }
    const double* row(int r) const { return x.data() + static_cast<std::size_t>(r) * n_sites; }
    // throws ConsistencyError if some row mean is off by more than tol
    void check_mean(double tol = 1e-10) const;
};

// Binary snapshot: one text header line with 8 fields, then R*N little-endian doubles.
void write_snapshot(const MicroEnsemble& e, const std::string& path);
MicroEnsemble read_snapshot(const std::string& path);

struct SamplerOptions {
    double proposal = 0.5;
    int burn_in_sweeps = 1000;  // one sweep = N pair moves
    int diag_chains = 8;
    int threads = 1;
    std::vector<double> tilt;   // target ~ exp(<tilt, x> - sum psi(x_i)) on X_{N,m}
    std::vector<double> start;  // initial centre (shifted onto X_{N,m}); default constant m
    double start_spread = 0.0;  // iid Gaussian fluctuations around start, mean removed
    std::uint64_t stage = 0;
};

struct SamplerDiagnostics {
    double rhat = NAN;
    double trace_ess = 0.0;
    double ensemble_ess = 0.0;
    double acceptance = 0.0;
    bool converged = true;
    std::string status = "ok";
};

struct EquilibriumSample {
    MicroEnsemble ensemble;
    SamplerDiagnostics diagnostics;
};

EquilibriumSample sample_equilibrium(const Potential& p, int N, double m, int R, std::uint64_t seed,
                                     const SamplerOptions& opt = {});

// Euler-Maruyama in bond-flux form; conserves every row sum exactly.
double sde_stability_bound(const Potential& p, const KawasakiOperator& op);
double sde_default_dt(const KawasakiOperator& op);
void advance_sde(MicroEnsemble& e, const Potential& p, double dt, const KawasakiOperator& op, int n_steps,
                 int threads = 1);
MicroEnsemble step_kawasaki_sde(const MicroEnsemble& e, const Potential& p, double dt, const KawasakiOperator& op,
                                int threads = 1);

// Exponential integrator: c*x integrated exactly per Fourier mode (with exact OU noise),
// psi'(x) - c*x frozen over the step.
class EtdIntegrator {
public:
    EtdIntegrator(const KawasakiOperator& op, double dt, double c_ref = 1.0);
    double dt() const { return dt_; }
    void advance(MicroEnsemble& e, const Potential& p, int n_steps, int threads = 1) const;

private:
    int n_;
    double dt_, c_;
    std::vector<double> decay_, gain_, noise_;
};

// E_nu[psi''] under the single-site law tilted to mean m
double mean_curvature(const Potential& p, double m);

// max over probes of || Pi_perp diag(psi''(x)) Pi_par || by power iteration
double estimate_kappa(const Potential& p, int N, int K, int n_probes, std::uint64_t seed = 1);

// (1/2N) <r, A^{-1} r>, r = x - N P^t eta, averaged over replicas
McEstimate theta_functional(const MicroEnsemble& e, const MacroProfile& eta, const KawasakiOperator& op,
                            const Projection& P);

}  // namespace twoscale
