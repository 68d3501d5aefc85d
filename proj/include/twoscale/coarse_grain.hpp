#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "twoscale/kawasaki.hpp"
#include "twoscale/projection.hpp"
#include "twoscale/stats.hpp"
#include "twoscale/tabulated.hpp"

namespace twoscale {

struct CoarseHamiltonian {
    TabulatedFunction psiK;
    int N = 0, M = 0;
    double lambda = 0.0, Lambda = 0.0;

    int K() const { return N / M; }
};

// Certifies lambda > 0 on the table (edge nodes excluded).
CoarseHamiltonian build_coarse_hamiltonian(TabulatedFunction psiK, int N, int M);

// (1/M) sum psi_K(y_j); H-bar without the (1/N) log Z-bar constant
double hbar_potential(const CoarseHamiltonian& h, const std::vector<double>& y);

// Y-metric gradient psi_K'(y_j), centred onto the tangent space of Y_{M,m}
std::vector<double> grad_Hbar(const CoarseHamiltonian& h, const MacroProfile& y);
std::vector<double> grad_Hbar(const CoarseHamiltonian& h, const std::vector<double>& y);

// A-bar^{-1} = P A^{-1} N P^t assembled densely; A-bar is its inverse on the mean-zero subspace.
struct MacroOperator {
    int M = 0;
    Eigen::MatrixXd abar;
    Eigen::MatrixXd abar_inv;
    double tangent_min = 0.0;  // spectral range of A-bar on the tangent space
    double tangent_max = 0.0;

    std::vector<double> apply(const std::vector<double>& v) const;
    std::vector<double> apply_inverse(const std::vector<double>& v) const;
};

MacroOperator build_macro_operator(const Projection& P, const KawasakiOperator& op);

// Points and log trapezoid weights covering Y_{M,m} near `centre` (M = 2 or 3), Euclidean (M-1)-dim measure.
struct HyperplaneGrid {
    std::vector<std::vector<double>> points;
    std::vector<double> log_weights;
};
HyperplaneGrid make_hyperplane_grid(const std::vector<double>& centre, double half_width, int n_per_axis);

struct LogDensity {
    double value;
    bool normalized;
};

// N(<grad H(eta), y>_Y - (1/M) sum psi_K(y_j)), normalized over a quadrature grid when M <= 3
LogDensity local_gibbs_log_density(const CoarseHamiltonian& h, const MacroProfile& eta, const MacroProfile& y);

struct LocalGibbsOptions {
    int chains = 64;
    int burn_in_sweeps = 1000;  // one sweep = M pair moves
    int thin_sweeps = 5;
    double proposal = 0.0;      // 0: 2 sqrt(M/(lambda N))
    int threads = 1;
    std::uint64_t stage = 0;
};

struct LocalGibbsSample {
    int M = 0;
    int R = 0;
    std::vector<double> y;   // R x M
    std::vector<int> chain;  // chain index per sample
    double rhat = NAN;
    double ess = 0.0;
    double acceptance = 0.0;
    bool converged = true;
    std::string status = "ok";

    const double* row(int r) const { return y.data() + static_cast<std::size_t>(r) * M; }
};

// Pair-exchange Metropolis targeting the local Gibbs density; proposals leaving the table are rejected.
LocalGibbsSample sample_local_gibbs(const CoarseHamiltonian& h, const MacroProfile& eta, int R, std::uint64_t seed,
                                    const LocalGibbsOptions& opt = {});
// Exact sampler for the Gaussian case: covariance (M/(lambda N)) times the mean-zero projection
LocalGibbsSample sample_local_gibbs_gaussian(int N, const MacroProfile& eta, int R, std::uint64_t seed,
                                             double lambda = 1.0);

struct LogPartition {
    double value = NAN;  // (1/N) log Z-bar by quadrature (M <= 3)
    double lower = NAN;  // Laplace bracket
    double upper = NAN;
    bool has_quadrature = false;
};

LogPartition log_partition_bar(const CoarseHamiltonian& h, double m);

double two_scale_lsi_constant(double rho, double lambda, double kappa);

double gamma_Y(int M);
double log_gamma_Y(int M);

struct FreeEnergyGap {
    double bound = 0.0;
    double log_term = 0.0;
    double grad_term = 0.0;
    double lhs = NAN;  // M <= 3 only
    bool holds = true;
};

FreeEnergyGap gibbs_free_energy_gap(const CoarseHamiltonian& h, const MacroProfile& eta);

}  // namespace twoscale
