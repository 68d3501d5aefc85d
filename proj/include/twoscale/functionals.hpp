#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "twoscale/grid_density.hpp"
#include "twoscale/hydro.hpp"
#include "twoscale/kawasaki.hpp"
#include "twoscale/projection.hpp"
#include "twoscale/stats.hpp"

namespace twoscale {

// Relative entropy Ent_mu(rho/mu) of two densities on the same grid; both are normalized first.
double entropy_grid(const GridDensity& rho, const GridDensity& mu);
// Relative Fisher information int rho |grad log(rho/mu)|^2, central differences of the log ratio.
double fisher_grid(const GridDensity& rho, const GridDensity& mu);

// Second moment about eta of row-major samples (R x dim), |.|^2 scaled by metric_weight.
// With chain ids the standard error comes from per-chain batch means.
McEstimate w2_to_dirac(const std::vector<double>& samples, int dim, const std::vector<double>& eta,
                       double metric_weight = 1.0, const std::vector<int>& chain = {});
double w2_to_dirac(const GridDensity& rho, const std::vector<double>& eta, double metric_weight = 1.0);

// Squared W2 between equal-size empirical measures: sorted coupling in 1-D, exact assignment for dim 2 or 3.
double w2_empirical(const std::vector<double>& a, const std::vector<double>& b, int dim = 1, double metric_weight = 1.0);
inline double w2_empirical_1d(const std::vector<double>& a, const std::vector<double>& b, double metric_weight = 1.0) {
    return w2_empirical(a, b, 1, metric_weight);
}
// Squared W2 between two 1-D grid densities through the monotone rearrangement.
double w2_grid_1d(const GridDensity& a, const GridDensity& b);

struct InequalityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = true;
};

// Ent_mu(nu) <= W2 sqrt(I_mu(nu)) - (lambda/2) W2^2 on 1-D grids; mu must be lambda-log-concave.
InequalityCheck hwi_check(const GridDensity& mu, const GridDensity& nu, double lambda, double slack = 1e-8);

// int |x|^2 e^{-f} <= (dim/lambda) int e^{-f} on [-L, L]^dim, dim = 1 or 2.
InequalityCheck second_moment_lemma_check(const std::function<double(double, double)>& f, int dim, double lambda,
                                          double L = 12.0, int n = 2401, double slack = 1e-8);

struct ConstantsLedger {
    double rho = 0, lambda = 0, Lambda = 0, kappa = 0, tau = 0;
    double alpha = 0, beta = 0, gamma = 0, C1 = 0, C2 = 0;
};

double xi_bound(double T, int M, int N, const ConstantsLedger& c, double theta0);

struct FreeEnergyGapTerms {
    double local_entropy = 0.0;  // time-integrated relative entropy to the local Gibbs state
    double cross = 0.0;          // (f-bar - G-bar) against log G-bar
    double local_gibbs = 0.0;    // free energy of G against H-bar(eta)
    double total = 0.0;
};
FreeEnergyGapTerms free_energy_gap_terms(double T, int M, int N, const ConstantsLedger& c, double theta0);
double free_energy_gap_bound(double T, int M, int N, const ConstantsLedger& c, double theta0);

// Dense A for any N >= 2 (N = 2 doubles the single bond).
Eigen::MatrixXd kawasaki_matrix(int N);

// Gaussian law on the hyperplane {mean x = m}; reference measure is the canonical ensemble with covariance Pi.
struct GaussianState {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    int n() const { return static_cast<int>(mean.size()); }
    double m() const { return mean.mean(); }
    void check() const;  // symmetric, PSD, covariance annihilates constants
};

GaussianState gaussian_oracle_evolve(const GaussianState& g, const Eigen::MatrixXd& A, double t);
double relative_entropy(const GaussianState& g);
double fisher_information(const GaussianState& g);
double theta_functional(const GaussianState& g, const std::vector<double>& eta, const Eigen::MatrixXd& A);
double macro_second_moment(const GaussianState& g, const std::vector<double>& eta);

// Circulant covariance: Sigma = sum_k s_k v_k v_k^*, v_k the unit Fourier modes; s is indexed by k = 0..N-1 (s[0] unused).
class CirculantGaussian {
public:
    CirculantGaussian(std::vector<double> mean, std::vector<double> s);
    static CirculantGaussian equilibrium_fluctuations(const std::vector<double>& mean, double scale = 1.0);

    int n() const { return n_; }
    double m() const { return m_; }
    const std::vector<double>& spectrum() const { return s_; }
    std::vector<double> mean() const;

    CirculantGaussian evolve(const KawasakiOperator& op, double t) const;

    double relative_entropy() const;
    double fisher_information() const;
    double theta(const std::vector<double>& eta, const KawasakiOperator& op) const;
    double macro_second_moment(const std::vector<double>& eta) const;
    // (1/N) Ent of the block-average law against the Gaussian local Gibbs law at eta
    double macro_relative_entropy(const std::vector<double>& eta) const;
    // E || x-bar - zeta ||^2_{H^-1}; zeta resolution must be a multiple of N
    double h_minus_one_distance(const HydroField& zeta) const;
    GaussianState dense() const;

private:
    CirculantGaussian() = default;
    int n_ = 0;
    double m_ = 0.0;
    std::vector<std::complex<double>> dev_hat_;  // DFT of mean - m
    std::vector<double> s_;
};

}  // namespace twoscale
