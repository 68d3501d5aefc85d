#pragma once

#include <ostream>
#include <vector>

#include "twoscale/coarse_grain.hpp"

namespace twoscale {

struct MacroTrajectory {
    std::vector<double> times;
    std::vector<MacroProfile> states;
    std::vector<double> energies;  // (1/M) sum psi_K(eta_j)
    double dt = 0.0;

    // t, eta_1..eta_M, H
    void write_csv(std::ostream& os) const;
};

// 0.5 / (Lambda * lambda_max(A-bar))
double macro_dt_bound(const MacroOperator& abar, const CoarseHamiltonian& h);

// Classical RK4 for d eta/dt = -A-bar grad H-bar(eta). Frames are stored every `output_every` steps (1: all).
MacroTrajectory solve_macro_ode(const MacroProfile& eta0, const MacroOperator& abar, const CoarseHamiltonian& h,
                                double T, double dt, int output_every = 1);

struct Dissipation {
    double integral = 0.0;  // of |grad H-bar|_Y^2 over the stored frames (Simpson when uniform, else trapezoid)
    double quadrature_error = 0.0;  // |Simpson - trapezoid|
    double bound = 0.0;     // (H(eta(0)) - psi_K(m)) / tau
    double energy_drop = 0.0;
    double tau = 0.0;       // spectral floor of A-bar on the tangent space
    bool holds = true;
};

Dissipation dissipation_integral(const MacroTrajectory& traj, const MacroOperator& abar, const CoarseHamiltonian& h);

}  // namespace twoscale
