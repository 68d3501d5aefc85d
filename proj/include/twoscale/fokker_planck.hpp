#pragma once

#include <Eigen/Dense>
#include <vector>

#include "twoscale/grid_density.hpp"

namespace twoscale {

struct FokkerPlanckOptions {
    double T = 1.0;
    double dt = 0.0;            // 0: 0.9 of the CFL limit
    double output_every = 0.0;  // 0: only initial and final frames
    double leak_tol = 1e-8;     // boundary-layer mass threshold
};

struct FokkerPlanckTrajectory {
    std::vector<double> times;
    std::vector<GridDensity> frames;
    std::vector<double> entropy;  // discrete relative entropy w.r.t. e^{-H}/Z at each frame
    std::vector<double> mass;
    double dt = 0.0;
    std::size_t steps = 0;
    bool entropy_monotone = true;  // checked every step
};

// d rho/dt = div(D (grad rho + rho grad H)), no-flux box. H sampled on rho0's grid.
// Flux between neighbours: -D sqrt(pi_i pi_j) (u_j - u_i)/h with u = rho/pi, pi = e^{-H}.
// Diffusion must be diagonal.
FokkerPlanckTrajectory solve_fokker_planck(const std::vector<double>& H, const Eigen::MatrixXd& diffusion,
                                           const GridDensity& rho0, const FokkerPlanckOptions& opt);

double fokker_planck_cfl(const std::vector<double>& H, const Eigen::MatrixXd& diffusion, const GridDensity& grid);

}  // namespace twoscale
