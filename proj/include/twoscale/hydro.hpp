#pragma once

#include <ostream>
#include <vector>

#include "twoscale/projection.hpp"
#include "twoscale/tabulated.hpp"

namespace twoscale {

// Periodic cell averages on the unit torus; cell j covers (j/n, (j+1)/n].
struct HydroField {
    int n_cells = 0;
    double mean = 0.0;
    std::vector<double> values;

    static HydroField from_values(std::vector<double> v);
    // cell averages of f over each cell (Gauss-Legendre, 5 points)
    template <class F>
    static HydroField from_function(int n, F&& f);
    double h() const { return 1.0 / n_cells; }
    double center(int j) const { return (j + 0.5) / n_cells; }
};

struct HydroTrajectory {
    std::vector<double> times;
    std::vector<HydroField> frames;
    double dt = 0.0;
    long long steps = 0;
    double lambda = 0.0, Lambda = 0.0;  // convexity bounds of phi used for the step

    // header: t, then the cell centres; one row per output time
    void write_csv(std::ostream& os) const;
    const HydroField& at(double t) const;
};

double hydro_cfl(int n_cells, const TabulatedFunction& phi);

// Explicit Euler on the flux form of d zeta/dt = (phi'(zeta))_{theta theta}.
// dt <= 0 picks the largest step not above the CFL bound that divides output_every.
HydroTrajectory solve_hydro(const HydroField& zeta0, const TabulatedFunction& phi, double T, double dt = 0.0,
                            double output_every = 0.0);

// Squared H^{-1} norm via the centred piecewise-linear antiderivative (exact for step functions).
double h_minus_one_norm(const HydroField& f);
// Same quantity from the DFT of the cell values.
double h_minus_one_norm_fourier(const HydroField& f);

// Step embedding; n_cells (a multiple of v.size()) refines without changing the function.
HydroField step_embed(const std::vector<double>& v, int n_cells = 0);
HydroField step_embed(const MacroProfile& y, int n_cells = 0);
HydroField difference(const HydroField& a, const HydroField& b);

struct RegularityFrame {
    double t = 0.0;
    double L2 = 0.0;      // ||zeta||^2
    double grad2 = 0.0;   // ||zeta'||^2
    double D1 = 0.0;      // ||(phi'(zeta))'||^2
    double D2 = 0.0;      // ||(phi'(zeta))''||^2
    double L4_ratio = 0.0;  // ||u||_4 / (2^{1/4} ||u||^{3/4} ||u'||^{1/4}), u = (phi'(zeta))'
};

struct RegularityReport {
    std::vector<RegularityFrame> frames;
    double guaranteed_rate = 0.0;     // 2 lambda pi^2
    double observed_rate = 0.0;  // least-squares slope of -log D1 over t >= t_min
    double worst_contraction = 0.0;  // max over pairs of D1(t2) / (D1(t1) e^{-guaranteed_rate (t2 - t1)})
    bool contraction_holds = true;
    bool l4_holds = true;
    bool energy_monotone = true;

    void write_csv(std::ostream& os) const;
};

RegularityReport regularity_diagnostics(const HydroTrajectory& traj, const TabulatedFunction& phi, double t_min = 0.01,
                                        double tol = 0.05);

template <class F>
HydroField HydroField::from_function(int n, F&& f) {
    static const double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                0.9061798459386640};
    static const double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                                0.2369268850561891};
    std::vector<double> v(n);
    for (int j = 0; j < n; ++j) {
        double s = 0;
        for (int q = 0; q < 5; ++q) s += w[q] * f((j + 0.5 + 0.5 * x[q]) / n);
        v[j] = 0.5 * s;
    }
    return from_values(std::move(v));
}

}  // namespace twoscale
