#pragma once

#include <map>
#include <vector>

#include "twoscale/potential.hpp"
#include "twoscale/tabulated.hpp"

namespace twoscale {

struct QuadratureSpec {
    double h = 1.0 / 512;
    double L = 0.0;  // 0: max(8, 6 max|m| + 8)
};

// Log-Laplace transform of e^{-psi} and its first two derivatives at sigma.
struct LogLaplace {
    double value;  // log int e^{sigma x - psi(x)} dx
    double mean;
    double var;
};

class LogLaplaceQuadrature {
public:
    LogLaplaceQuadrature(const Potential& p, double L, double h);
    LogLaplace operator()(double sigma) const;
    // sigma with mean(sigma) = m
    double solve_tilt(double m, double sigma0 = 0.0) const;
    double L() const { return L_; }

private:
    std::vector<double> x_, psi_;
    double L_, h_;
};

TabulatedFunction cramer_transform(const Potential& p, const GridSpec& m_grid, const QuadratureSpec& quad = {});

TabulatedFunction coarse_potential(const Potential& p, int K, const GridSpec& m_grid, const QuadratureSpec& quad = {},
                                   int threads = 1);

// All requested K share one squaring chain per node.
std::map<int, TabulatedFunction> coarse_potential_ladder(const Potential& p, const std::vector<int>& Ks,
                                                         const GridSpec& m_grid, const QuadratureSpec& quad = {},
                                                         int threads = 1);

TabulatedFunction legendre_transform(const TabulatedFunction& f);

}  // namespace twoscale
