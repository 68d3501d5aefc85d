#pragma once

#include <vector>

#include "twoscale/fft.hpp"

namespace twoscale {

// A_ij = N^2 (-d_{i,j-1} + 2 d_ij - d_{i,j+1}), periodic; applied by stencil or in Fourier space.
class KawasakiOperator {
public:
    explicit KawasakiOperator(int N);

    int n() const { return n_; }
    // 2 N^2 (1 - cos(2 pi k / N))
    double eigenvalue(int k) const;
    double tau() const { return eigenvalue(1); }
    double lambda_max() const;

    void apply(const double* x, double* y) const;
    std::vector<double> apply(const std::vector<double>& x) const;

    // Mean-zero solve; ws must have length N.
    void apply_inverse(const double* x, double* z, RealFft& ws) const;
    std::vector<double> apply_inverse(const std::vector<double>& x) const;

    // <r, A^{-1} r> for mean-zero r
    double inverse_quadratic_form(const double* r, RealFft& ws) const;

    // e^{-tA} x
    std::vector<double> apply_exp(const std::vector<double>& x, double t) const;

private:
    int n_;
    std::vector<double> eig_;  // k = 0..N/2
};

KawasakiOperator build_kawasaki(int N);
std::vector<double> apply_A_inverse(const KawasakiOperator& op, const std::vector<double>& x);

}  // namespace twoscale
