#pragma once

#include <vector>

namespace twoscale {

// A point of Y_{M,m}: M block averages with mean m.
struct MacroProfile {
    double mean = 0.0;
    std::vector<double> values;

    static MacroProfile from_values(std::vector<double> v);
    static MacroProfile constant(int M, double m);
    int size() const { return static_cast<int>(values.size()); }
    // throws ConsistencyError if |avg - mean| > tol
    void check(double tol = 1e-10) const;
};

// Block averaging P : X_N -> Y_M, y_j = (1/K) sum over block j.
class Projection {
public:
    Projection(int N, int M);

    int n_sites() const { return N_; }
    int n_blocks() const { return M_; }
    int block_size() const { return K_; }

    std::vector<double> project(const std::vector<double>& x) const;
    void project(const double* x, double* y) const;
    MacroProfile project_profile(const std::vector<double>& x) const;

    // N P^t y: block-constant embedding
    std::vector<double> lift(const std::vector<double>& y) const;
    std::vector<double> lift(const MacroProfile& y) const { return lift(y.values); }

private:
    int N_, M_, K_;
};

// <y, z>_Y = (1/M) sum y_j z_j
double dot_Y(const std::vector<double>& y, const std::vector<double>& z);
double norm2_Y(const std::vector<double>& y);

}  // namespace twoscale
