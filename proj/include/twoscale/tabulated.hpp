#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace twoscale {

struct GridSpec {
    double lo = -1.0;
    double hi = 1.0;
    int n = 201;

    double h() const { return (hi - lo) / (n - 1); }
    double node(int i) const { return lo + i * h(); }
};

// Uniform-grid function with first and second derivatives.
// Evaluation between nodes is quintic Hermite on (value, d1, d2).
class TabulatedFunction {
public:
    TabulatedFunction() = default;
    TabulatedFunction(GridSpec grid, std::vector<double> values, std::vector<double> d1,
                      std::vector<double> d2, std::string source = "");

    const GridSpec& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& d1() const { return d1_; }
    const std::vector<double>& d2() const { return d2_; }
    int size() const { return grid_.n; }
    double lo() const { return grid_.lo; }
    double hi() const { return grid_.hi; }
    bool contains(double x) const;

    double value(double x) const;
    double deriv1(double x) const;
    double deriv2(double x) const;
    void eval(double x, double& v, double& d1, double& d2) const;

    const std::string& source() const { return source_; }
    void set_source(std::string s) { source_ = std::move(s); }

    // m,value,d1,d2 with a leading comment line naming the source
    void write_csv(std::ostream& os) const;

private:
    int locate(double x, double& s) const;

    GridSpec grid_;
    std::vector<double> values_, d1_, d2_;
    std::vector<double> coef_;  // 6 per interval, in powers of s
    std::string source_;
};

// Fourth-order differences (one-sided at the edges).
std::vector<double> fd_first(const std::vector<double>& f, double h);
std::vector<double> fd_second(const std::vector<double>& f, double h);

struct ConvexityBounds {
    double lambda;
    double Lambda;
};

// min/max of d2, edge nodes excluded
ConvexityBounds convexity_bounds(const TabulatedFunction& f, int edge_skip = 2);

}  // namespace twoscale
