#pragma once

#include <array>
#include <functional>
#include <vector>

namespace twoscale {

// Nonnegative density sampled on a uniform 1-D or 2-D grid (row-major, axis 0 slowest).
struct GridDensity {
    int dim = 1;
    std::array<double, 2> lo{0, 0}, hi{1, 1};
    std::array<int, 2> n{2, 1};
    std::vector<double> values;

    static GridDensity make_1d(double lo, double hi, int n);
    static GridDensity make_2d(std::array<double, 2> lo, std::array<double, 2> hi, std::array<int, 2> n);
    // fill from f(x) or f(x, y)
    static GridDensity sample(const GridDensity& shape, const std::function<double(double, double)>& f);

    double h(int axis) const { return (hi[axis] - lo[axis]) / (n[axis] - 1); }
    double node(int axis, int i) const { return lo[axis] + i * h(axis); }
    std::size_t size() const { return values.size(); }
    bool same_grid(const GridDensity& o) const;

    double mass() const;  // trapezoidal
    GridDensity& normalize();
    // trapezoidal integral of g * values
    double integrate(const std::function<double(double, double)>& g) const;
};

}  // namespace twoscale
