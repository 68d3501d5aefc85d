#include "twoscale/grid_density.hpp"

#include <cmath>

#include "twoscale/errors.hpp"

namespace twoscale {

GridDensity GridDensity::make_1d(double lo, double hi, int n) {
    if (n < 3 || !(hi > lo)) throw DomainError("GridDensity: bad 1-D grid");
    GridDensity g;
    g.dim = 1;
    g.lo = {lo, 0};
    g.hi = {hi, 0};
    g.n = {n, 1};
    g.values.assign(n, 0.0);
    return g;
}

GridDensity GridDensity::make_2d(std::array<double, 2> lo, std::array<double, 2> hi, std::array<int, 2> n) {
    if (n[0] < 3 || n[1] < 3 || !(hi[0] > lo[0]) || !(hi[1] > lo[1])) throw DomainError("GridDensity: bad 2-D grid");
    GridDensity g;
    g.dim = 2;
    g.lo = lo;
    g.hi = hi;
    g.n = n;
    g.values.assign(static_cast<std::size_t>(n[0]) * n[1], 0.0);
    return g;
}

GridDensity GridDensity::sample(const GridDensity& shape, const std::function<double(double, double)>& f) {
    GridDensity g = shape;
    if (g.dim == 1) {
        for (int i = 0; i < g.n[0]; ++i) g.values[i] = f(g.node(0, i), 0.0);
    } else {
        for (int i = 0; i < g.n[0]; ++i)
            for (int j = 0; j < g.n[1]; ++j) g.values[static_cast<std::size_t>(i) * g.n[1] + j] = f(g.node(0, i), g.node(1, j));
    }
    return g;
}

bool GridDensity::same_grid(const GridDensity& o) const {
    return dim == o.dim && n == o.n && lo == o.lo && hi == o.hi;
}

double GridDensity::integrate(const std::function<double(double, double)>& gfun) const {
    double s = 0.0;
    if (dim == 1) {
        for (int i = 0; i < n[0]; ++i) {
            const double w = (i == 0 || i == n[0] - 1) ? 0.5 : 1.0;
            s += w * values[i] * gfun(node(0, i), 0.0);
        }
        return s * h(0);
    }
    for (int i = 0; i < n[0]; ++i) {
        const double wi = (i == 0 || i == n[0] - 1) ? 0.5 : 1.0;
        for (int j = 0; j < n[1]; ++j) {
            const double wj = (j == 0 || j == n[1] - 1) ? 0.5 : 1.0;
            s += wi * wj * values[static_cast<std::size_t>(i) * n[1] + j] * gfun(node(0, i), node(1, j));
        }
    }
    return s * h(0) * h(1);
}

double GridDensity::mass() const {
    return integrate([](double, double) { return 1.0; });
}

GridDensity& GridDensity::normalize() {
    const double m = mass();
    if (!(m > 0) || !std::isfinite(m)) throw NumericalError("GridDensity: cannot normalize zero mass");
    for (auto& v : values) v /= m;
    return *this;
}

}  // namespace twoscale
