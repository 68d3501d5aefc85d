#include "twoscale/tabulated.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "twoscale/errors.hpp"

namespace twoscale {

TabulatedFunction::TabulatedFunction(GridSpec grid, std::vector<double> values, std::vector<double> d1,
                                     std::vector<double> d2, std::string source)
    : grid_(grid), values_(std::move(values)), d1_(std::move(d1)), d2_(std::move(d2)), source_(std::move(source)) {
    if (grid_.n < 2 || !(grid_.hi > grid_.lo)) throw DomainError("TabulatedFunction: degenerate grid");
    const auto n = static_cast<std::size_t>(grid_.n);
    if (values_.size() != n || d1_.size() != n || d2_.size() != n)
        throw DomainError("TabulatedFunction: array lengths differ from grid");

    const double h = grid_.h();
    coef_.resize(6 * (n - 1));
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double v0 = values_[i], v1 = values_[i + 1];
        const double p0 = h * d1_[i], p1 = h * d1_[i + 1];
        const double a0 = h * h * d2_[i], a1 = h * h * d2_[i + 1];
        const double dv = v1 - v0;
        double* c = &coef_[6 * i];
        c[0] = v0;
        c[1] = p0;
        c[2] = 0.5 * a0;
        c[3] = 10 * dv - 6 * p0 - 4 * p1 - 1.5 * a0 + 0.5 * a1;
        c[4] = -15 * dv + 8 * p0 + 7 * p1 + 1.5 * a0 - a1;
        c[5] = 6 * dv - 3 * p0 - 3 * p1 - 0.5 * a0 + 0.5 * a1;
    }
}

bool TabulatedFunction::contains(double x) const {
    const double tol = 1e-12 * grid_.h();
    return x >= grid_.lo - tol && x <= grid_.hi + tol;
}

int TabulatedFunction::locate(double x, double& s) const {
    if (!std::isfinite(x) || !contains(x)) {
        std::ostringstream os;
        os << "table " << (source_.empty() ? "<unnamed>" : source_) << ": x=" << x << " outside [" << grid_.lo
           << ", " << grid_.hi << "]";
        throw ExtrapolationError(os.str());
    }
    const double u = (x - grid_.lo) / grid_.h();
    int i = static_cast<int>(std::floor(u));
    i = std::clamp(i, 0, grid_.n - 2);
    s = u - i;
    return i;
}

void TabulatedFunction::eval(double x, double& v, double& d1, double& d2) const {
    double s;
    const int i = locate(x, s);
    const double* c = &coef_[6 * static_cast<std::size_t>(i)];
    const double h = grid_.h();
    v = c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))));
    d1 = (c[1] + s * (2 * c[2] + s * (3 * c[3] + s * (4 * c[4] + s * 5 * c[5])))) / h;
    d2 = (2 * c[2] + s * (6 * c[3] + s * (12 * c[4] + s * 20 * c[5]))) / (h * h);
}

double TabulatedFunction::value(double x) const {
    double s;
    const int i = locate(x, s);
    const double* c = &coef_[6 * static_cast<std::size_t>(i)];
    return c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))));
}

double TabulatedFunction::deriv1(double x) const {
    double s;
    const int i = locate(x, s);
    const double* c = &coef_[6 * static_cast<std::size_t>(i)];
    return (c[1] + s * (2 * c[2] + s * (3 * c[3] + s * (4 * c[4] + s * 5 * c[5])))) / grid_.h();
}

double TabulatedFunction::deriv2(double x) const {
    double s;
    const int i = locate(x, s);
    const double* c = &coef_[6 * static_cast<std::size_t>(i)];
    const double h = grid_.h();
    return (2 * c[2] + s * (6 * c[3] + s * (12 * c[4] + s * 20 * c[5]))) / (h * h);
}

void TabulatedFunction::write_csv(std::ostream& os) const {
    os << "# source=" << (source_.empty() ? "unnamed" : source_) << "\n";
    os << "m,value,d1,d2\n";
    char buf[128];
    for (int i = 0; i < grid_.n; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", grid_.node(i), values_[i], d1_[i], d2_[i]);
        os << buf;
    }
}

std::vector<double> fd_first(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    if (n < 5) throw DomainError("fd_first: need at least 5 nodes");
    std::vector<double> d(n);
    const double c = 1.0 / (12 * h);
    for (std::size_t i = 2; i + 2 < n; ++i) d[i] = (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]) * c;
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) * c;
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) * c;
    d[n - 1] = -(-25 * f[n - 1] + 48 * f[n - 2] - 36 * f[n - 3] + 16 * f[n - 4] - 3 * f[n - 5]) * c;
    d[n - 2] = -(-3 * f[n - 1] - 10 * f[n - 2] + 18 * f[n - 3] - 6 * f[n - 4] + f[n - 5]) * c;
    return d;
}

std::vector<double> fd_second(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    if (n < 6) throw DomainError("fd_second: need at least 6 nodes");
    std::vector<double> d(n);
    const double c = 1.0 / (12 * h * h);
    for (std::size_t i = 2; i + 2 < n; ++i)
        d[i] = (-f[i - 2] + 16 * f[i - 1] - 30 * f[i] + 16 * f[i + 1] - f[i + 2]) * c;
    d[0] = (45 * f[0] - 154 * f[1] + 214 * f[2] - 156 * f[3] + 61 * f[4] - 10 * f[5]) * c;
    d[1] = (10 * f[0] - 15 * f[1] - 4 * f[2] + 14 * f[3] - 6 * f[4] + f[5]) * c;
    d[n - 1] = (45 * f[n - 1] - 154 * f[n - 2] + 214 * f[n - 3] - 156 * f[n - 4] + 61 * f[n - 5] - 10 * f[n - 6]) * c;
    d[n - 2] = (10 * f[n - 1] - 15 * f[n - 2] - 4 * f[n - 3] + 14 * f[n - 4] - 6 * f[n - 5] + f[n - 6]) * c;
    return d;
}

ConvexityBounds convexity_bounds(const TabulatedFunction& f, int edge_skip) {
    const auto& d2 = f.d2();
    const int n = static_cast<int>(d2.size());
    int a = edge_skip, b = n - edge_skip;
    if (b <= a) a = 0, b = n;
    auto [lo, hi] = std::minmax_element(d2.begin() + a, d2.begin() + b);
    return {*lo, *hi};
}

}  // namespace twoscale
