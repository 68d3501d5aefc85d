#include "twoscale/projection.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "twoscale/errors.hpp"

namespace twoscale {

MacroProfile MacroProfile::from_values(std::vector<double> v) {
    if (v.empty()) throw DomainError("MacroProfile: empty");
    MacroProfile p;
    p.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    p.values = std::move(v);
    return p;
}

MacroProfile MacroProfile::constant(int M, double m) {
    MacroProfile p;
    p.mean = m;
    p.values.assign(M, m);
    return p;
}

void MacroProfile::check(double tol) const {
    const double avg = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    if (std::abs(avg - mean) > tol) {
        std::ostringstream os;
        os << "MacroProfile: average " << avg << " differs from mean " << mean;
        throw ConsistencyError(os.str());
    }
}

Projection::Projection(int N, int M) : N_(N), M_(M), K_(M > 0 ? N / M : 0) {
    if (N < 1 || M < 1 || N % M != 0) throw DomainError("Projection: need N = K*M with K, M >= 1");
}

void Projection::project(const double* x, double* y) const {
    for (int j = 0; j < M_; ++j) {
        double s = 0.0;
        for (int i = j * K_; i < (j + 1) * K_; ++i) s += x[i];
        y[j] = s / K_;
    }
}

std::vector<double> Projection::project(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != N_) throw DomainError("project: length mismatch");
    std::vector<double> y(M_);
    project(x.data(), y.data());
    return y;
}

MacroProfile Projection::project_profile(const std::vector<double>& x) const {
    MacroProfile p;
    p.values = project(x);
    p.mean = std::accumulate(x.begin(), x.end(), 0.0) / N_;
    return p;
}

std::vector<double> Projection::lift(const std::vector<double>& y) const {
    if (static_cast<int>(y.size()) != M_) throw DomainError("lift: length mismatch");
    std::vector<double> x(N_);
    for (int i = 0; i < N_; ++i) x[i] = y[i / K_];
    return x;
}

double dot_Y(const std::vector<double>& y, const std::vector<double>& z) {
    if (y.size() != z.size()) throw DomainError("dot_Y: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * z[i];
    return s / y.size();
}

double norm2_Y(const std::vector<double>& y) { return dot_Y(y, y); }

}  // namespace twoscale
