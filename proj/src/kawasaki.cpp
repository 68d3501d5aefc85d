#include "twoscale/kawasaki.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "twoscale/errors.hpp"

namespace twoscale {

namespace {

void check_mean_zero(const double* x, int n) {
    double s = 0.0, mx = 0.0;
    for (int i = 0; i < n; ++i) {
        s += x[i];
        mx = std::max(mx, std::abs(x[i]));
    }
    if (std::abs(s) > 1e-8 * n * std::max(mx, 1e-300) && std::abs(s) > 1e-300)
        throw PreconditionError("A^{-1}: input is not mean-zero");
}

}  // namespace

KawasakiOperator::KawasakiOperator(int N) : n_(N) {
    if (N < 3) throw DomainError("Kawasaki operator needs N >= 3");
    eig_.resize(N / 2 + 1);
    for (int k = 0; k <= N / 2; ++k) eig_[k] = eigenvalue(k);
}

double KawasakiOperator::eigenvalue(int k) const {
    const double N = n_;
    return 2.0 * N * N * (1.0 - std::cos(2.0 * std::numbers::pi * k / N));
}

double KawasakiOperator::lambda_max() const { return *std::max_element(eig_.begin(), eig_.end()); }

void KawasakiOperator::apply(const double* x, double* y) const {
    const double N2 = double(n_) * n_;
    for (int i = 0; i < n_; ++i) {
        const double l = x[(i + n_ - 1) % n_], r = x[(i + 1) % n_];
        y[i] = N2 * (2.0 * x[i] - l - r);
    }
}

std::vector<double> KawasakiOperator::apply(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != n_) throw DomainError("A: length mismatch");
    std::vector<double> y(n_);
    apply(x.data(), y.data());
    return y;
}

void KawasakiOperator::apply_inverse(const double* x, double* z, RealFft& ws) const {
    check_mean_zero(x, n_);
    std::copy(x, x + n_, ws.real());
    ws.forward();
    auto* s = ws.spec();
    s[0] = 0.0;
    for (int k = 1; k <= n_ / 2; ++k) s[k] /= eig_[k];
    ws.backward();
    for (int i = 0; i < n_; ++i) z[i] = ws.real()[i] / n_;
}

std::vector<double> KawasakiOperator::apply_inverse(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != n_) throw DomainError("A^{-1}: length mismatch");
    RealFft ws(n_);
    std::vector<double> z(n_);
    apply_inverse(x.data(), z.data(), ws);
    return z;
}

double KawasakiOperator::inverse_quadratic_form(const double* r, RealFft& ws) const {
    std::copy(r, r + n_, ws.real());
    ws.forward();
    const auto* s = ws.spec();
    double acc = 0.0;
    for (int k = 1; k <= n_ / 2; ++k) {
        const double w = (2 * k == n_) ? 1.0 : 2.0;
        acc += w * std::norm(s[k]) / eig_[k];
    }
    return acc / n_;
}

std::vector<double> KawasakiOperator::apply_exp(const std::vector<double>& x, double t) const {
    if (static_cast<int>(x.size()) != n_) throw DomainError("exp(-tA): length mismatch");
    RealFft ws(n_);
    std::copy(x.begin(), x.end(), ws.real());
    ws.forward();
    for (int k = 1; k <= n_ / 2; ++k) ws.spec()[k] *= std::exp(-t * eig_[k]);
    ws.backward();
    std::vector<double> y(n_);
    for (int i = 0; i < n_; ++i) y[i] = ws.real()[i] / n_;
    return y;
}

KawasakiOperator build_kawasaki(int N) { return KawasakiOperator(N); }

std::vector<double> apply_A_inverse(const KawasakiOperator& op, const std::vector<double>& x) {
    return op.apply_inverse(x);
}

}  // namespace twoscale
