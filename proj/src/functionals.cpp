#include "twoscale/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "twoscale/coarse_grain.hpp"
#include "twoscale/errors.hpp"
#include "twoscale/fft.hpp"
#include "twoscale/tabulated.hpp"

namespace twoscale {

using std::numbers::pi;

namespace {

std::vector<double> trapezoid_weights(const GridDensity& g) {
    std::vector<double> w(g.size());
    auto w1 = [&](int axis, int i) { return g.h(axis) * ((i == 0 || i == g.n[axis] - 1) ? 0.5 : 1.0); };
    if (g.dim == 1) {
        for (int i = 0; i < g.n[0]; ++i) w[i] = w1(0, i);
    } else {
        for (int i = 0; i < g.n[0]; ++i)
            for (int j = 0; j < g.n[1]; ++j) w[static_cast<std::size_t>(i) * g.n[1] + j] = w1(0, i) * w1(1, j);
    }
    return w;
}

void require_same_grid(const GridDensity& a, const GridDensity& b, const char* who) {
    if (!a.same_grid(b)) throw DomainError(std::string(who) + ": densities live on different grids");
}

std::vector<double> normalized(const GridDensity& g, const std::vector<double>& w, const char* who) {
    double mass = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.values[i] < 0 || !std::isfinite(g.values[i])) throw DomainError(std::string(who) + ": negative or non-finite density");
        mass += w[i] * g.values[i];
    }
    if (!(mass > 0)) throw DomainError(std::string(who) + ": zero mass");
    std::vector<double> p(g.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = g.values[i] / mass;
    return p;
}

// d - log(1 + d), accurate for small |d|
double kl_term(double d) {
    if (d <= -1) return INFINITY;
    if (std::abs(d) < 0.1) {
        double s = 0, pw = d * d;
        for (int j = 2; j < 40; ++j) {
            s += ((j % 2) ? -pw : pw) / j;
            pw *= d;
        }
        return s;
    }
    return d - std::log1p(d);
}

// monotone CDF of a 1-D grid density with an O(h^4) cumulative rule and Hermite inversion
class GridCdf {
public:
    explicit GridCdf(const GridDensity& g) : g_(g) {
        const int n = g.n[0];
        const double h = g.h(0);
        std::vector<double> w(n, h);
        w.front() = w.back() = 0.5 * h;
        p_ = normalized(g, w, "GridCdf");
        const auto dp = fd_first(p_, h);
        F_.assign(n, 0.0);
        for (int i = 1; i < n; ++i) F_[i] = F_[i - 1] + 0.5 * h * (p_[i - 1] + p_[i]) - h * h / 12 * (dp[i] - dp[i - 1]);
        for (int i = 1; i < n; ++i) F_[i] = std::max(F_[i], F_[i - 1]);
        const double tot = F_.back();
        for (auto& v : F_) v /= tot;
        for (auto& v : p_) v /= tot;
    }
    const std::vector<double>& density() const { return p_; }
    double at_node(int i) const { return F_[i]; }

    double inverse(double u) const {
        const int n = g_.n[0];
        if (u <= F_.front()) return g_.lo[0];
        if (u >= F_.back()) return g_.hi[0];
        const int i = static_cast<int>(std::upper_bound(F_.begin(), F_.end(), u) - F_.begin()) - 1;
        const int j = std::min(i + 1, n - 1);
        const double h = g_.h(0), x0 = g_.node(0, i);
        // cubic Hermite on [0, 1] with slopes h p
        auto H = [&](double s) {
            const double s2 = s * s, s3 = s2 * s;
            return (2 * s3 - 3 * s2 + 1) * F_[i] + (s3 - 2 * s2 + s) * h * p_[i] + (-2 * s3 + 3 * s2) * F_[j] +
                   (s3 - s2) * h * p_[j];
        };
        double a = 0, b = 1;
        for (int it = 0; it < 60; ++it) {
            const double c = 0.5 * (a + b);
            if (H(c) < u) a = c;
            else b = c;
        }
        return x0 + 0.5 * (a + b) * h;
    }

private:
    GridDensity g_;
    std::vector<double> p_, F_;
};

// minimum-cost perfect assignment, O(n^3)
double assignment_cost(const std::vector<double>& C, int n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = C[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    double cost = 0;
    for (int j = 1; j <= n; ++j) cost += C[static_cast<std::size_t>(p[j] - 1) * n + (j - 1)];
    return cost;
}

}  // namespace

double entropy_grid(const GridDensity& rho, const GridDensity& mu) {
    require_same_grid(rho, mu, "entropy_grid");
    const auto w = trapezoid_weights(rho);
    const auto p = normalized(rho, w, "entropy_grid");
    const auto q = normalized(mu, w, "entropy_grid");
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0) continue;
        if (!(q[i] > 0)) throw DomainError("entropy_grid: rho is not absolutely continuous with respect to mu");
        s += w[i] * p[i] * std::log(p[i] / q[i]);
    }
    return std::max(0.0, s);
}

double fisher_grid(const GridDensity& rho, const GridDensity& mu) {
    require_same_grid(rho, mu, "fisher_grid");
    const auto w = trapezoid_weights(rho);
    const auto p = normalized(rho, w, "fisher_grid");
    const auto q = normalized(mu, w, "fisher_grid");
    std::vector<double> L(p.size(), NAN);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0) continue;
        if (!(q[i] > 0)) throw DomainError("fisher_grid: rho is not absolutely continuous with respect to mu");
        L[i] = std::log(p[i] / q[i]);
    }
    const int n0 = rho.n[0], n1 = rho.dim == 2 ? rho.n[1] : 1;
    auto idx = [n1](int i, int j) { return static_cast<std::size_t>(i) * n1 + j; };
    // derivative of L along an axis with central differences, one-sided at edges and next to empty nodes
    auto deriv = [&](int i, int j, int axis) -> double {
        const int n = axis == 0 ? n0 : n1;
        const int k = axis == 0 ? i : j;
        const double h = rho.h(axis);
        auto at = [&](int kk) { return axis == 0 ? L[idx(kk, j)] : L[idx(i, kk)]; };
        const bool lo = k > 0 && std::isfinite(at(k - 1)), hi = k + 1 < n && std::isfinite(at(k + 1));
        if (lo && hi) return (at(k + 1) - at(k - 1)) / (2 * h);
        if (hi && k + 2 < n && std::isfinite(at(k + 2))) return (-3 * at(k) + 4 * at(k + 1) - at(k + 2)) / (2 * h);
        if (lo && k >= 2 && std::isfinite(at(k - 2))) return (3 * at(k) - 4 * at(k - 1) + at(k - 2)) / (2 * h);
        return 0.0;
    };
    double s = 0;
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j) {
            const auto k = idx(i, j);
            if (!std::isfinite(L[k])) continue;
            double g2 = 0;
            for (int axis = 0; axis < rho.dim; ++axis) {
                const double d = deriv(i, j, axis);
                g2 += d * d;
            }
            s += w[k] * p[k] * g2;
        }
    return s;
}

McEstimate w2_to_dirac(const std::vector<double>& samples, int dim, const std::vector<double>& eta,
                       double metric_weight, const std::vector<int>& chain) {
    if (dim < 1 || static_cast<int>(eta.size()) != dim || samples.size() % dim != 0 || samples.empty())
        throw DomainError("w2_to_dirac: inconsistent sample layout");
    const std::size_t R = samples.size() / dim;
    std::vector<double> d(R);
    for (std::size_t r = 0; r < R; ++r) {
        double s = 0;
        for (int j = 0; j < dim; ++j) {
            const double e = samples[r * dim + j] - eta[j];
            s += e * e;
        }
        d[r] = metric_weight * s;
    }
    if (chain.empty()) return mc_mean(d);
    if (chain.size() != R) throw DomainError("w2_to_dirac: chain ids do not match the samples");
    const int C = *std::max_element(chain.begin(), chain.end()) + 1;
    std::vector<double> sum(C, 0.0);
    std::vector<int> cnt(C, 0);
    for (std::size_t r = 0; r < R; ++r) {
        sum[chain[r]] += d[r];
        ++cnt[chain[r]];
    }
    std::vector<double> means;
    for (int c = 0; c < C; ++c)
        if (cnt[c] > 0) means.push_back(sum[c] / cnt[c]);
    McEstimate e;
    e.value = mc_mean(d).value;
    e.stderr_ = means.size() > 1 ? mc_mean(means).stderr_ : mc_mean(d).stderr_;
    return e;
}

double w2_to_dirac(const GridDensity& rho, const std::vector<double>& eta, double metric_weight) {
    if (static_cast<int>(eta.size()) != rho.dim) throw DomainError("w2_to_dirac: eta dimension mismatch");
    const double mass = rho.mass();
    if (!(mass > 0)) throw DomainError("w2_to_dirac: zero mass");
    const double e0 = eta[0], e1 = rho.dim == 2 ? eta[1] : 0.0;
    const double m2 = rho.integrate([&](double x, double y) {
        const double dy = rho.dim == 2 ? y - e1 : 0.0;
        return (x - e0) * (x - e0) + dy * dy;
    });
    return metric_weight * m2 / mass;
}

double w2_empirical(const std::vector<double>& a, const std::vector<double>& b, int dim, double metric_weight) {
    if (dim < 1 || dim > 3) throw DomainError("w2_empirical: only dimensions 1 to 3 are supported");
    if (a.size() != b.size() || a.empty() || a.size() % dim != 0)
        throw PreconditionError("w2_empirical: sample sets must have equal, nonzero size");
    const int n = static_cast<int>(a.size() / dim);
    if (dim == 1) {
        auto x = a, y = b;
        std::sort(x.begin(), x.end());
        std::sort(y.begin(), y.end());
        double s = 0;
        for (int i = 0; i < n; ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
        return metric_weight * s / n;
    }
    if (n > 2048) throw DomainError("w2_empirical: assignment solver limited to 2048 points");
    std::vector<double> C(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0;
            for (int k = 0; k < dim; ++k) {
                const double d = a[static_cast<std::size_t>(i) * dim + k] - b[static_cast<std::size_t>(j) * dim + k];
                s += d * d;
            }
            C[static_cast<std::size_t>(i) * n + j] = s;
        }
    return metric_weight * assignment_cost(C, n) / n;
}

double w2_grid_1d(const GridDensity& a, const GridDensity& b) {
    if (a.dim != 1 || b.dim != 1) throw DomainError("w2_grid_1d: 1-D densities only");
    GridCdf Fa(a), Fb(b);
    const auto& p = Fa.density();
    const double h = a.h(0);
    double s = 0;
    for (int i = 0; i < a.n[0]; ++i) {
        if (p[i] == 0) continue;
        const double x = a.node(0, i);
        const double t = Fb.inverse(Fa.at_node(i));
        const double w = (i == 0 || i == a.n[0] - 1) ? 0.5 * h : h;
        s += w * p[i] * (t - x) * (t - x);
    }
    return s;
}

InequalityCheck hwi_check(const GridDensity& mu, const GridDensity& nu, double lambda, double slack) {
    if (mu.dim != 1) throw DomainError("hwi_check: 1-D grids only");
    require_same_grid(mu, nu, "hwi_check");
    // lambda-log-concavity of mu where it is resolved
    const int n = mu.n[0];
    const double h = mu.h(0);
    const double top = *std::max_element(mu.values.begin(), mu.values.end());
    double min_d2 = INFINITY;
    for (int i = 1; i + 1 < n; ++i) {
        if (mu.values[i - 1] < 1e-12 * top || mu.values[i] < 1e-12 * top || mu.values[i + 1] < 1e-12 * top) continue;
        const double d2 = -(std::log(mu.values[i + 1]) - 2 * std::log(mu.values[i]) + std::log(mu.values[i - 1])) / (h * h);
        min_d2 = std::min(min_d2, d2);
    }
    if (min_d2 < lambda - 1e-4 * std::max(1.0, std::abs(lambda))) {
        std::ostringstream os;
        os << "hwi_check: -log mu has curvature " << min_d2 << " below the claimed lambda " << lambda;
        throw PreconditionError(os.str());
    }
    InequalityCheck r;
    r.lhs = entropy_grid(nu, mu);
    const double I = fisher_grid(nu, mu);
    const double W = std::sqrt(w2_grid_1d(mu, nu));
    r.rhs = W * std::sqrt(I) - 0.5 * lambda * W * W;
    r.holds = r.lhs <= r.rhs + slack;
    return r;
}

InequalityCheck second_moment_lemma_check(const std::function<double(double, double)>& f, int dim, double lambda,
                                          double L, int n, double slack) {
    if (dim != 1 && dim != 2) throw DomainError("second_moment_lemma_check: dimension 1 or 2");
    if (!(lambda > 0) || !(L > 0) || n < 5) throw DomainError("second_moment_lemma_check: bad arguments");
    if (n % 2 == 0) ++n;
    const double h = 2 * L / (n - 1);
    const int n1 = dim == 2 ? n : 1;
    auto X = [&](int i) { return -L + i * h; };
    std::vector<double> F(static_cast<std::size_t>(n) * n1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n1; ++j) F[static_cast<std::size_t>(i) * n1 + j] = f(X(i), dim == 2 ? X(j) : 0.0);
    const double f0 = f(0.0, 0.0);
    const double fmin = *std::min_element(F.begin(), F.end());
    if (fmin < f0 - 1e-12 * (1 + std::abs(f0))) throw PreconditionError("second_moment_lemma_check: minimum is not at the origin");
    const double tol = 1e-4 * std::max(1.0, lambda) + h * h;
    auto at = [&](int i, int j) { return F[static_cast<std::size_t>(i) * n1 + j]; };
    for (int i = 1; i + 1 < n; ++i)
        for (int j = (dim == 2 ? 1 : 0); j < (dim == 2 ? n - 1 : 1); ++j) {
            double hmin;
            if (dim == 1) {
                hmin = (at(i + 1, 0) - 2 * at(i, 0) + at(i - 1, 0)) / (h * h);
            } else {
                const double fxx = (at(i + 1, j) - 2 * at(i, j) + at(i - 1, j)) / (h * h);
                const double fyy = (at(i, j + 1) - 2 * at(i, j) + at(i, j - 1)) / (h * h);
                const double fxy = (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) / (4 * h * h);
                hmin = 0.5 * (fxx + fyy) - std::sqrt(0.25 * (fxx - fyy) * (fxx - fyy) + fxy * fxy);
            }
            if (hmin < lambda - tol) {
                std::ostringstream os;
                os << "second_moment_lemma_check: Hessian " << hmin << " below lambda " << lambda;
                throw PreconditionError(os.str());
            }
        }
    // both sides carry the common factor e^{-f(0)}
    double lhs = 0, z = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n1; ++j) {
            const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
            const double wj = dim == 1 ? 1.0 : ((j == 0 || j == n - 1) ? 0.5 : 1.0);
            const double w = wi * wj * std::pow(h, dim);
            const double e = std::exp(-(at(i, j) - f0));
            const double r2 = X(i) * X(i) + (dim == 2 ? X(j) * X(j) : 0.0);
            lhs += w * r2 * e;
            z += w * e;
        }
    InequalityCheck r;
    r.lhs = lhs;
    r.rhs = dim / lambda * z;
    r.holds = r.lhs <= r.rhs + slack;
    return r;
}

double xi_bound(double T, int M, int N, const ConstantsLedger& c, double theta0) {
    if (!(T >= 0) || M < 1 || N < 1) throw DomainError("xi_bound: need T >= 0 and M, N >= 1");
    if (!(c.rho > 0) || !(c.lambda > 0)) throw DomainError("xi_bound: rho and lambda must be positive");
    if (c.kappa < 0 || c.alpha < 0 || c.gamma < 0 || c.C1 < 0 || c.C2 + c.beta < 0 || theta0 < 0)
        throw DomainError("xi_bound: negative ledger entry");
    const double rho_hat = two_scale_lsi_constant(c.rho, c.lambda, c.kappa);
    const double t1 = theta0;
    const double t2 = T * double(M) / N;
    const double t3 = c.C1 * c.gamma * c.kappa * c.kappa / (2 * c.lambda * c.rho * c.rho) / (double(M) * M);
    const double t4 = std::sqrt(2 * c.gamma * T) * std::sqrt(c.alpha + 2 * c.C1 / rho_hat) *
                      (std::sqrt(c.C1) + std::sqrt(c.C2 + c.beta)) / M;
    return t1 + t2 + t3 + t4;
}

FreeEnergyGapTerms free_energy_gap_terms(double T, int M, int N, const ConstantsLedger& c, double theta0) {
    if (!(c.tau > 0) || !(c.Lambda > 0)) throw DomainError("free-energy gap bound: tau and Lambda must be positive");
    const double xi = xi_bound(T, M, N, c, theta0);
    const double cb = c.C2 + c.beta;
    const double MN = double(M) / N;
    FreeEnergyGapTerms g;
    const double w2 = 2 * T * MN / c.lambda + 4 / c.lambda * xi;
    const double fisher = 2 * cb / c.tau + 2 * c.C1 * (c.kappa * c.kappa + c.rho * c.rho) / (c.tau * c.rho * c.rho);
    g.local_entropy = std::sqrt(w2) * std::sqrt(fisher) + c.gamma * c.C1 / (2.0 * M * M * c.rho);
    g.cross = std::sqrt(2 * cb * xi / (c.lambda * c.tau)) + std::sqrt(T * MN * cb / (c.lambda * c.tau));
    double log_term = 0;
    if (M >= 2) {
        const double g2 = 2 * pi * M;
        log_term = T * (M - 1) / (2.0 * N) *
                   std::max(std::abs(std::log(g2 / (c.Lambda * N))), std::abs(std::log(g2 / (c.lambda * N))));
    }
    g.local_gibbs = log_term + std::sqrt(T * MN * cb / (c.lambda * c.tau));
    g.total = g.local_entropy + g.cross + g.local_gibbs;
    return g;
}

double free_energy_gap_bound(double T, int M, int N, const ConstantsLedger& c, double theta0) {
    return free_energy_gap_terms(T, M, N, c, theta0).total;
}

Eigen::MatrixXd kawasaki_matrix(int N) {
    if (N < 2) throw DomainError("kawasaki_matrix: N >= 2");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
    const double s = double(N) * N;
    for (int i = 0; i < N; ++i) {
        A(i, i) += 2 * s;
        A(i, (i + 1) % N) -= s;
        A(i, (i + N - 1) % N) -= s;
    }
    return A;
}

namespace {

Eigen::MatrixXd mean_zero_basis(int n) {
    Eigen::MatrixXd Pi = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Pi);
    return es.eigenvectors().rightCols(n - 1);
}

Eigen::VectorXd reduced_eigenvalues(const GaussianState& g) {
    const auto Q = mean_zero_basis(g.n());
    Eigen::MatrixXd S = Q.transpose() * g.cov * Q;
    S = 0.5 * (S + S.transpose()).eval();
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly).eigenvalues();
}

double mean_dev2(const GaussianState& g) {
    const double m = g.m();
    return (g.mean.array() - m).square().sum();
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& A) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(A.rows(), A.cols());
    for (int k = 0; k < A.rows(); ++k)
        if (es.eigenvalues()(k) > 1e-12 * top) P += es.eigenvectors().col(k) * es.eigenvectors().col(k).transpose() / es.eigenvalues()(k);
    return P;
}

}  // namespace

void GaussianState::check() const {
    const int n = this->n();
    if (cov.rows() != n || cov.cols() != n) throw ConsistencyError("GaussianState: covariance shape");
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw NumericalError("GaussianState: covariance not symmetric");
    if ((cov * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw ConsistencyError("GaussianState: covariance leaves the hyperplane");
    const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (lo < -1e-12 * scale) throw NumericalError("GaussianState: covariance not positive semidefinite");
}

GaussianState gaussian_oracle_evolve(const GaussianState& g, const Eigen::MatrixXd& A, double t) {
    const int n = g.n();
    if (A.rows() != n) throw DomainError("gaussian oracle: dimension mismatch");
    if (t < 0) throw DomainError("gaussian oracle: negative time");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const Eigen::VectorXd d = (-t * es.eigenvalues().array().max(0.0)).exp();
    const Eigen::MatrixXd E = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
    const Eigen::MatrixXd Pi = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    const double m = g.m();
    GaussianState out;
    out.mean = Eigen::VectorXd::Constant(n, m) + E * (g.mean - Eigen::VectorXd::Constant(n, m));
    out.cov = E * (g.cov - Pi) * E + Pi;
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
    out.check();
    return out;
}

double relative_entropy(const GaussianState& g) {
    const auto ev = reduced_eigenvalues(g);
    double s = 0;
    for (int k = 0; k < ev.size(); ++k) s += kl_term(ev(k) - 1);
    return 0.5 * (s + mean_dev2(g));
}

double fisher_information(const GaussianState& g) {
    const auto ev = reduced_eigenvalues(g);
    double s = 0;
    for (int k = 0; k < ev.size(); ++k) {
        if (!(ev(k) > 0)) return INFINITY;
        s += (ev(k) - 1) * (ev(k) - 1) / ev(k);
    }
    return s + mean_dev2(g);
}

double theta_functional(const GaussianState& g, const std::vector<double>& eta, const Eigen::MatrixXd& A) {
    const int n = g.n(), M = static_cast<int>(eta.size());
    Projection P(n, M);
    const auto lifted = P.lift(eta);
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) r(i) = g.mean(i) - lifted[i];
    if (std::abs(r.mean()) > 1e-10) throw PreconditionError("theta: eta and the state have different means");
    const Eigen::MatrixXd Ap = pseudo_inverse(A);
    return (r.dot(Ap * r) + (Ap * g.cov).trace()) / (2.0 * n);
}

double macro_second_moment(const GaussianState& g, const std::vector<double>& eta) {
    const int n = g.n(), M = static_cast<int>(eta.size());
    Projection P(n, M);
    const int K = P.block_size();
    Eigen::MatrixXd Pm = Eigen::MatrixXd::Zero(M, n);
    for (int i = 0; i < n; ++i) Pm(i / K, i) = 1.0 / K;
    const Eigen::VectorXd pa = Pm * g.mean;
    double d = 0;
    for (int j = 0; j < M; ++j) d += (pa(j) - eta[j]) * (pa(j) - eta[j]);
    return (d + (Pm * g.cov * Pm.transpose()).trace()) / M;
}

CirculantGaussian::CirculantGaussian(std::vector<double> mean, std::vector<double> s) {
    n_ = static_cast<int>(mean.size());
    if (n_ < 2 || static_cast<int>(s.size()) != n_) throw DomainError("CirculantGaussian: need N >= 2 and N spectral values");
    for (int k = 1; k < n_; ++k) {
        if (!(s[k] >= 0) || std::abs(s[k] - s[n_ - k]) > 1e-12 * std::max(1.0, s[k]))
            throw DomainError("CirculantGaussian: spectrum must be nonnegative and symmetric");
    }
    s[0] = 0.0;
    m_ = std::accumulate(mean.begin(), mean.end(), 0.0) / n_;
    RealFft fft(n_);
    for (int i = 0; i < n_; ++i) fft.real()[i] = mean[i] - m_;
    fft.forward();
    dev_hat_.assign(fft.spec(), fft.spec() + fft.n_spec());
    dev_hat_[0] = 0.0;
    s_ = std::move(s);
}

CirculantGaussian CirculantGaussian::equilibrium_fluctuations(const std::vector<double>& mean, double scale) {
    std::vector<double> s(mean.size(), scale);
    return CirculantGaussian(mean, s);
}

std::vector<double> CirculantGaussian::mean() const {
    RealFft fft(n_);
    std::copy(dev_hat_.begin(), dev_hat_.end(), fft.spec());
    fft.backward();
    std::vector<double> a(n_);
    for (int i = 0; i < n_; ++i) a[i] = m_ + fft.real()[i] / n_;
    return a;
}

CirculantGaussian CirculantGaussian::evolve(const KawasakiOperator& op, double t) const {
    if (op.n() != n_) throw DomainError("CirculantGaussian: operator size mismatch");
    if (t < 0) throw DomainError("CirculantGaussian: negative time");
    CirculantGaussian out = *this;
    for (std::size_t k = 1; k < dev_hat_.size(); ++k) out.dev_hat_[k] = dev_hat_[k] * std::exp(-op.eigenvalue(static_cast<int>(k)) * t);
    for (int k = 1; k < n_; ++k) out.s_[k] = std::exp(-2 * op.eigenvalue(k) * t) * (s_[k] - 1) + 1;
    return out;
}

namespace {

// (1/N) sum over the full spectrum of w_k |c_k|^2, from the half spectrum
template <class W>
double half_spectrum_sum(const std::vector<std::complex<double>>& c, int n, W&& w) {
    double s = 0;
    for (int k = 1; k < static_cast<int>(c.size()); ++k) s += ((2 * k == n) ? 1.0 : 2.0) * w(k) * std::norm(c[k]);
    return s / n;
}

}  // namespace

double CirculantGaussian::relative_entropy() const {
    double s = 0;
    for (int k = 1; k < n_; ++k) s += kl_term(s_[k] - 1);
    return 0.5 * (s + half_spectrum_sum(dev_hat_, n_, [](int) { return 1.0; }));
}

double CirculantGaussian::fisher_information() const {
    double s = 0;
    for (int k = 1; k < n_; ++k) {
        if (!(s_[k] > 0)) return INFINITY;
        s += (s_[k] - 1) * (s_[k] - 1) / s_[k];
    }
    return s + half_spectrum_sum(dev_hat_, n_, [](int) { return 1.0; });
}

double CirculantGaussian::theta(const std::vector<double>& eta, const KawasakiOperator& op) const {
    if (op.n() != n_) throw DomainError("CirculantGaussian: operator size mismatch");
    Projection P(n_, static_cast<int>(eta.size()));
    const auto lifted = P.lift(eta);
    const auto a = mean();
    RealFft fft(n_);
    double rm = 0;
    for (int i = 0; i < n_; ++i) rm += (fft.real()[i] = a[i] - lifted[i]);
    if (std::abs(rm / n_) > 1e-10) throw PreconditionError("theta: eta and the state have different means");
    fft.forward();
    std::vector<std::complex<double>> R(fft.spec(), fft.spec() + fft.n_spec());
    const double q = half_spectrum_sum(R, n_, [&](int k) { return 1.0 / op.eigenvalue(k); });
    double tr = 0;
    for (int k = 1; k < n_; ++k) tr += s_[k] / op.eigenvalue(k);
    return (q + tr) / (2.0 * n_);
}

double CirculantGaussian::macro_second_moment(const std::vector<double>& eta) const {
    const int M = static_cast<int>(eta.size());
    Projection P(n_, M);
    const int K = P.block_size();
    const auto pa = P.project(mean());
    double d = 0;
    for (int j = 0; j < M; ++j) d += (pa[j] - eta[j]) * (pa[j] - eta[j]);
    double tr = 0;
    for (int k = 1; k < n_; ++k) {
        const double sm = std::sin(pi * k / M), sn = std::sin(pi * k / n_);
        if (k % M == 0) continue;
        tr += s_[k] * double(M) / n_ * sm * sm / (double(K) * K * sn * sn);
    }
    return (d + tr) / M;
}

double CirculantGaussian::macro_relative_entropy(const std::vector<double>& eta) const {
    const int M = static_cast<int>(eta.size());
    Projection P(n_, M);
    const int K = P.block_size();
    const auto pa = P.project(mean());
    double d = 0;
    for (int j = 0; j < M; ++j) d += (pa[j] - eta[j]) * (pa[j] - eta[j]);
    std::vector<double> r(M, 0.0);
    for (int k = 1; k < n_; ++k) {
        if (k % M == 0) continue;
        const double sm = std::sin(pi * k / M), sn = std::sin(pi * k / n_);
        r[k % M] += s_[k] * sm * sm / (double(K) * K * sn * sn);
    }
    double kl = 0;
    for (int q = 1; q < M; ++q) kl += kl_term(r[q] - 1);
    return 0.5 * kl / n_ + 0.5 * d / M;
}

double CirculantGaussian::h_minus_one_distance(const HydroField& zeta) const {
    if (zeta.n_cells % n_ != 0) throw DomainError("h_minus_one_distance: zeta resolution must be a multiple of N");
    const double det = h_minus_one_norm(difference(step_embed(mean(), zeta.n_cells), zeta));
    const double n3 = std::pow(double(n_), 3);
    double fl = 0;
    for (int k = 1; k < n_; ++k) {
        const double sn = std::sin(pi * k / n_), cs = std::cos(pi * k / n_);
        fl += s_[k] * (2 * cs * cs + 1) / (12 * n3 * sn * sn);
    }
    return det + fl;
}

GaussianState CirculantGaussian::dense() const {
    GaussianState g;
    const auto a = mean();
    g.mean = Eigen::Map<const Eigen::VectorXd>(a.data(), n_);
    g.cov.resize(n_, n_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) {
            double s = 0;
            for (int k = 1; k < n_; ++k) s += s_[k] * std::cos(2 * pi * k * (i - j) / n_);
            g.cov(i, j) = s / n_;
        }
    return g;
}

}  // namespace twoscale
