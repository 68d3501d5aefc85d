#include "twoscale/coarse_grain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "twoscale/errors.hpp"
#include "twoscale/parallel.hpp"

namespace twoscale {

namespace {

constexpr std::uint64_t kLocalGibbsStage = 3ULL << 61;

double log_sum_exp(const std::vector<double>& v) {
    double mx = -INFINITY;
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

double raw_log_density(const CoarseHamiltonian& h, const std::vector<double>& g, const std::vector<double>& y) {
    double s = 0;
    for (int j = 0; j < h.M; ++j) s += g[j] * y[j] - h.psiK.value(y[j]);
    return h.N * s / h.M;
}

// 12 standard deviations, clipped so every node stays inside the psi_K table
double gauss_width(const CoarseHamiltonian& h, const std::vector<double>& c) {
    const double sd = std::sqrt(double(h.M) / (h.lambda * h.N));
    const auto& g = h.psiK.grid();
    double room = INFINITY;
    for (double v : c) room = std::min({room, v - g.lo, g.hi - v});
    room *= h.M == 2 ? std::sqrt(2.0) : 1.0 / (1 / std::sqrt(2.0) + 1 / std::sqrt(6.0));
    room *= 1 - 1e-12;
    if (room < 6 * sd) {
        std::ostringstream os;
        os << "hyperplane quadrature: psi_K table too narrow (" << room << " < 6 sd = " << 6 * sd << ")";
        throw ExtrapolationError(os.str());
    }
    return std::min(12 * sd, room);
}

int axis_nodes(int M) { return M == 2 ? 1601 : 241; }

}  // namespace

CoarseHamiltonian build_coarse_hamiltonian(TabulatedFunction psiK, int N, int M) {
    if (M < 1 || N < 1 || N % M != 0) throw DomainError("coarse Hamiltonian: need N = K*M");
    CoarseHamiltonian h;
    auto b = convexity_bounds(psiK);
    if (!(b.lambda > 0)) {
        std::ostringstream os;
        os << "coarse Hamiltonian: psi_K not uniformly convex (min psi_K'' = " << b.lambda << ")";
        throw PreconditionError(os.str());
    }
    h.psiK = std::move(psiK);
    h.N = N;
    h.M = M;
    h.lambda = b.lambda;
    h.Lambda = b.Lambda;
    return h;
}

double hbar_potential(const CoarseHamiltonian& h, const std::vector<double>& y) {
    if (static_cast<int>(y.size()) != h.M) throw DomainError("H-bar: length mismatch");
    double s = 0;
    for (double v : y) s += h.psiK.value(v);
    return s / h.M;
}

std::vector<double> grad_Hbar(const CoarseHamiltonian& h, const std::vector<double>& y) {
    if (static_cast<int>(y.size()) != h.M) throw DomainError("grad H-bar: length mismatch");
    std::vector<double> g(h.M);
    double avg = 0;
    for (int j = 0; j < h.M; ++j) avg += (g[j] = h.psiK.deriv1(y[j]));
    avg /= h.M;
    for (auto& v : g) v -= avg;
    return g;
}

std::vector<double> grad_Hbar(const CoarseHamiltonian& h, const MacroProfile& y) { return grad_Hbar(h, y.values); }

std::vector<double> MacroOperator::apply(const std::vector<double>& v) const {
    Eigen::Map<const Eigen::VectorXd> x(v.data(), M);
    Eigen::VectorXd r = abar * x;
    return std::vector<double>(r.data(), r.data() + M);
}

std::vector<double> MacroOperator::apply_inverse(const std::vector<double>& v) const {
    Eigen::Map<const Eigen::VectorXd> x(v.data(), M);
    Eigen::VectorXd r = abar_inv * x;
    return std::vector<double>(r.data(), r.data() + M);
}

MacroOperator build_macro_operator(const Projection& P, const KawasakiOperator& op) {
    if (P.n_sites() != op.n()) throw DomainError("macro operator: size mismatch");
    const int M = P.n_blocks(), N = P.n_sites();
    MacroOperator out;
    out.M = M;
    if (M == 1) {
        out.abar = Eigen::MatrixXd::Zero(1, 1);
        out.abar_inv = Eigen::MatrixXd::Zero(1, 1);
        return out;
    }
    Eigen::MatrixXd inv(M, M);
    RealFft ws(N);
    std::vector<double> e(M), z(N), col(M);
    for (int j = 0; j < M; ++j) {
        std::fill(e.begin(), e.end(), -1.0 / M);
        e[j] += 1.0;
        auto x = P.lift(e);
        op.apply_inverse(x.data(), z.data(), ws);
        P.project(z.data(), col.data());
        for (int i = 0; i < M; ++i) inv(i, j) = col[i];
    }
    inv = 0.5 * (inv + inv.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inv);
    const auto& ev = es.eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    int null_count = 0;
    Eigen::MatrixXd abar = Eigen::MatrixXd::Zero(M, M);
    double lo = INFINITY, hi = 0;
    for (int k = 0; k < M; ++k) {
        if (ev(k) <= 1e-12 * top) {
            ++null_count;
            continue;
        }
        const Eigen::VectorXd v = es.eigenvectors().col(k);
        abar += v * v.transpose() / ev(k);
        lo = std::min(lo, 1.0 / ev(k));
        hi = std::max(hi, 1.0 / ev(k));
    }
    if (null_count != 1) throw NumericalError("macro operator: singular assembly on the tangent space");
    out.abar = 0.5 * (abar + abar.transpose());
    out.abar_inv = inv;
    out.tangent_min = lo;
    out.tangent_max = hi;
    return out;
}

HyperplaneGrid make_hyperplane_grid(const std::vector<double>& c, double W, int n) {
    const int M = static_cast<int>(c.size());
    if (M != 2 && M != 3) throw DomainError("hyperplane quadrature supports M = 2 or 3");
    if (n < 3 || !(W > 0)) throw DomainError("hyperplane quadrature: bad grid");
    HyperplaneGrid g;
    const double h = 2 * W / (n - 1);
    auto tw = [n](int i) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; };
    if (M == 2) {
        const double s = 1 / std::sqrt(2.0);
        for (int i = 0; i < n; ++i) {
            const double t = -W + i * h;
            g.points.push_back({c[0] + s * t, c[1] - s * t});
            g.log_weights.push_back(std::log(h * tw(i)));
        }
    } else {
        const double a = 1 / std::sqrt(2.0), b = 1 / std::sqrt(6.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double t = -W + i * h, u = -W + j * h;
                g.points.push_back({c[0] + a * t + b * u, c[1] - a * t + b * u, c[2] - 2 * b * u});
                g.log_weights.push_back(std::log(h * h * tw(i) * tw(j)));
            }
    }
    return g;
}

LogDensity local_gibbs_log_density(const CoarseHamiltonian& h, const MacroProfile& eta, const MacroProfile& y) {
    if (eta.size() != h.M || y.size() != h.M) throw DomainError("local Gibbs density: length mismatch");
    const auto g = grad_Hbar(h, eta);
    const double raw = raw_log_density(h, g, y.values);
    if (h.M > 3 || h.M < 2) return {raw, false};
    const auto grid = make_hyperplane_grid(eta.values, gauss_width(h, eta.values), axis_nodes(h.M));
    std::vector<double> lv(grid.points.size());
    for (std::size_t i = 0; i < lv.size(); ++i) lv[i] = grid.log_weights[i] + raw_log_density(h, g, grid.points[i]);
    return {raw - log_sum_exp(lv), true};
}

LocalGibbsSample sample_local_gibbs(const CoarseHamiltonian& h, const MacroProfile& eta, int R, std::uint64_t seed,
                                    const LocalGibbsOptions& opt) {
    if (R < 1) throw DomainError("sample_local_gibbs: R must be >= 1");
    if (eta.size() != h.M || h.M < 2) throw DomainError("sample_local_gibbs: need M >= 2 matching the Hamiltonian");
    const int M = h.M;
    const auto g = grad_Hbar(h, eta);
    const double step = opt.proposal > 0 ? opt.proposal : 2.0 * std::sqrt(double(M) / (h.lambda * h.N));
    const int C = std::max(1, std::min(R, opt.chains));
    const double NM = double(h.N) / M;

    LocalGibbsSample out;
    out.M = M;
    out.R = R;
    out.y.resize(static_cast<std::size_t>(R) * M);
    out.chain.resize(R);
    std::vector<int> first(C + 1, 0);
    for (int c = 0; c < C; ++c) first[c + 1] = first[c] + R / C + (c < R % C ? 1 : 0);
    std::vector<std::vector<double>> traces(C);
    std::vector<double> acc(C, 0.0);

    parallel_for(C, opt.threads, [&](int b, int e, int) {
        for (int c = b; c < e; ++c) {
            auto rng = make_stream(seed, static_cast<std::uint64_t>(c), kLocalGibbsStage + opt.stage);
            std::uniform_real_distribution<double> unif;
            std::uniform_int_distribution<int> site(0, M - 1), other(0, M - 2);
            std::vector<double> y = eta.values;
            std::vector<double> pk(M);
            for (int j = 0; j < M; ++j) pk[j] = h.psiK.value(y[j]);
            long long accepted = 0, tried = 0;
            auto sweep = [&] {
                for (int mv = 0; mv < M; ++mv) {
                    const int i = site(rng);
                    int j = other(rng);
                    if (j >= i) ++j;
                    const double d = step * (2 * unif(rng) - 1);
                    const double yi = y[i] + d, yj = y[j] - d;
                    ++tried;
                    if (!h.psiK.contains(yi) || !h.psiK.contains(yj)) continue;
                    const double pi = h.psiK.value(yi), pj = h.psiK.value(yj);
                    const double dl = NM * ((g[i] - g[j]) * d - (pi - pk[i]) - (pj - pk[j]));
                    if (dl >= 0 || unif(rng) < std::exp(dl)) {
                        y[i] = yi;
                        y[j] = yj;
                        pk[i] = pi;
                        pk[j] = pj;
                        ++accepted;
                    }
                }
            };
            for (int s = 0; s < opt.burn_in_sweeps; ++s) sweep();
            for (int r = first[c]; r < first[c + 1]; ++r) {
                for (int s = 0; s < std::max(1, opt.thin_sweeps); ++s) sweep();
                // remove round-off drift off the hyperplane
                double avg = 0;
                for (double v : y) avg += v;
                avg = avg / M - eta.mean;
                for (int j = 0; j < M; ++j) out.y[static_cast<std::size_t>(r) * M + j] = y[j] - avg;
                out.chain[r] = c;
                traces[c].push_back(raw_log_density(h, g, y));
            }
            acc[c] = tried ? double(accepted) / tried : 0.0;
        }
    });
    double a = 0;
    for (double v : acc) a += v;
    out.acceptance = a / C;
    out.rhat = split_rhat(traces);
    out.ess = effective_sample_size(traces);
    out.converged = !(out.rhat > 1.1);
    if (!out.converged) {
        std::ostringstream os;
        os << "warning: split-Rhat " << out.rhat << " > 1.1";
        out.status = os.str();
    }
    return out;
}

LocalGibbsSample sample_local_gibbs_gaussian(int N, const MacroProfile& eta, int R, std::uint64_t seed,
                                             double lambda) {
    const int M = eta.size();
    if (R < 1 || M < 1 || N % M != 0 || !(lambda > 0)) throw DomainError("gaussian local Gibbs: bad arguments");
    LocalGibbsSample out;
    out.M = M;
    out.R = R;
    out.y.resize(static_cast<std::size_t>(R) * M);
    out.chain.resize(R);
    const double s = std::sqrt(double(M) / (lambda * N));
    std::vector<double> xi(M);
    for (int r = 0; r < R; ++r) {
        auto rng = make_stream(seed, static_cast<std::uint64_t>(r), kLocalGibbsStage + 7);
        std::normal_distribution<double> gauss;
        double m = 0;
        for (auto& v : xi) m += (v = gauss(rng));
        m /= M;
        for (int j = 0; j < M; ++j) out.y[static_cast<std::size_t>(r) * M + j] = eta.values[j] + s * (xi[j] - m);
        out.chain[r] = r;
    }
    out.ess = R;
    out.rhat = 1.0;
    out.acceptance = 1.0;
    return out;
}

LogPartition log_partition_bar(const CoarseHamiltonian& h, double m) {
    LogPartition lp;
    const double pk = h.psiK.value(m);
    if (h.M == 1) {
        lp.value = lp.lower = lp.upper = -pk;
        lp.has_quadrature = true;
        return lp;
    }
    const double c = (h.M - 1) / (2.0 * h.N);
    const double g2 = 2 * std::numbers::pi * h.M;
    lp.lower = -pk + c * std::log(g2 / (h.Lambda * h.N));
    lp.upper = -pk + c * std::log(g2 / (h.lambda * h.N));
    if (h.M <= 3) {
        const auto grid = make_hyperplane_grid(std::vector<double>(h.M, m), gauss_width(h, std::vector<double>(h.M, m)), axis_nodes(h.M));
        std::vector<double> lv(grid.points.size());
        for (std::size_t i = 0; i < lv.size(); ++i) {
            double s = 0;
            for (double v : grid.points[i]) s += h.psiK.value(v);
            lv[i] = grid.log_weights[i] - double(h.N) / h.M * s;
        }
        lp.value = log_sum_exp(lv) / h.N;
        lp.has_quadrature = true;
        const double tol = 1e-9;
        if (lp.value < lp.lower - tol || lp.value > lp.upper + tol) {
            std::ostringstream os;
            os << "log Z-bar quadrature " << lp.value << " outside Laplace bracket [" << lp.lower << ", " << lp.upper << "]";
            throw ConsistencyError(os.str());
        }
    }
    return lp;
}

double two_scale_lsi_constant(double rho, double lambda, double kappa) {
    if (!(rho > 0) || !(lambda > 0) || !(kappa >= 0)) throw DomainError("rho-hat: need rho > 0, lambda > 0, kappa >= 0");
    if (kappa == 0) return std::min(rho, lambda);
    const double s = rho + lambda + kappa * kappa / rho;
    return 2 * rho * lambda / (s + std::sqrt(s * s - 4 * rho * lambda));
}

double log_gamma_Y(int M) {
    if (M < 1) throw DomainError("Gamma(Y): M must be >= 1");
    return 0.5 * (M - 1) * std::log(2 * std::numbers::pi * M);
}

double gamma_Y(int M) { return std::exp(log_gamma_Y(M)); }

FreeEnergyGap gibbs_free_energy_gap(const CoarseHamiltonian& h, const MacroProfile& eta) {
    if (eta.size() != h.M) throw DomainError("free-energy gap: length mismatch");
    FreeEnergyGap r;
    const auto g = grad_Hbar(h, eta);
    if (h.M >= 2) {
        const double g2 = 2 * std::numbers::pi * h.M;  // Gamma(Y)^{2/(M-1)}
        r.log_term = (h.M - 1) / (2.0 * h.N) *
                     std::max(std::abs(std::log(g2 / (h.Lambda * h.N))), std::abs(std::log(g2 / (h.lambda * h.N))));
    }
    r.grad_term = std::sqrt(double(h.M) / (h.lambda * h.N)) * std::sqrt(norm2_Y(g));
    r.bound = r.log_term + r.grad_term;
    if (h.M == 2 || h.M == 3) {
        const auto grid = make_hyperplane_grid(eta.values, gauss_width(h, eta.values), axis_nodes(h.M));
        std::vector<double> lv(grid.points.size());
        for (std::size_t i = 0; i < lv.size(); ++i) lv[i] = grid.log_weights[i] + raw_log_density(h, g, grid.points[i]);
        const double logI = log_sum_exp(lv);
        std::vector<double> ey(h.M, 0.0);
        for (std::size_t i = 0; i < lv.size(); ++i) {
            const double w = std::exp(lv[i] - logI);
            for (int j = 0; j < h.M; ++j) ey[j] += w * grid.points[i][j];
        }
        const double free = dot_Y(g, ey) - logI / h.N;
        r.lhs = std::abs(free - hbar_potential(h, eta.values));
        r.holds = r.lhs <= r.bound + 1e-8;
        if (!r.holds) throw ConsistencyError("free-energy gap exceeds its bound");
    }
    return r;
}

}  // namespace twoscale
