#include "twoscale/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "twoscale/errors.hpp"
#include "twoscale/fft.hpp"
#include "twoscale/parallel.hpp"

namespace twoscale {

namespace {

double auto_L(const GridSpec& g, const QuadratureSpec& q) {
    if (q.L > 0) return q.L;
    return std::max(8.0, 6.0 * std::max(std::abs(g.lo), std::abs(g.hi)) + 8.0);
}

void check_grid(const GridSpec& g) {
    if (g.n < 6 || !(g.hi > g.lo) || !std::isfinite(g.lo) || !std::isfinite(g.hi))
        throw DomainError("m-grid must have at least 6 nodes and finite increasing bounds");
}

std::string describe(const Potential& p) { return "potential=" + p.tag; }

int next_pow2(int n) {
    int s = 1;
    while (s < n) s <<= 1;
    return s;
}

// Linear convolution a*b scaled by h; output index 0 corresponds to offset -(ha+hb).
class Convolver {
public:
    std::vector<double> full(const std::vector<double>& a, const std::vector<double>& b, double h) {
        const int n = static_cast<int>(a.size() + b.size() - 1);
        RealFft& f = plan(next_pow2(n));
        const int s = f.n();
        std::vector<std::complex<double>> fa(s / 2 + 1);
        std::fill(f.real(), f.real() + s, 0.0);
        std::copy(a.begin(), a.end(), f.real());
        f.forward();
        std::copy(f.spec(), f.spec() + s / 2 + 1, fa.begin());
        std::fill(f.real(), f.real() + s, 0.0);
        std::copy(b.begin(), b.end(), f.real());
        f.forward();
        for (int k = 0; k <= s / 2; ++k) f.spec()[k] *= fa[k];
        f.backward();
        std::vector<double> out(n);
        const double scale = h / s;
        for (int i = 0; i < n; ++i) out[i] = f.real()[i] * scale;
        return out;
    }

private:
    RealFft& plan(int n) {
        for (auto& p : plans_)
            if (p->n() == n) return *p;
        plans_.push_back(std::make_unique<RealFft>(n));
        return *plans_.back();
    }
    std::vector<std::unique_ptr<RealFft>> plans_;
};

// Symmetric window: vector of length 2H+1, centre index H is u = 0.
std::vector<double> truncate_centered(const std::vector<double>& v, int H) {
    const int c = static_cast<int>(v.size() / 2);
    if (H >= c) return v;
    return std::vector<double>(v.begin() + (c - H), v.begin() + (c + H + 1));
}

// h * sum_u a(u) b(-u) for centred windows
double dot_reflect(const std::vector<double>& a, const std::vector<double>& b, double h) {
    const int ha = static_cast<int>(a.size() / 2), hb = static_cast<int>(b.size() / 2);
    const int H = std::min(ha, hb);
    double s = 0.0;
    for (int u = -H; u <= H; ++u) s += a[ha + u] * b[hb - u];
    return h * s;
}

}  // namespace

LogLaplaceQuadrature::LogLaplaceQuadrature(const Potential& p, double L, double h) : L_(L), h_(h) {
    if (!(h > 0) || !(L > 0)) throw DomainError("log-Laplace quadrature: bad spacing or range");
    const int n = static_cast<int>(std::ceil(L / h));
    h_ = L / n;
    x_.resize(2 * n + 1);
    psi_.resize(2 * n + 1);
    for (int i = -n; i <= n; ++i) {
        const double x = i * h_;
        x_[i + n] = x;
        psi_[i + n] = psi(p, x);
    }
}

LogLaplace LogLaplaceQuadrature::operator()(double sigma) const {
    double c = -INFINITY;
    for (std::size_t i = 0; i < x_.size(); ++i) c = std::max(c, sigma * x_[i] - psi_[i]);
    double s0 = 0, s1 = 0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
        const double w = std::exp(sigma * x_[i] - psi_[i] - c);
        s0 += w;
        s1 += w * x_[i];
    }
    const double mean = s1 / s0;
    double s2 = 0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
        const double d = x_[i] - mean;
        s2 += std::exp(sigma * x_[i] - psi_[i] - c) * d * d;
    }
    if (!(s0 > 0) || !std::isfinite(s0)) throw NumericalError("log-Laplace quadrature failed");
    return {c + std::log(h_ * s0), mean, s2 / s0};
}

double LogLaplaceQuadrature::solve_tilt(double m, double sigma) const {
    if (std::abs(m) > L_ - 6.0) {
        std::ostringstream os;
        os << "cramer: m=" << m << " outside reachable range (|m| <= " << L_ - 6.0 << ")";
        throw DomainError(os.str());
    }
    double lo = -INFINITY, hi = INFINITY;
    for (int it = 0; it < 200; ++it) {
        const LogLaplace ll = (*this)(sigma);
        const double g = ll.mean - m;
        if (std::abs(g) <= 1e-13 * (1 + std::abs(m))) return sigma;
        if (g > 0) hi = std::min(hi, sigma);
        else lo = std::max(lo, sigma);
        double next = sigma - g / ll.var;
        if (!(next > lo && next < hi)) {
            if (std::isfinite(lo) && std::isfinite(hi)) next = 0.5 * (lo + hi);
            else next = g > 0 ? sigma - 1.0 : sigma + 1.0;
        }
        if (std::isfinite(lo) && std::isfinite(hi) && hi - lo < 1e-14 * (1 + std::abs(sigma))) return 0.5 * (lo + hi);
        sigma = next;
    }
    throw NumericalError("cramer: tilt iteration did not converge");
}

TabulatedFunction cramer_transform(const Potential& p, const GridSpec& g, const QuadratureSpec& quad) {
    check_grid(g);
    const LogLaplaceQuadrature Q(p, auto_L(g, quad), quad.h);
    std::vector<double> v(g.n), d1(g.n), d2(g.n);
    double sigma = g.node(0);
    for (int i = 0; i < g.n; ++i) {
        const double m = g.node(i);
        sigma = Q.solve_tilt(m, sigma);
        const LogLaplace ll = Q(sigma);
        v[i] = sigma * m - ll.value;
        d1[i] = sigma;
        d2[i] = 1.0 / ll.var;
        if (!(d2[i] > 0) || !std::isfinite(d2[i])) throw NumericalError("cramer: non-positive curvature");
    }
    return TabulatedFunction(g, std::move(v), std::move(d1), std::move(d2), "phi " + describe(p));
}

std::map<int, TabulatedFunction> coarse_potential_ladder(const Potential& p, const std::vector<int>& Ks,
                                                         const GridSpec& g, const QuadratureSpec& quad,
                                                         int threads) {
    check_grid(g);
    if (Ks.empty()) return {};
    for (int K : Ks)
        if (K < 1) throw DomainError("coarse_potential: K must be >= 1");
    const int Kmax = *std::max_element(Ks.begin(), Ks.end());
    int top = 0;
    while ((2 << top) <= Kmax) ++top;  // 2^top <= Kmax < 2^{top+1}

    const double L = auto_L(g, quad);
    const LogLaplaceQuadrature Q(p, L, quad.h);
    const double h = quad.h;

    // tilts are sequential (warm start); the convolution work is parallel
    std::vector<double> sig(g.n), phi(g.n), sd(g.n);
    {
        double s = g.node(0);
        for (int i = 0; i < g.n; ++i) {
            s = Q.solve_tilt(g.node(i), s);
            const LogLaplace ll = Q(s);
            sig[i] = s;
            phi[i] = s * g.node(i) - ll.value;
            sd[i] = std::sqrt(ll.var);
        }
    }

    std::vector<std::vector<double>> logc(Ks.size(), std::vector<double>(g.n));
    std::vector<std::string> failures(std::max(1, threads));

    parallel_for(g.n, threads, [&](int b, int e, int w) {
        Convolver conv;
        for (int i = b; i < e && failures[w].empty(); ++i) {
            const double m = g.node(i);
            const double kap = sig[i] * m - phi[i];
            auto half = [&](int k) { return static_cast<int>(std::ceil((12.0 * std::sqrt(double(k)) * sd[i] + 2.0) / h)); };
            std::vector<std::vector<double>> pw;  // pw[j] = r^{*2^j}
            {
                const int H = half(1);
                std::vector<double> r(2 * H + 1);
                for (int u = -H; u <= H; ++u) {
                    const double x = m + u * h;
                    r[u + H] = std::exp(sig[i] * x - psi(p, x) - kap);
                }
                pw.push_back(std::move(r));
            }
            for (int j = 1; j <= top; ++j)
                pw.push_back(truncate_centered(conv.full(pw[j - 1], pw[j - 1], h), half(1 << j)));

            for (std::size_t q = 0; q < Ks.size(); ++q) {
                const int K = Ks[q];
                int hb = 0;
                while ((2 << hb) <= K) ++hb;
                double val;
                if (K == 1) {
                    val = pw[0][pw[0].size() / 2];
                } else {
                    const int low = K - (1 << hb);
                    if (low == 0) {
                        val = dot_reflect(pw[hb - 1], pw[hb - 1], h);
                    } else {
                        std::vector<double> acc;
                        int have = 0;
                        for (int j = 0; j < hb; ++j) {
                            if (!((low >> j) & 1)) continue;
                            if (acc.empty()) acc = pw[j];
                            else acc = truncate_centered(conv.full(acc, pw[j], h), half(have + (1 << j)));
                            have += 1 << j;
                        }
                        val = dot_reflect(acc, pw[hb], h);
                    }
                }
                if (!(val > 0) || !std::isfinite(val)) {
                    std::ostringstream os;
                    os << "coarse_potential: K=" << K << " underflow at m=" << m << "; valid range is within ["
                       << g.lo << ", " << g.node(std::max(0, i - 1)) << "]";
                    failures[w] = os.str();
                    break;
                }
                logc[q][i] = std::log(std::sqrt(double(K)) * val);
            }
        }
    });
    for (auto& f : failures)
        if (!f.empty()) throw DomainError(f);

    std::map<int, TabulatedFunction> out;
    for (std::size_t q = 0; q < Ks.size(); ++q) {
        const int K = Ks[q];
        std::vector<double> v(g.n);
        for (int i = 0; i < g.n; ++i) v[i] = phi[i] - logc[q][i] / K;
        auto d1 = fd_first(v, g.h());
        auto d2 = fd_second(v, g.h());
        if (K == 1) {
            // exact single-site values
            for (int i = 0; i < g.n; ++i) {
                const PsiValue e = eval_psi(p, g.node(i));
                d1[i] = e.d1;
                d2[i] = e.d2;
            }
        }
        out.emplace(K, TabulatedFunction(g, std::move(v), std::move(d1), std::move(d2),
                                         "psiK K=" + std::to_string(K) + " " + describe(p)));
    }
    return out;
}

TabulatedFunction coarse_potential(const Potential& p, int K, const GridSpec& g, const QuadratureSpec& quad,
                                   int threads) {
    return coarse_potential_ladder(p, {K}, g, quad, threads).at(K);
}

TabulatedFunction legendre_transform(const TabulatedFunction& f) {
    const auto& d2 = f.d2();
    for (double c : d2)
        if (!(c > 0)) throw PreconditionError("legendre_transform: input not strictly convex");
    const auto& d1 = f.d1();
    for (std::size_t i = 1; i < d1.size(); ++i)
        if (!(d1[i] > d1[i - 1])) throw PreconditionError("legendre_transform: derivative not increasing");

    const int n = f.size();
    const GridSpec sg{d1.front(), d1.back(), n};
    std::vector<double> v(n), e1(n), e2(n);
    for (int i = 0; i < n; ++i) {
        const double s = sg.node(i);
        // bracket on nodes, then bisection on the interpolant
        auto it = std::lower_bound(d1.begin(), d1.end(), s);
        int j = static_cast<int>(it - d1.begin());
        double a = f.grid().node(std::max(0, j - 1)), b = f.grid().node(std::min(n - 1, j));
        double m;
        if (i == 0) m = f.lo();
        else if (i == n - 1) m = f.hi();
        else {
            for (int it2 = 0; it2 < 200 && b - a > 1e-12 * (1 + std::abs(a)); ++it2) {
                const double c = 0.5 * (a + b);
                if (f.deriv1(c) < s) a = c;
                else b = c;
            }
            m = 0.5 * (a + b);
        }
        double fv, fd1, fd2;
        f.eval(m, fv, fd1, fd2);
        v[i] = s * m - fv;
        e1[i] = m;
        e2[i] = 1.0 / fd2;
    }
    return TabulatedFunction(sg, std::move(v), std::move(e1), std::move(e2), "legendre(" + f.source() + ")");
}

}  // namespace twoscale
