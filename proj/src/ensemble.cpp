#include "twoscale/ensemble.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "twoscale/errors.hpp"
#include "twoscale/parallel.hpp"
#include "twoscale/transforms.hpp"

namespace twoscale {

static_assert(std::endian::native == std::endian::little, "snapshot format assumes little-endian doubles");

namespace {

constexpr std::uint64_t kSamplerStage = 1ULL << 62;
constexpr int kSnapshotVersion = 1;

void recentre(double* x, int n, double m) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += x[i];
    const double shift = s / n - m;
    for (int i = 0; i < n; ++i) x[i] -= shift;
}

}  // namespace

void MicroEnsemble::check_mean(double tol) const {
    for (int r = 0; r < replicas; ++r) {
        const double* xr = row(r);
        double s = 0.0;
        for (int i = 0; i < n_sites; ++i) s += xr[i];
        if (std::abs(s / n_sites - mean) > tol) {
            std::ostringstream os;
            os << "ensemble replica " << r << " has mean " << s / n_sites << " != " << mean;
            throw ConsistencyError(os.str());
        }
    }
}

void write_snapshot(const MicroEnsemble& e, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path + " for writing");
    char buf[512];
    std::snprintf(buf, sizeof buf, "N=%d m=%.17g R=%d seed=%llu t=%.17g dt=%.17g potential=%s version=%d\n",
                  e.n_sites, e.mean, e.replicas, static_cast<unsigned long long>(e.rng_seed), e.t, e.dt,
                  e.potential_tag.c_str(), kSnapshotVersion);
    f << buf;
    f.write(reinterpret_cast<const char*>(e.x.data()), static_cast<std::streamsize>(e.x.size() * sizeof(double)));
    if (!f) throw Error("write failed: " + path);
}

MicroEnsemble read_snapshot(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    std::string header;
    std::getline(f, header);
    std::istringstream hs(header);
    MicroEnsemble e;
    std::string field;
    int version = -1, nfields = 0;
    while (hs >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) throw Error("bad snapshot header: " + header);
        const std::string k = field.substr(0, eq), v = field.substr(eq + 1);
        ++nfields;
        if (k == "N") e.n_sites = std::stoi(v);
        else if (k == "m") e.mean = std::stod(v);
        else if (k == "R") e.replicas = std::stoi(v);
        else if (k == "seed") e.rng_seed = std::stoull(v);
        else if (k == "t") e.t = std::stod(v);
        else if (k == "dt") e.dt = std::stod(v);
        else if (k == "potential") e.potential_tag = v;
        else if (k == "version") version = std::stoi(v);
        else throw Error("unknown snapshot field: " + k);
    }
    if (nfields != 8 || version != kSnapshotVersion) throw Error("unsupported snapshot header: " + header);
    e.x.resize(static_cast<std::size_t>(e.n_sites) * e.replicas);
    f.read(reinterpret_cast<char*>(e.x.data()), static_cast<std::streamsize>(e.x.size() * sizeof(double)));
    if (!f) throw Error("truncated snapshot: " + path);
    return e;
}

EquilibriumSample sample_equilibrium(const Potential& p, int N, double m, int R, std::uint64_t seed,
                                     const SamplerOptions& opt) {
    if (R < 1) throw DomainError("sample_equilibrium: R must be >= 1");
    if (N < 2) throw DomainError("sample_equilibrium: N must be >= 2");
    if (!opt.tilt.empty() && static_cast<int>(opt.tilt.size()) != N) throw DomainError("tilt length != N");
    if (!opt.start.empty() && static_cast<int>(opt.start.size()) != N) throw DomainError("start length != N");

    EquilibriumSample out;
    MicroEnsemble& e = out.ensemble;
    e.n_sites = N;
    e.mean = m;
    e.replicas = R;
    e.rng_seed = seed;
    e.potential_tag = p.tag;
    e.x.resize(static_cast<std::size_t>(N) * R);

    std::vector<double> centre = opt.start.empty() ? std::vector<double>(N, m) : opt.start;
    recentre(centre.data(), N, m);
    const std::vector<double> tilt = opt.tilt.empty() ? std::vector<double>(N, 0.0) : opt.tilt;

    const int ndiag = std::min(opt.diag_chains, R);
    std::vector<std::vector<double>> traces(ndiag);
    std::vector<double> accepted(R);
    const int burn = std::max(0, opt.burn_in_sweeps);

    parallel_for(R, opt.threads, [&](int b, int en, int) {
        std::vector<double> xi(N);
        for (int r = b; r < en; ++r) {
            auto rng = make_stream(seed, static_cast<std::uint64_t>(r), kSamplerStage + opt.stage);
            std::normal_distribution<double> gauss;
            std::uniform_real_distribution<double> unif;
            std::uniform_int_distribution<int> site(0, N - 1), other(0, N - 2);
            double* x = e.row(r);
            if (opt.start_spread > 0) {
                double s = 0;
                for (int i = 0; i < N; ++i) s += (xi[i] = gauss(rng));
                for (int i = 0; i < N; ++i) x[i] = centre[i] + opt.start_spread * (xi[i] - s / N);
            } else {
                std::copy(centre.begin(), centre.end(), x);
            }
            long long acc = 0;
            for (int sweep = 0; sweep < burn; ++sweep) {
                for (int mv = 0; mv < N; ++mv) {
                    const int i = site(rng);
                    int j = other(rng);
                    if (j >= i) ++j;
                    const double d = opt.proposal * (2 * unif(rng) - 1);
                    const double xi2 = x[i] + d, xj2 = x[j] - d;
                    const double dE = psi(p, xi2) - psi(p, x[i]) + psi(p, xj2) - psi(p, x[j]) - (tilt[i] - tilt[j]) * d;
                    if (dE <= 0 || unif(rng) < std::exp(-dE)) {
                        x[i] = xi2;
                        x[j] = xj2;
                        ++acc;
                    }
                }
                if (r < ndiag && 2 * sweep >= burn) {
                    double E = 0;
                    for (int i = 0; i < N; ++i) E += psi(p, x[i]) - tilt[i] * x[i];
                    traces[r].push_back(E);
                }
            }
            recentre(x, N, m);
            accepted[r] = burn > 0 ? double(acc) / (double(burn) * N) : 1.0;
        }
    });

    auto& d = out.diagnostics;
    double a = 0;
    for (double v : accepted) a += v;
    d.acceptance = a / R;
    d.rhat = split_rhat(traces);
    d.trace_ess = effective_sample_size(traces);
    d.converged = !(d.rhat > 1.1);
    d.ensemble_ess = d.converged ? R : std::min<double>(R, d.trace_ess);
    if (!d.converged) {
        std::ostringstream os;
        os << "warning: split-Rhat " << d.rhat << " > 1.1 on sum psi";
        d.status = os.str();
    }
    return out;
}

double sde_stability_bound(const Potential& p, const KawasakiOperator& op) {
    return 0.5 / (op.lambda_max() * (1.0 + p.d2_sup));
}

double sde_default_dt(const KawasakiOperator& op) { return 0.1 / op.lambda_max(); }

void advance_sde(MicroEnsemble& e, const Potential& p, double dt, const KawasakiOperator& op, int n_steps,
                 int threads) {
    if (!(dt >= 0)) throw DomainError("advance_sde: dt must be >= 0");
    if (dt > sde_stability_bound(p, op)) throw PreconditionError("advance_sde: dt above the stability bound");
    if (op.n() != e.n_sites) throw DomainError("advance_sde: operator size mismatch");
    if (dt == 0 || n_steps <= 0) return;
    const int N = e.n_sites;
    const double N2dt = double(N) * N * dt, noise = std::sqrt(2 * dt) * N;
    const std::uint64_t step0 = e.step;
    parallel_for(e.replicas, threads, [&](int b, int en, int) {
        std::vector<double> g(N), F(N);
        for (int r = b; r < en; ++r) {
            double* x = e.row(r);
            for (int s = 0; s < n_steps; ++s) {
                auto rng = make_stream(e.rng_seed, static_cast<std::uint64_t>(r), step0 + s);
                std::normal_distribution<double> gauss;
                for (int i = 0; i < N; ++i) g[i] = psi_d1(p, x[i]);
                for (int bnd = 0; bnd < N; ++bnd) {
                    const int nx = bnd + 1 == N ? 0 : bnd + 1;
                    F[bnd] = -N2dt * (g[nx] - g[bnd]) + noise * gauss(rng);
                }
                for (int bnd = 0; bnd < N; ++bnd) {
                    const int nx = bnd + 1 == N ? 0 : bnd + 1;
                    x[bnd] -= F[bnd];
                    x[nx] += F[bnd];
                }
            }
        }
    });
    e.step += n_steps;
    e.t += n_steps * dt;
    e.dt = dt;
}

MicroEnsemble step_kawasaki_sde(const MicroEnsemble& e, const Potential& p, double dt, const KawasakiOperator& op,
                                int threads) {
    MicroEnsemble out = e;
    advance_sde(out, p, dt, op, 1, threads);
    return out;
}

EtdIntegrator::EtdIntegrator(const KawasakiOperator& op, double dt, double c_ref) : n_(op.n()), dt_(dt), c_(c_ref) {
    if (!(dt > 0) || !(c_ref > 0)) throw DomainError("EtdIntegrator: dt and c_ref must be positive");
    decay_.resize(n_ / 2 + 1);
    gain_.resize(n_ / 2 + 1);
    noise_.resize(n_ / 2 + 1);
    for (int k = 1; k <= n_ / 2; ++k) {
        const double E = std::exp(-c_ * op.eigenvalue(k) * dt);
        decay_[k] = E;
        gain_[k] = -std::expm1(-c_ * op.eigenvalue(k) * dt) / c_;
        const double var = -std::expm1(-2 * c_ * op.eigenvalue(k) * dt) / c_;
        noise_[k] = std::sqrt(var * n_ * ((2 * k == n_) ? 1.0 : 0.5));
    }
}

void EtdIntegrator::advance(MicroEnsemble& e, const Potential& p, int n_steps, int threads) const {
    if (e.n_sites != n_) throw DomainError("EtdIntegrator: size mismatch");
    if (n_steps <= 0) return;
    const int N = n_;
    const bool linear = p.is_gaussian() && c_ == 1.0;
    const std::uint64_t step0 = e.step;
    parallel_for(e.replicas, threads, [&](int b, int en, int) {
        RealFft fx(N), fg(N);
        for (int r = b; r < en; ++r) {
            double* x = e.row(r);
            for (int s = 0; s < n_steps; ++s) {
                auto rng = make_stream(e.rng_seed, static_cast<std::uint64_t>(r), step0 + s);
                std::normal_distribution<double> gauss;
                std::copy(x, x + N, fx.real());
                fx.forward();
                if (!linear) {
                    for (int i = 0; i < N; ++i) fg.real()[i] = psi_d1(p, x[i]) - c_ * x[i];
                    fg.forward();
                }
                auto* X = fx.spec();
                const auto* G = fg.spec();
                for (int k = 1; k <= N / 2; ++k) {
                    std::complex<double> v = decay_[k] * X[k];
                    if (!linear) v -= gain_[k] * G[k];
                    if (2 * k == N) v += noise_[k] * gauss(rng);
                    else {
                        const double re = gauss(rng);
                        const double im = gauss(rng);
                        v += noise_[k] * std::complex<double>(re, im);
                    }
                    X[k] = v;
                }
                X[0] = e.mean * N;
                fx.backward();
                for (int i = 0; i < N; ++i) x[i] = fx.real()[i] / N;
                recentre(x, N, e.mean);
            }
        }
    });
    e.step += n_steps;
    e.t += n_steps * dt_;
    e.dt = dt_;
}

double mean_curvature(const Potential& p, double m) {
    const double L = std::max(8.0, std::abs(m) + 12.0), h = 1.0 / 256;
    const LogLaplaceQuadrature Q(p, L, h);
    const double s = Q.solve_tilt(m, m);
    const LogLaplace ll = Q(s);
    double num = 0, den = 0;
    const int n = static_cast<int>(std::ceil(L / h));
    const double hh = L / n;
    for (int i = -n; i <= n; ++i) {
        const double x = i * hh;
        const double w = std::exp(s * x - psi(p, x) - ll.value);
        num += w * psi_d2(p, x);
        den += w;
    }
    return num / den;
}

double estimate_kappa(const Potential& p, int N, int K, int n_probes, std::uint64_t seed) {
    if (K < 1 || N % K != 0) throw DomainError("estimate_kappa: N must be a multiple of K");
    const int M = N / K;
    // adversarial probe: alternate the extremes of dpsi'' inside each block
    double xlo = 0, xhi = 0, dlo = INFINITY, dhi = -INFINITY;
    for (int i = -6000; i <= 6000; ++i) {
        const double x = i * 1e-3, v = p.delta_psi_d2(x);
        if (v < dlo) dlo = v, xlo = x;
        if (v > dhi) dhi = v, xhi = x;
    }
    std::vector<std::vector<double>> probes;
    {
        std::vector<double> x(N);
        for (int i = 0; i < N; ++i) x[i] = (i % 2 == 0) ? xlo : xhi;
        probes.push_back(std::move(x));
    }
    auto rng = make_stream(seed, 0, 0x6b61707061ULL);
    std::normal_distribution<double> gauss(0.0, 1.5);
    for (int q = 0; q < n_probes; ++q) {
        std::vector<double> x(N);
        for (auto& v : x) v = gauss(rng);
        probes.push_back(std::move(x));
    }

    double best = 0.0;
    std::vector<double> d(N), w(N), c(M), cn(M);
    for (const auto& x : probes) {
        for (int i = 0; i < N; ++i) d[i] = psi_d2(p, x[i]);
        // block coordinates c_j of v = sum c_j 1_{B_j}/sqrt(K)
        std::uniform_real_distribution<double> u(0.5, 1.5);
        for (auto& v : c) v = u(rng);
        double rq = 0.0;
        for (int it = 0; it < 20000; ++it) {
            double nrm = 0;
            for (double v : c) nrm += v * v;
            nrm = std::sqrt(nrm);
            if (nrm == 0) break;
            for (auto& v : c) v /= nrm;
            // w = Pi_perp D v
            double r2 = 0;
            for (int j = 0; j < M; ++j) {
                double avg = 0;
                for (int i = j * K; i < (j + 1) * K; ++i) avg += d[i];
                avg /= K;
                double acc = 0;
                for (int i = j * K; i < (j + 1) * K; ++i) {
                    w[i] = c[j] * (d[i] - avg) / std::sqrt(double(K));
                    r2 += w[i] * w[i];
                    acc += d[i] * w[i];
                }
                cn[j] = acc / std::sqrt(double(K));  // Pi_par D w in block coordinates
            }
            const double prev = rq;
            rq = r2;
            c = cn;
            if (it > 5 && std::abs(rq - prev) <= 1e-15 * std::max(rq, 1e-300)) break;
        }
        best = std::max(best, std::sqrt(rq));
    }
    return best;
}

McEstimate theta_functional(const MicroEnsemble& e, const MacroProfile& eta, const KawasakiOperator& op,
                            const Projection& P) {
    if (std::abs(eta.mean - e.mean) > 1e-10) throw PreconditionError("theta: profile mean differs from ensemble mean");
    if (P.n_sites() != e.n_sites || op.n() != e.n_sites || P.n_blocks() != eta.size())
        throw DomainError("theta: size mismatch");
    const int N = e.n_sites;
    const std::vector<double> lifted = P.lift(eta);
    std::vector<double> vals(e.replicas), r(N);
    RealFft ws(N);
    for (int q = 0; q < e.replicas; ++q) {
        const double* x = e.row(q);
        for (int i = 0; i < N; ++i) r[i] = x[i] - lifted[i];
        vals[q] = op.inverse_quadratic_form(r.data(), ws) / (2.0 * N);
    }
    return mc_mean(vals);
}

}  // namespace twoscale
