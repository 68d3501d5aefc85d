#include "twoscale/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <sstream>

#include "twoscale/errors.hpp"
#include "twoscale/fft.hpp"

namespace twoscale {

using std::numbers::pi;

HydroField HydroField::from_values(std::vector<double> v) {
    if (v.empty()) throw DomainError("HydroField: empty");
    HydroField f;
    f.n_cells = static_cast<int>(v.size());
    f.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    f.values = std::move(v);
    return f;
}

void HydroTrajectory::write_csv(std::ostream& os) const {
    char buf[64];
    os << "t";
    if (!frames.empty())
        for (int j = 0; j < frames.front().n_cells; ++j) {
            std::snprintf(buf, sizeof buf, ",%.17g", frames.front().center(j));
            os << buf;
        }
    os << "\n";
    for (std::size_t f = 0; f < frames.size(); ++f) {
        std::snprintf(buf, sizeof buf, "%.17g", times[f]);
        os << buf;
        for (double v : frames[f].values) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            os << buf;
        }
        os << "\n";
    }
}

const HydroField& HydroTrajectory::at(double t) const {
    for (std::size_t f = 0; f < times.size(); ++f)
        if (std::abs(times[f] - t) < 1e-9) return frames[f];
    std::ostringstream os;
    os << "hydro trajectory: no frame at t = " << t;
    throw DomainError(os.str());
}

double hydro_cfl(int n_cells, const TabulatedFunction& phi) {
    const double h = 1.0 / n_cells;
    return h * h / (2 * convexity_bounds(phi).Lambda);
}

HydroTrajectory solve_hydro(const HydroField& zeta0, const TabulatedFunction& phi, double T, double dt,
                            double output_every) {
    const int n = zeta0.n_cells;
    if (n < 3 || static_cast<int>(zeta0.values.size()) != n) throw DomainError("solve_hydro: need at least 3 cells");
    if (!(T > 0)) throw DomainError("solve_hydro: T must be positive");
    for (double v : zeta0.values)
        if (!phi.contains(v)) throw ExtrapolationError("solve_hydro: initial value outside the phi table");
    const auto cb = convexity_bounds(phi);
    const double h = 1.0 / n;
    const double cfl = h * h / (2 * cb.Lambda);
    if (dt > cfl * (1 + 1e-12)) {
        std::ostringstream os;
        os << "solve_hydro: dt = " << dt << " exceeds h^2/(2 Lambda) = " << cfl;
        throw PreconditionError(os.str());
    }
    const double interval = output_every > 0 ? output_every : T;
    const long long n_out = std::llround(T / interval);
    if (n_out < 1 || std::abs(n_out * interval - T) > 1e-9 * T)
        throw DomainError("solve_hydro: T must be a multiple of the output interval");
    const double target = dt > 0 ? dt : cfl;
    const long long n_sub = std::max(1LL, static_cast<long long>(std::ceil(interval / target * (1 - 1e-12))));

    HydroTrajectory tr;
    tr.dt = interval / n_sub;
    tr.lambda = cb.lambda;
    tr.Lambda = cb.Lambda;
    tr.times.push_back(0.0);
    tr.frames.push_back(zeta0);
    std::vector<double> z = zeta0.values, u(n), flux(n);
    const double c = tr.dt / (h * h);
    for (long long o = 1; o <= n_out; ++o) {
        for (long long s = 0; s < n_sub; ++s) {
            for (int j = 0; j < n; ++j) u[j] = phi.deriv1(z[j]);
            for (int j = 0; j + 1 < n; ++j) flux[j] = u[j + 1] - u[j];
            flux[n - 1] = u[0] - u[n - 1];
            z[0] += c * (flux[0] - flux[n - 1]);
            for (int j = 1; j < n; ++j) z[j] += c * (flux[j] - flux[j - 1]);
        }
        tr.steps += n_sub;
        HydroField f;
        f.n_cells = n;
        f.mean = zeta0.mean;
        f.values = z;
        tr.times.push_back(o * interval);
        tr.frames.push_back(std::move(f));
    }
    return tr;
}

namespace {

void require_mean_zero(const HydroField& f) {
    double mx = 0, s = 0;
    for (double v : f.values) {
        mx = std::max(mx, std::abs(v));
        s += v;
    }
    if (std::abs(s / f.n_cells) > 1e-10 * std::max(1.0, mx)) {
        std::ostringstream os;
        os << "H^-1 norm: field mean " << s / f.n_cells << " is not zero";
        throw DomainError(os.str());
    }
}

}  // namespace

double h_minus_one_norm(const HydroField& f) {
    require_mean_zero(f);
    const double h = f.h();
    double w0 = 0, sum = 0, sum2 = 0;
    for (double v : f.values) {
        const double w1 = w0 + h * v;
        sum += 0.5 * h * (w0 + w1);
        sum2 += h * (w0 * w0 + w0 * w1 + w1 * w1) / 3;
        w0 = w1;
    }
    return std::max(0.0, sum2 - sum * sum);
}

double h_minus_one_norm_fourier(const HydroField& f) {
    require_mean_zero(f);
    const int n = f.n_cells;
    RealFft fft(n);
    std::copy(f.values.begin(), f.values.end(), fft.real());
    fft.forward();
    const double n4 = std::pow(double(n), 4);
    double s = 0;
    for (int k = 1; k < fft.n_spec(); ++k) {
        const double sn = std::sin(pi * k / n), cs = std::cos(pi * k / n);
        const double w = (2 * k == n) ? 1.0 : 2.0;
        s += w * std::norm(fft.spec()[k]) * (2 * cs * cs + 1) / (12 * n4 * sn * sn);
    }
    return s;
}

HydroField step_embed(const std::vector<double>& v, int n_cells) {
    const int m = static_cast<int>(v.size());
    if (m < 1) throw DomainError("step_embed: empty vector");
    if (n_cells <= 0) n_cells = m;
    if (n_cells % m != 0) throw DomainError("step_embed: n_cells must be a multiple of the vector length");
    const int r = n_cells / m;
    std::vector<double> out(n_cells);
    for (int i = 0; i < n_cells; ++i) out[i] = v[i / r];
    auto f = HydroField::from_values(std::move(out));
    f.mean = std::accumulate(v.begin(), v.end(), 0.0) / m;
    return f;
}

HydroField step_embed(const MacroProfile& y, int n_cells) {
    auto f = step_embed(y.values, n_cells);
    f.mean = y.mean;
    return f;
}

HydroField difference(const HydroField& a, const HydroField& b) {
    if (a.n_cells != b.n_cells) throw DomainError("HydroField difference: resolution mismatch");
    std::vector<double> d(a.n_cells);
    for (int j = 0; j < a.n_cells; ++j) d[j] = a.values[j] - b.values[j];
    auto f = HydroField::from_values(std::move(d));
    return f;
}

void RegularityReport::write_csv(std::ostream& os) const {
    os << "t,L2,D1,D2,L4_ratio\n";
    char buf[160];
    for (const auto& f : frames) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", f.t, f.L2, f.D1, f.D2, f.L4_ratio);
        os << buf;
    }
}

RegularityReport regularity_diagnostics(const HydroTrajectory& traj, const TabulatedFunction& phi, double t_min,
                                        double tol) {
    RegularityReport rep;
    const double lambda = convexity_bounds(phi).lambda;
    rep.guaranteed_rate = 2 * lambda * pi * pi;
    if (traj.frames.empty()) return rep;
    const int n = traj.frames.front().n_cells;
    RealFft fft(n);
    const int ns = fft.n_spec();
    std::vector<std::complex<double>> U(ns);
    std::vector<double> du(n);

    // sum over the full spectrum of |c_k|^2 / n^2 from the half spectrum
    auto parseval = [&](auto&& coef) {
        double s = 0;
        for (int k = 1; k < ns; ++k) {
            if (2 * k == n) continue;
            s += 2 * std::norm(coef(k));
        }
        return s / (double(n) * n);
    };
    for (std::size_t fi = 0; fi < traj.frames.size(); ++fi) {
        const auto& z = traj.frames[fi].values;
        RegularityFrame fr;
        fr.t = traj.times[fi];
        for (double v : z) fr.L2 += v * v;
        fr.L2 /= n;

        std::copy(z.begin(), z.end(), fft.real());
        fft.forward();
        fr.grad2 = parseval([&](int k) { return 2 * pi * k * fft.spec()[k]; });

        for (int j = 0; j < n; ++j) fft.real()[j] = phi.deriv1(z[j]);
        fft.forward();
        std::copy(fft.spec(), fft.spec() + ns, U.begin());
        fr.D1 = parseval([&](int k) { return 2 * pi * k * U[k]; });
        fr.D2 = parseval([&](int k) { return 4 * pi * pi * double(k) * k * U[k]; });

        for (int k = 0; k < ns; ++k)
            fft.spec()[k] = (k == 0 || 2 * k == n) ? 0.0 : std::complex<double>(0, 2 * pi * k) * U[k];
        fft.backward();
        double l4 = 0;
        for (int j = 0; j < n; ++j) {
            const double v = fft.real()[j] / n;
            l4 += v * v * v * v;
        }
        l4 = std::pow(l4 / n, 0.25);
        if (fr.D1 > 0 && fr.D2 > 0)
            fr.L4_ratio = l4 / (std::pow(2.0, 0.25) * std::pow(fr.D1, 0.375) * std::pow(fr.D2, 0.125));
        rep.frames.push_back(fr);
    }

    for (std::size_t i = 1; i < rep.frames.size(); ++i)
        if (rep.frames[i].L2 > rep.frames[i - 1].L2 * (1 + 1e-13) + 1e-300) rep.energy_monotone = false;
    for (const auto& f : rep.frames)
        if (f.L4_ratio > 1.0) rep.l4_holds = false;

    std::vector<double> ts, ls;
    for (std::size_t i = 0; i < rep.frames.size(); ++i) {
        const auto& a = rep.frames[i];
        if (a.t < t_min - 1e-12 || !(a.D1 > 0)) continue;
        ts.push_back(a.t);
        ls.push_back(-std::log(a.D1));
        for (std::size_t j = i + 1; j < rep.frames.size(); ++j) {
            const auto& b = rep.frames[j];
            const double r = b.D1 / (a.D1 * std::exp(-rep.guaranteed_rate * (b.t - a.t)));
            rep.worst_contraction = std::max(rep.worst_contraction, r);
        }
    }
    rep.contraction_holds = rep.worst_contraction <= 1 + tol;
    if (ts.size() >= 2) {
        const double tm = std::accumulate(ts.begin(), ts.end(), 0.0) / ts.size();
        const double lm = std::accumulate(ls.begin(), ls.end(), 0.0) / ls.size();
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            sxy += (ts[i] - tm) * (ls[i] - lm);
            sxx += (ts[i] - tm) * (ts[i] - tm);
        }
        rep.observed_rate = sxy / sxx;
    }
    return rep;
}

}  // namespace twoscale
