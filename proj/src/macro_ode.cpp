#include "twoscale/macro_ode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "twoscale/errors.hpp"

namespace twoscale {

void MacroTrajectory::write_csv(std::ostream& os) const {
    const int M = states.empty() ? 0 : states.front().size();
    os << "t";
    for (int j = 1; j <= M; ++j) os << ",eta_" << j;
    os << ",H\n";
    char buf[64];
    for (std::size_t f = 0; f < times.size(); ++f) {
        std::snprintf(buf, sizeof buf, "%.17g", times[f]);
        os << buf;
        for (double v : states[f].values) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g\n", energies[f]);
        os << buf;
    }
}

double macro_dt_bound(const MacroOperator& abar, const CoarseHamiltonian& h) {
    if (!(abar.tangent_max > 0)) return INFINITY;
    return 0.5 / (h.Lambda * abar.tangent_max);
}

MacroTrajectory solve_macro_ode(const MacroProfile& eta0, const MacroOperator& abar, const CoarseHamiltonian& h,
                                double T, double dt, int output_every) {
    const int M = h.M;
    if (eta0.size() != M || abar.M != M) throw DomainError("macro ODE: dimension mismatch");
    if (!(T >= 0) || !(dt > 0) || output_every < 1) throw DomainError("macro ODE: bad T, dt or output stride");
    eta0.check(1e-10);
    const double bound = macro_dt_bound(abar, h);
    if (dt > bound * (1 + 1e-12)) {
        std::ostringstream os;
        os << "macro ODE: dt = " << dt << " exceeds 0.5/(Lambda lambda_max) = " << bound;
        throw PreconditionError(os.str());
    }
    for (double v : eta0.values)
        if (!h.psiK.contains(v)) throw ExtrapolationError("macro ODE: initial state outside the psi_K table");

    const long long n_steps = std::llround(std::ceil(T / dt - 1e-9));
    MacroTrajectory tr;
    tr.dt = n_steps > 0 ? T / n_steps : dt;
    const double step = tr.dt;

    auto rhs = [&](const std::vector<double>& y) {
        auto v = abar.apply(grad_Hbar(h, y));
        for (auto& x : v) x = -x;
        return v;
    };
    std::vector<double> y = eta0.values, tmp(M);
    double energy = hbar_potential(h, y);
    tr.times.push_back(0.0);
    tr.states.push_back(eta0);
    tr.energies.push_back(energy);
    for (long long s = 1; s <= n_steps; ++s) {
        const auto k1 = rhs(y);
        for (int j = 0; j < M; ++j) tmp[j] = y[j] + 0.5 * step * k1[j];
        const auto k2 = rhs(tmp);
        for (int j = 0; j < M; ++j) tmp[j] = y[j] + 0.5 * step * k2[j];
        const auto k3 = rhs(tmp);
        for (int j = 0; j < M; ++j) tmp[j] = y[j] + step * k3[j];
        const auto k4 = rhs(tmp);
        double avg = 0;
        for (int j = 0; j < M; ++j) {
            y[j] += step / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
            avg += y[j];
        }
        avg = avg / M - eta0.mean;
        for (auto& v : y) v -= avg;
        const double e = hbar_potential(h, y);
        if (e > energy + 1e-10 * std::max(1.0, std::abs(energy))) {
            std::ostringstream os;
            os << "macro ODE: H-bar increased by " << e - energy << " at step " << s;
            throw StabilityError(os.str());
        }
        energy = e;
        if (s % output_every == 0 || s == n_steps) {
            tr.times.push_back(s * step);
            tr.states.push_back(MacroProfile{eta0.mean, y});
            tr.energies.push_back(energy);
        }
    }
    return tr;
}

Dissipation dissipation_integral(const MacroTrajectory& traj, const MacroOperator& abar, const CoarseHamiltonian& h) {
    Dissipation d;
    if (traj.times.empty()) return d;
    d.tau = abar.tangent_max > 0 ? abar.tangent_min : INFINITY;
    std::vector<double> g2(traj.times.size());
    for (std::size_t f = 0; f < g2.size(); ++f) g2[f] = norm2_Y(grad_Hbar(h, traj.states[f]));
    double trap = 0;
    for (std::size_t f = 1; f < g2.size(); ++f) trap += 0.5 * (g2[f] + g2[f - 1]) * (traj.times[f] - traj.times[f - 1]);
    d.integral = trap;
    const std::size_t n = g2.size() - 1;
    bool uniform = n >= 2 && n % 2 == 0;
    for (std::size_t f = 1; uniform && f <= n; ++f) {
        const double w = traj.times[f] - traj.times[f - 1], w0 = traj.times[1] - traj.times[0];
        uniform = std::abs(w - w0) <= 1e-9 * w0;
    }
    if (uniform) {
        const double w = (traj.times.back() - traj.times.front()) / n;
        double simp = g2.front() + g2.back();
        for (std::size_t f = 1; f < n; ++f) simp += (f % 2 ? 4 : 2) * g2[f];
        d.integral = simp * w / 3;
        d.quadrature_error = std::abs(d.integral - trap);
    }
    d.energy_drop = traj.energies.front() - traj.energies.back();
    const double inf_h = h.psiK.value(traj.states.front().mean);
    d.bound = (traj.energies.front() - inf_h) / d.tau;
    d.holds = d.integral <= d.bound + d.quadrature_error + 1e-9 * std::max(1.0, d.bound);
    return d;
}

}  // namespace twoscale
