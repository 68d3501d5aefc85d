#include "twoscale/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "twoscale/errors.hpp"

namespace twoscale {

namespace {

struct Face {
    std::size_t a, b;
    double w;  // D/h^2 * sqrt(pi_a pi_b)
};

std::vector<double> equilibrium_weights(const std::vector<double>& H) {
    const double hmin = *std::min_element(H.begin(), H.end());
    std::vector<double> pi(H.size());
    for (std::size_t i = 0; i < H.size(); ++i) pi[i] = std::exp(-(H[i] - hmin));
    return pi;
}

std::vector<Face> build_faces(const std::vector<double>& pi, const Eigen::MatrixXd& D, const GridDensity& g) {
    std::vector<Face> faces;
    const int n0 = g.n[0], n1 = g.dim == 2 ? g.n[1] : 1;
    auto idx = [n1](int i, int j) { return static_cast<std::size_t>(i) * n1 + j; };
    const double c0 = D(0, 0) / (g.h(0) * g.h(0));
    for (int i = 0; i + 1 < n0; ++i)
        for (int j = 0; j < n1; ++j) {
            const auto a = idx(i, j), b = idx(i + 1, j);
            faces.push_back({a, b, c0 * std::sqrt(pi[a] * pi[b])});
        }
    if (g.dim == 2) {
        const double c1 = D(1, 1) / (g.h(1) * g.h(1));
        for (int i = 0; i < n0; ++i)
            for (int j = 0; j + 1 < n1; ++j) {
                const auto a = idx(i, j), b = idx(i, j + 1);
                faces.push_back({a, b, c1 * std::sqrt(pi[a] * pi[b])});
            }
    }
    return faces;
}

void validate(const std::vector<double>& H, const Eigen::MatrixXd& D, const GridDensity& g) {
    if (g.dim != 1 && g.dim != 2) throw PreconditionError("Fokker-Planck: dimension must be 1 or 2");
    if (H.size() != g.values.size()) throw DomainError("Fokker-Planck: H not sampled on the density grid");
    if (D.rows() != g.dim || D.cols() != g.dim) throw DomainError("Fokker-Planck: diffusion matrix has wrong size");
    for (int a = 0; a < g.dim; ++a)
        for (int b = 0; b < g.dim; ++b) {
            if (a == b && !(D(a, a) > 0)) throw DomainError("Fokker-Planck: diffusion must be positive");
            if (a != b && D(a, b) != 0.0) throw PreconditionError("Fokker-Planck: only diagonal diffusion is supported");
        }
}

double cfl_from(const std::vector<Face>& faces, const std::vector<double>& pi) {
    std::vector<double> out(pi.size(), 0.0);
    for (const auto& f : faces) {
        out[f.a] += f.w / pi[f.a];
        out[f.b] += f.w / pi[f.b];
    }
    return 1.0 / *std::max_element(out.begin(), out.end());
}

double relative_entropy(const std::vector<double>& rho, const std::vector<double>& pi, double pisum) {
    double rs = 0;
    for (double v : rho) rs += v;
    double e = 0;
    for (std::size_t i = 0; i < rho.size(); ++i)
        if (rho[i] > 0) e += rho[i] * std::log((rho[i] / rs) / (pi[i] / pisum));
    return e / rs;
}

double boundary_mass(const GridDensity& g) {
    const int n0 = g.n[0], n1 = g.dim == 2 ? g.n[1] : 1;
    double s = 0;
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j) {
            const bool edge = i < 2 || i >= n0 - 2 || (g.dim == 2 && (j < 2 || j >= n1 - 2));
            if (edge) s += std::abs(g.values[static_cast<std::size_t>(i) * n1 + j]);
        }
    return s * g.h(0) * (g.dim == 2 ? g.h(1) : 1.0);
}

void check_leak(const GridDensity& g, double tol, double t) {
    const double b = boundary_mass(g);
    if (b > tol) {
        std::ostringstream os;
        os << "Fokker-Planck: boundary mass " << b << " exceeds " << tol << " at t=" << t;
        throw AccuracyError(os.str());
    }
}

}  // namespace

double fokker_planck_cfl(const std::vector<double>& H, const Eigen::MatrixXd& D, const GridDensity& g) {
    validate(H, D, g);
    const auto pi = equilibrium_weights(H);
    return cfl_from(build_faces(pi, D, g), pi);
}

FokkerPlanckTrajectory solve_fokker_planck(const std::vector<double>& H, const Eigen::MatrixXd& D,
                                           const GridDensity& rho0, const FokkerPlanckOptions& opt) {
    validate(H, D, rho0);
    if (!(opt.T >= 0)) throw DomainError("Fokker-Planck: T must be >= 0");
    const auto pi = equilibrium_weights(H);
    double pisum = 0;
    for (double v : pi) pisum += v;
    const auto faces = build_faces(pi, D, rho0);
    const double cfl = cfl_from(faces, pi);
    double dt = opt.dt > 0 ? opt.dt : 0.9 * cfl;
    if (dt > cfl * (1 + 1e-12)) {
        std::ostringstream os;
        os << "Fokker-Planck: dt=" << dt << " violates CFL limit " << cfl;
        throw PreconditionError(os.str());
    }
    for (double v : rho0.values)
        if (!(v >= 0)) throw DomainError("Fokker-Planck: initial density must be nonnegative");

    FokkerPlanckTrajectory tr;
    GridDensity cur = rho0;
    check_leak(cur, opt.leak_tol, 0.0);
    const std::size_t nsteps = opt.T > 0 ? static_cast<std::size_t>(std::ceil(opt.T / dt - 1e-9)) : 0;
    if (nsteps > 0) dt = opt.T / nsteps;
    tr.dt = dt;
    tr.steps = nsteps;
    std::size_t every = nsteps;
    if (opt.output_every > 0) every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt.output_every / dt)));

    auto record = [&](double t) {
        tr.times.push_back(t);
        tr.frames.push_back(cur);
        tr.entropy.push_back(relative_entropy(cur.values, pi, pisum));
        tr.mass.push_back(cur.mass());
    };
    record(0.0);

    std::vector<double> u(cur.size());
    double ent = tr.entropy.back();
    for (std::size_t s = 1; s <= nsteps; ++s) {
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = cur.values[i] / pi[i];
        for (const auto& f : faces) {
            const double flux = dt * f.w * (u[f.b] - u[f.a]);
            cur.values[f.a] += flux;
            cur.values[f.b] -= flux;
        }
        const double e = relative_entropy(cur.values, pi, pisum);
        if (e > ent + 1e-10) tr.entropy_monotone = false;
        ent = e;
        if (s % every == 0 || s == nsteps) {
            check_leak(cur, opt.leak_tol, s * dt);
            record(s * dt);
        }
    }
    return tr;
}

}  // namespace twoscale
