#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "twoscale/errors.hpp"
#include "twoscale/functionals.hpp"

using namespace twoscale;
using std::numbers::pi;

namespace {

GridDensity gauss_1d(double lo, double hi, int n, double mean, double var) {
    return GridDensity::sample(GridDensity::make_1d(lo, hi, n),
                               [=](double x, double) { return std::exp(-(x - mean) * (x - mean) / (2 * var)); });
}

ConstantsLedger ones() {
    ConstantsLedger c;
    c.rho = c.lambda = c.Lambda = c.kappa = c.tau = c.alpha = c.beta = c.gamma = c.C1 = c.C2 = 1.0;
    return c;
}

}  // namespace

TEST_CASE("grid relative entropy") {
    auto mu = gauss_1d(-12, 12, 4801, 0, 1);
    CHECK(entropy_grid(mu, mu) == doctest::Approx(0.0));
    for (double a : {0.3, 1.0, 2.0}) CHECK(entropy_grid(gauss_1d(-12, 12, 4801, a, 1), mu) == doctest::Approx(a * a / 2).epsilon(1e-6));
    // variance change: (s - 1 - log s)/2
    CHECK(entropy_grid(gauss_1d(-12, 12, 4801, 0, 0.5), mu) == doctest::Approx(0.5 * (0.5 - 1 - std::log(0.5))).epsilon(1e-6));

    auto g2 = GridDensity::make_2d({-9, -9}, {9, 9}, {361, 361});
    auto mu2 = GridDensity::sample(g2, [](double x, double y) { return std::exp(-(x * x + y * y) / 2); });
    auto nu2 = GridDensity::sample(g2, [](double x, double y) { return std::exp(-((x - 0.5) * (x - 0.5) + (y + 1) * (y + 1)) / 2); });
    CHECK(entropy_grid(nu2, mu2) == doctest::Approx((0.25 + 1.0) / 2).epsilon(1e-6));

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    for (int trial = 0; trial < 20; ++trial) {
        const double e1 = u(rng), e2 = u(rng), f = 1 + 3 * std::abs(u(rng));
        auto nu = GridDensity::sample(mu, [&](double x, double) {
            return std::exp(-x * x / 2) * (1 + e1 * std::sin(f * x) * 0.5 + e2 * 0.4 * std::cos(2 * x));
        });
        const double ent = entropy_grid(nu, mu), fi = fisher_grid(nu, mu);
        CHECK(ent >= 0);
        CHECK(ent <= fi / 2 + 1e-8);  // Gaussian LSI, rho = 1
    }
    auto gap = GridDensity::sample(mu, [](double x, double) { return x > 0 ? std::exp(-x * x / 2) : 0.0; });
    CHECK_THROWS_AS(entropy_grid(mu, gap), DomainError);
    CHECK_THROWS_AS(entropy_grid(mu, GridDensity::make_1d(-1, 1, 11)), DomainError);
}

TEST_CASE("grid Fisher information") {
    auto mu = gauss_1d(-12, 12, 4801, 0, 1);
    CHECK(fisher_grid(mu, mu) == doctest::Approx(0.0));
    for (double a : {0.3, 1.0, 2.0}) CHECK(fisher_grid(gauss_1d(-12, 12, 4801, a, 1), mu) == doctest::Approx(a * a).epsilon(1e-4));
    // variance s: (s - 1)^2 / s
    CHECK(fisher_grid(gauss_1d(-14, 14, 5601, 0, 2), gauss_1d(-14, 14, 5601, 0, 1)) == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("second moment about a point") {
    std::vector<double> same(40, 0.7);
    CHECK(w2_to_dirac(same, 1, {0.7}).value == 0.0);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.4, 1.5);
    std::vector<double> s(40000);
    for (auto& v : s) v = g(rng);
    auto e = w2_to_dirac(s, 1, {0.4});
    CHECK(std::abs(e.value - 2.25) < 4 * e.stderr_);
    CHECK(w2_to_dirac(gauss_1d(-20, 20, 4001, 0.4, 2.25), {0.4}) == doctest::Approx(2.25).epsilon(1e-8));
    // metric weight and chain batching
    std::vector<int> chain(s.size());
    for (std::size_t r = 0; r < s.size(); ++r) chain[r] = static_cast<int>(r % 8);
    auto eb = w2_to_dirac(s, 1, {0.4}, 0.5, chain);
    CHECK(eb.value == doctest::Approx(0.5 * e.value));
    CHECK(eb.stderr_ > 0);

    // coupling bound through the Dirac mass
    std::normal_distribution<double> g1(0.0, 0.6), g2(0.3, 1.1);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> a(500), b(500);
        for (auto& v : a) v = g1(rng);
        for (auto& v : b) v = g2(rng);
        const double w = w2_empirical_1d(a, b);
        CHECK(w <= 2 * (w2_to_dirac(a, 1, {0.1}).value + w2_to_dirac(b, 1, {0.1}).value) + 1e-12);
    }
}

TEST_CASE("empirical W2") {
    std::vector<double> a{0.3, -1.2, 2.0, 0.0};
    CHECK(w2_empirical_1d(a, a) == 0.0);
    CHECK(w2_empirical_1d({0.0}, {1.0}) == 1.0);
    std::vector<double> b = a;
    for (auto& v : b) v += 0.75;
    CHECK(std::abs(w2_empirical_1d(a, b, 0.25) - 0.25 * 0.5625) < 1e-10);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    const int n = 7;
    std::vector<double> p(2 * n), q(2 * n);
    for (auto& v : p) v = g(rng);
    for (auto& v : q) v = g(rng);
    // brute force over permutations
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
        double c = 0;
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < 2; ++k) c += std::pow(p[2 * i + k] - q[2 * perm[i] + k], 2);
        best = std::min(best, c / n);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(w2_empirical(p, q, 2) == doctest::Approx(best).epsilon(1e-12));

    std::vector<double> p3(3 * 50), q3;
    for (auto& v : p3) v = g(rng);
    q3 = p3;
    for (std::size_t i = 0; i < q3.size(); ++i) q3[i] += (i % 3 == 0) ? 0.2 : (i % 3 == 1 ? -0.1 : 0.3);
    CHECK(std::abs(w2_empirical(p3, q3, 3, 1.0 / 3) - (0.04 + 0.01 + 0.09) / 3) < 1e-10);

    CHECK_THROWS_AS(w2_empirical(std::vector<double>(8), std::vector<double>(8), 4), DomainError);
    CHECK_THROWS_AS(w2_empirical_1d({1.0}, {1.0, 2.0}), PreconditionError);
}

TEST_CASE("grid W2 between 1-D densities") {
    auto mu = gauss_1d(-12, 12, 4801, 0, 1);
    CHECK(w2_grid_1d(mu, mu) < 1e-12);
    CHECK(w2_grid_1d(mu, gauss_1d(-12, 12, 4801, 0.8, 1)) == doctest::Approx(0.64).epsilon(1e-8));
    // (sigma_a - sigma_b)^2 for centred Gaussians
    CHECK(w2_grid_1d(mu, gauss_1d(-12, 12, 4801, 0, 2.25)) == doctest::Approx(0.25).epsilon(1e-7));
}

TEST_CASE("HWI inequality") {
    auto mu = gauss_1d(-12, 12, 4801, 0, 1);
    auto same = hwi_check(mu, mu, 1.0);
    CHECK(same.holds);
    CHECK(std::abs(same.lhs) < 1e-12);
    for (double a : {0.2, 0.7, 1.5}) {
        auto r = hwi_check(mu, gauss_1d(-12, 12, 4801, a, 1), 1.0);
        CHECK(r.holds);
        CHECK(std::abs(r.lhs - r.rhs) < 1e-8);
        CHECK(r.lhs == doctest::Approx(a * a / 2).epsilon(1e-7));
    }

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
        const double lam = 0.3 + 1.5 * u(rng), c4 = 0.02 * u(rng), b = 2 * u(rng), d = 2 * u(rng) - 1;
        auto m = GridDensity::sample(GridDensity::make_1d(-6, 6, 2401), [&](double x, double) {
            return std::exp(-(lam * x * x / 2 + c4 * x * x * x * x + b * std::log(std::cosh(x - d))));
        });
        const double m1 = 3 * u(rng) - 1.5, m2 = 3 * u(rng) - 1.5, v1 = 0.3 + 0.7 * u(rng), v2 = 0.3 + 0.7 * u(rng), w = u(rng);
        auto nu = GridDensity::sample(m, [&](double x, double) {
            return w * std::exp(-(x - m1) * (x - m1) / (2 * v1)) / std::sqrt(v1) +
                   (1 - w) * std::exp(-(x - m2) * (x - m2) / (2 * v2)) / std::sqrt(v2);
        });
        auto r = hwi_check(m, nu, lam);
        CHECK(r.holds);
        CHECK(r.lhs >= 0);
    }
    auto well = GridDensity::sample(GridDensity::make_1d(-4, 4, 801), [](double x, double) {
        return std::exp(-(x * x - 1) * (x * x - 1));
    });
    CHECK_THROWS_AS(hwi_check(well, well, 0.5), PreconditionError);
}

TEST_CASE("second moment lemma") {
    auto q = second_moment_lemma_check([](double x, double) { return x * x / 2; }, 1, 1.0);
    CHECK(q.holds);
    CHECK(q.lhs == doctest::Approx(q.rhs).epsilon(1e-10));
    CHECK(q.rhs == doctest::Approx(std::sqrt(2 * pi)).epsilon(1e-10));

    auto quartic = second_moment_lemma_check([](double x, double) { return x * x / 2 + 0.1 * x * x * x * x; }, 1, 1.0);
    CHECK(quartic.holds);
    CHECK(quartic.lhs < quartic.rhs - 1e-3);

    auto q2 = second_moment_lemma_check([](double x, double y) { return x * x + y * y; }, 2, 2.0, 8.0, 801);
    CHECK(q2.holds);
    CHECK(q2.lhs == doctest::Approx(q2.rhs).epsilon(1e-10));

    auto aniso = second_moment_lemma_check([](double x, double y) { return x * x + 2 * y * y + 0.5 * x * y; }, 2, 1.5, 8.0, 801);
    CHECK(aniso.holds);

    CHECK_THROWS_AS(second_moment_lemma_check([](double x, double) { return (x - 1) * (x - 1) / 2; }, 1, 1.0), PreconditionError);
    CHECK_THROWS_AS(second_moment_lemma_check([](double x, double) { return x * x / 2; }, 1, 2.0), PreconditionError);
}

TEST_CASE("Xi envelope") {
    auto c = ones();
    c.kappa = 0;
    c.gamma = 0;
    CHECK(xi_bound(0.5, 8, 64, c, 0.0) == doctest::Approx(0.5 * 8 / 64));

    // hand evaluation: T = 1, M = 10, N = 100, every constant 1
    const double rho_hat = (3 - std::sqrt(5.0)) / 2;
    const double term3 = 1.0 / 100 * (1.0 * 1 * 1 / (2.0 * 1 * 1));
    const double term4 = 1.0 / 10 * std::sqrt(2.0 * 1 * 1) * std::sqrt(1 + 2 * 1 / rho_hat) * (1 + std::sqrt(1.0 + 1));
    const double hand = 0.0 + 1.0 * 10 / 100 + term3 + term4;
    CHECK(hand == doctest::Approx(0.9576015).epsilon(1e-7));
    CHECK(xi_bound(1, 10, 100, ones(), 0.0) == doctest::Approx(hand).epsilon(1e-14));

    double prev = INFINITY;
    for (auto [N, M] : {std::pair{64, 8}, std::pair{256, 16}, std::pair{1024, 32}, std::pair{16384, 128}}) {
        const double x = xi_bound(0.5, M, N, ones(), 0.0);
        CHECK(x < prev);
        prev = x;
    }
    CHECK(prev < 0.1);
    // N/M fixed keeps the middle term
    CHECK(xi_bound(1, 1 << 20, 8 << 20, ones(), 0.0) > 1.0 / 8);
    CHECK(xi_bound(1, 10, 100, ones(), 0.3) == doctest::Approx(hand + 0.3));

    auto bad = ones();
    bad.rho = 0;
    CHECK_THROWS_AS(xi_bound(1, 10, 100, bad, 0), DomainError);
}

TEST_CASE("free-energy gap bound assembly") {
    ConstantsLedger z;
    z.rho = z.lambda = z.Lambda = z.tau = 1.0;
    double prev = INFINITY;
    for (int N : {1000, 100000, 10000000}) {
        const double b = free_energy_gap_bound(1.0, 4, N, z, 0.0);
        CHECK(b < prev);
        prev = b;
    }
    CHECK(prev < 1e-4);
    // only the local Gibbs log term survives, as in the Kawasaki Gamma(Y) instance
    auto t = free_energy_gap_terms(1.0, 4, 1000, z, 0.0);
    CHECK(t.local_gibbs == doctest::Approx(3.0 / 2000 * std::abs(std::log(8 * pi / 1000))).epsilon(1e-12));

    double last = -1;
    for (double th = 0; th < 2; th += 0.1) {
        const double b = free_energy_gap_bound(0.5, 8, 256, ones(), th);
        CHECK(b > last);
        last = b;
    }
}

TEST_CASE("gaussian oracle: dense form") {
    const int N = 6;
    auto A = kawasaki_matrix(N);
    GaussianState eq;
    eq.mean = Eigen::VectorXd::Constant(N, 0.3);
    eq.cov = Eigen::MatrixXd::Identity(N, N) - Eigen::MatrixXd::Constant(N, N, 1.0 / N);
    auto s = gaussian_oracle_evolve(eq, A, 0.7);
    CHECK((s.mean - eq.mean).norm() < 1e-14);
    CHECK((s.cov - eq.cov).norm() < 1e-13);
    CHECK(relative_entropy(s) < 1e-14);

    GaussianState g = eq;
    for (int i = 0; i < N; ++i) g.mean(i) += 0.4 * std::cos(2 * pi * i / N);
    g.cov *= 0.3;
    double prev = INFINITY;
    for (double t = 0; t < 0.3; t += 0.01) {
        const double e = relative_entropy(gaussian_oracle_evolve(g, A, t));
        CHECK(e <= prev);
        prev = e;
    }
    CHECK(prev < 1e-6);

    // N = 2: single bond with eigenvalue 16
    auto A2 = kawasaki_matrix(2);
    CHECK(A2(0, 0) == 8.0);
    GaussianState two;
    two.mean = Eigen::Vector2d(0.5, -0.5);
    two.cov = Eigen::Matrix2d{{0.25, -0.25}, {-0.25, 0.25}};
    auto e2 = gaussian_oracle_evolve(two, A2, 0.05);
    const double var = 1 + (0.5 - 1) * std::exp(-32 * 0.05);
    CHECK(e2.cov(0, 0) * 2 == doctest::Approx(var).epsilon(1e-12));
    CHECK(e2.mean(0) == doctest::Approx(0.5 * std::exp(-16 * 0.05)).epsilon(1e-12));
}

TEST_CASE("gaussian oracle: circulant form agrees with the dense form") {
    const int N = 16, M = 4;
    KawasakiOperator op(N);
    auto A = kawasaki_matrix(N);
    std::vector<double> mean(N), eta(M);
    for (int i = 0; i < N; ++i) mean[i] = 0.2 + 0.5 * std::sin(2 * pi * (i / 4) / M);
    for (int j = 0; j < M; ++j) eta[j] = 0.2 + 0.45 * std::sin(2 * pi * j / M);
    auto c0 = CirculantGaussian::equilibrium_fluctuations(mean, 0.5);
    for (double t : {0.0, 0.003, 0.01, 0.05}) {
        auto c = c0.evolve(op, t);
        auto d = gaussian_oracle_evolve(c0.dense(), A, t);
        CHECK((c.dense().cov - d.cov).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(c.relative_entropy() == doctest::Approx(relative_entropy(d)).epsilon(1e-10));
        CHECK(c.fisher_information() == doctest::Approx(fisher_information(d)).epsilon(1e-10));
        CHECK(c.theta(eta, op) == doctest::Approx(theta_functional(d, eta, A)).epsilon(1e-10));
        CHECK(c.macro_second_moment(eta) == doctest::Approx(macro_second_moment(d, eta)).epsilon(1e-10));
    }
}

TEST_CASE("gaussian oracle: block-average entropy against a dense hyperplane computation") {
    const int N = 24, M = 6, K = N / M;
    KawasakiOperator op(N);
    std::vector<double> mean(N), eta(M);
    for (int i = 0; i < N; ++i) mean[i] = 0.1 + 0.4 * std::cos(2 * pi * (i + 0.5) / N);
    for (int j = 0; j < M; ++j) eta[j] = 0.1 + 0.3 * std::cos(2 * pi * (j + 0.5) / M);
    auto c0 = CirculantGaussian::equilibrium_fluctuations(mean, 0.4);
    Eigen::MatrixXd Pm = Eigen::MatrixXd::Zero(M, N);
    for (int i = 0; i < N; ++i) Pm(i / K, i) = 1.0 / K;
    // orthonormal basis of the mean-zero hyperplane in R^M
    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(M, M) - Eigen::MatrixXd::Constant(M, M, 1.0 / M);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qs(Q);
    Eigen::MatrixXd B = qs.eigenvectors().rightCols(M - 1);
    for (double t : {0.0, 0.002, 0.02}) {
        auto d = c0.evolve(op, t).dense();
        Eigen::MatrixXd S1 = B.transpose() * Pm * d.cov * Pm.transpose() * B;
        const double s2 = double(M) / N;
        Eigen::VectorXd dm = B.transpose() * (Pm * d.mean - Eigen::Map<Eigen::VectorXd>(eta.data(), M));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S1);
        double kl = dm.squaredNorm() / s2 - (M - 1);
        for (int q = 0; q < M - 1; ++q) kl += es.eigenvalues()(q) / s2 - std::log(es.eigenvalues()(q) / s2);
        CHECK(c0.evolve(op, t).macro_relative_entropy(eta) == doctest::Approx(0.5 * kl / N).epsilon(1e-9));
    }
    auto eq = CirculantGaussian::equilibrium_fluctuations(std::vector<double>(N, 0.1));
    CHECK(std::abs(eq.macro_relative_entropy(std::vector<double>(M, 0.1))) < 1e-15);
}

TEST_CASE("gaussian oracle: entropy against per-mode grid integrals") {
    const int N = 16;
    KawasakiOperator op(N);
    std::vector<double> mean(N);
    Projection P(N, 4);
    std::vector<double> prof(4);
    for (int j = 0; j < 4; ++j) prof[j] = 0.3 * std::cos(2 * pi * j / 4);
    mean = P.lift(prof);
    auto g = CirculantGaussian::equilibrium_fluctuations(mean, 0.5).evolve(op, 0.01).dense();

    Eigen::MatrixXd Pi = Eigen::MatrixXd::Identity(N, N) - Eigen::MatrixXd::Constant(N, N, 1.0 / N);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(Pi);
    Eigen::MatrixXd Q = ep.eigenvectors().rightCols(N - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q.transpose() * g.cov * Q);
    Eigen::VectorXd c = es.eigenvectors().transpose() * Q.transpose() * (g.mean - Eigen::VectorXd::Constant(N, g.m()));
    double sum = 0;
    for (int k = 0; k < N - 1; ++k) {
        auto rho = gauss_1d(-14, 14, 5601, c(k), es.eigenvalues()(k));
        sum += entropy_grid(rho, gauss_1d(-14, 14, 5601, 0, 1));
    }
    CHECK(CirculantGaussian::equilibrium_fluctuations(mean, 0.5).evolve(op, 0.01).relative_entropy() ==
          doctest::Approx(sum).epsilon(1e-4));
}

TEST_CASE("gaussian oracle: H^-1 fluctuation term from the Gram matrix") {
    const int N = 12;
    std::vector<double> mean(N, 0.1);
    std::vector<double> s(N);
    for (int k = 0; k < N; ++k) s[k] = 0.5 + 0.3 * std::cos(2 * pi * k / N);
    CirculantGaussian cg(mean, s);
    auto d = cg.dense();
    // polarization over centred unit steps
    auto unit = [&](int i) {
        std::vector<double> v(N, -1.0 / N);
        v[i] += 1;
        return v;
    };
    Eigen::MatrixXd G(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            auto a = unit(i), b = unit(j);
            std::vector<double> p(N), m(N);
            for (int k = 0; k < N; ++k) {
                p[k] = a[k] + b[k];
                m[k] = a[k] - b[k];
            }
            G(i, j) = 0.25 * (h_minus_one_norm(HydroField::from_values(p)) - h_minus_one_norm(HydroField::from_values(m)));
        }
    const double expected = (d.cov * G).trace();
    auto zeta = HydroField::from_values(std::vector<double>(N * 4, 0.1));
    CHECK(cg.h_minus_one_distance(zeta) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("gaussian oracle guards") {
    CHECK_THROWS_AS(CirculantGaussian(std::vector<double>(4, 0.0), std::vector<double>{0, 1, 2, 3}), DomainError);
    GaussianState bad;
    bad.mean = Eigen::VectorXd::Zero(3);
    bad.cov = -Eigen::MatrixXd::Identity(3, 3) + Eigen::MatrixXd::Constant(3, 3, 1.0 / 3);
    CHECK_THROWS_AS(bad.check(), NumericalError);
}
