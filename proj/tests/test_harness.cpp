#include <doctest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "twoscale/errors.hpp"
#include "twoscale/functionals.hpp"
#include "twoscale/harness.hpp"

using namespace twoscale;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny() {
    ExperimentConfig c;
    c.name = "tiny";
    c.potentials = {"gaussian", "cos:0.2:1"};
    c.ladder = {{16, 4}, {32, 8}};
    c.gibbs_pairs = {{16, 2}};
    c.T = 0.1;
    c.output_every = 0.01;
    c.epsilon = 0.03;
    c.entropy_times = {0.05};
    c.replicas = 24;
    c.burn_in_sweeps = 20;
    c.audit_replicas = 16;
    c.audit_burn_in = 20;
    c.kappa_probes = 2;
    c.gibbs_samples = 400;
    c.gibbs_chains = 4;
    c.gibbs_time_samples = 80;
    c.gibbs_time_nodes = 3;
    c.hydro_cells = 64;
    c.table = {-4.0, 4.0, 321};
    c.fp_nodes = 401;
    c.fp_T = 0.05;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::map<std::string, std::string> csv_files(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& f : fs::recursive_directory_iterator(root))
        if (f.is_regular_file() && f.path().extension() == ".csv") out[fs::relative(f.path(), root).string()] = slurp(f.path());
    return out;
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("twoscale_harness_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("config: INI round trip and validation") {
    auto c = tiny();
    c.seed = 987654321012345ULL;
    std::istringstream in(c.to_ini());
    const auto d = parse_config(in);
    CHECK(d.to_ini() == c.to_ini());
    CHECK(d.seed == c.seed);
    REQUIRE(d.ladder.size() == 2);
    CHECK(d.ladder[1].N == 32);
    CHECK(d.ladder[1].M == 8);
    CHECK(d.potentials == c.potentials);

    std::istringstream lists("[model]\npotentials = gaussian , cos:0.1\n[ladder]\nN = 8, 16\nM = 2, 4\n[tables]\nhydro_cells = 64\n");
    const auto e = parse_config(lists);
    CHECK(e.potentials == std::vector<std::string>{"gaussian", "cos:0.1"});
    CHECK(e.ladder[0].K() == 4);

    std::istringstream unknown("[time]\nhorizon = 1\n");
    CHECK_THROWS_AS(parse_config(unknown), DomainError);
    std::istringstream bad_ladder("[ladder]\nN = 10\nM = 4\n");
    CHECK_THROWS_AS(parse_config(bad_ladder), DomainError);
    std::istringstream bad_T("[time]\nT = -1\n");
    CHECK_THROWS_AS(parse_config(bad_T), DomainError);
    std::istringstream bad_R("[micro]\nreplicas = 0\n");
    CHECK_THROWS_AS(parse_config(bad_R), DomainError);
    std::istringstream lengths("[ladder]\nN = 16, 32\nM = 4\n");
    CHECK_THROWS_AS(parse_config(lengths), DomainError);
    std::istringstream nonnum("[model]\nm = zero\n");
    CHECK_THROWS_AS(parse_config(nonnum), DomainError);
    CHECK_THROWS_AS(load_config("/nonexistent/twoscale.ini"), DomainError);
}

TEST_CASE("ledger: identity, staleness and uniform constants") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);

    Ledger L;
    for (int i = 0; i < 3; ++i) {
        LedgerEntry e;
        e.group = "ladder";
        e.potential = "gaussian";
        e.N = 16 << i;
        e.M = 4 << i;
        e.c.rho = 1.0 - 0.1 * i;
        e.c.lambda = 1.0 + 0.1 * i;
        e.c.Lambda = 1.0 + 0.2 * i;
        e.c.tau = 39.0 + i;
        e.c.kappa = 0.1 * i;
        e.c.alpha = 1.0;
        e.c.gamma = 0.1 - 0.01 * i;
        e.c.C1 = 0.2 * i;
        e.c.C2 = 0.3;
        L.entries.push_back(e);
    }
    CHECK_THROWS_AS(L.verify(), ConsistencyError);
    L.seal();
    CHECK_NOTHROW(L.verify());
    CHECK(L.id_hex().size() == 16);
    const auto u = L.uniform("ladder", "gaussian");
    CHECK(u.rho == doctest::Approx(0.8));
    CHECK(u.lambda == doctest::Approx(1.0));
    CHECK(u.Lambda == doctest::Approx(1.4));
    CHECK(u.tau == doctest::Approx(39.0));
    CHECK(u.kappa == doctest::Approx(0.2));
    CHECK(u.gamma == doctest::Approx(0.1));
    CHECK(u.C1 == doctest::Approx(0.4));
    CHECK(L.at("ladder", "gaussian", 32, 8).c.tau == 40.0);
    CHECK_THROWS_AS(L.at("pairs", "gaussian", 32, 8), DomainError);
    CHECK_THROWS_AS(L.uniform("pairs", "gaussian"), DomainError);
    L.entries[1].c.C2 = 0.31;
    CHECK_THROWS_AS(L.verify(), ConsistencyError);
}

TEST_CASE("gamma: power iteration against the dense generalized eigenproblem") {
    for (auto [N, M] : {std::pair{32, 4}, std::pair{24, 3}, std::pair{16, 16}}) {
        const int K = N / M;
        const Eigen::MatrixXd A = kawasaki_matrix(N);
        Eigen::MatrixXd LP = Eigen::MatrixXd::Zero(N, N);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                if (i / K == j / K) LP(i, j) = 1.0 / K;
        const Eigen::MatrixXd perp = Eigen::MatrixXd::Identity(N, N) - LP;
        const Eigen::MatrixXd B = double(M) * M * perp.transpose() * perp;
        // orthonormal basis of the mean-zero subspace
        const Eigen::MatrixXd C = Eigen::MatrixXd::Identity(N, N) - Eigen::MatrixXd::Constant(N, N, 1.0 / N);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> cs(C);
        const Eigen::MatrixXd Q = cs.eigenvectors().rightCols(N - 1);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> gs(Q.transpose() * B * Q, Q.transpose() * A * Q);
        const double top = gs.eigenvalues().maxCoeff();
        CHECK(estimate_gamma(N, M, 4, 7) == doctest::Approx(top).epsilon(1e-6));
    }
    // stable across a ladder
    const double g1 = estimate_gamma(64, 8, 2, 1), g2 = estimate_gamma(256, 16, 2, 1);
    CHECK(g2 == doctest::Approx(g1).epsilon(0.1));
    CHECK_THROWS_AS(estimate_gamma(10, 4, 1, 1), DomainError);
}

TEST_CASE("report: empty run list and single table") {
    const auto dir = scratch("report");
    ExperimentConfig cfg = tiny();
    Ledger L;
    L.entries.push_back(LedgerEntry{"ladder", "gaussian", 16, 4, {}, false, 0.0, 0.0});
    L.seal();

    emit_report({}, L, cfg, dir.string());
    {
        std::istringstream in(slurp(dir / "summary.txt"));
        std::string line;
        int n = 0;
        while (std::getline(in, line)) ++n;
        CHECK(n == 2);  // header and ledger line
    }

    ExperimentResult r;
    r.experiment = "demo";
    r.ledger_id = L.id_hex();
    r.tables.push_back(Table{"values", {"t", "x"}, {{0.0, 0.1}, {1.0, 1.0 / 3}}});
    r.checks.push_back(Check{"one", true, "ok"});
    emit_report({r}, L, cfg, dir.string());
    CHECK(slurp(dir / "demo" / "values.csv") == "t,x\n0,0.10000000000000001\n1,0.33333333333333331\n");
    CHECK(slurp(dir / "demo" / "ledger.csv") == L.text());
    CHECK(slurp(dir / "demo" / "config.ini") == cfg.to_ini());
    const auto sum = slurp(dir / "demo" / "summary.txt");
    CHECK(sum.find("demo one PASS ok") != std::string::npos);
    CHECK(sum.find(L.id_hex()) != std::string::npos);

    auto stale = r;
    stale.ledger_id = "0000000000000000";
    CHECK_THROWS_AS(emit_report({stale}, L, cfg, dir.string()), ConsistencyError);
    Ledger changed = L;
    changed.entries[0].N = 32;
    CHECK_THROWS_AS(emit_report({r}, changed, cfg, dir.string()), ConsistencyError);
    fs::remove_all(dir);
}

TEST_CASE("audit failure reports the smallest passing block size") {
    ExperimentConfig cfg = tiny();
    cfg.potentials = {"cos:1.5:1"};
    cfg.ladder = {{16, 16}};
    cfg.gibbs_pairs = {{16, 16}};
    cfg.table = {-4.0, 4.0, 161};
    Harness h(cfg);
    try {
        h.ledger();
        FAIL("expected an audit failure");
    } catch (const PreconditionError& e) {
        CHECK(std::string(e.what()).find("smallest passing K") != std::string::npos);
    }
}

TEST_CASE("tiny end-to-end run: checks, ledger cross-reference, determinism across threads") {
    const auto d1 = scratch("t1"), d3 = scratch("t3");
    std::vector<ExperimentResult> r1;
    {
        auto cfg = tiny();
        cfg.threads = 1;
        Harness h(cfg);
        r1 = h.run("all");
        emit_report(r1, h.ledger(), cfg, d1.string());
        for (const auto& r : r1) CHECK(r.ledger_id == h.ledger().id_hex());
    }
    {
        auto cfg = tiny();
        cfg.threads = 3;
        Harness h(cfg);
        const auto r3 = h.run("all");
        emit_report(r3, h.ledger(), cfg, d3.string());
    }
    REQUIRE(r1.size() == 7);
    const auto a = csv_files(d1), b = csv_files(d3);
    CHECK(a.size() > 20);
    CHECK(a == b);

    const auto& micro = r1[4];
    CHECK(micro.experiment == "micro");
    CHECK(micro.check("theta_below_xi[gaussian]").pass);
    CHECK(micro.check("h1_trend_oracle[gaussian]").pass);
    const auto& ent = r1[6];
    CHECK(ent.check("entropy_monotone[gaussian]").pass);
    CHECK(ent.check("fp_mass[cos:0.2:1]").pass);
    const auto& tr = ent.table("entropy_trend_gaussian");
    CHECK(tr.rows.size() == 2);
    CHECK_THROWS_AS(ent.table("missing"), DomainError);

    // the CSV dialect: header row, comma separated, LF endings, no CR
    for (const auto& [name, text] : a) {
        CHECK(text.find('\r') == std::string::npos);
        CHECK(text.back() == '\n');
    }
    fs::remove_all(d1);
    fs::remove_all(d3);
}

TEST_CASE("zero profile: oracle distances sit at the fluctuation floor") {
    auto cfg = tiny();
    cfg.potentials = {"gaussian"};
    cfg.amplitude = 0.0;
    Harness h(cfg);
    const auto r = h.run_hydrodynamic_limit();
    const auto& t = r.table("hydro_limit_gaussian");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const int N = static_cast<int>(t.get(i, "N"));
        double floor = 0;
        for (int k = 1; k < N; ++k) {
            const double sn = std::sin(M_PI * k / N), cs = std::cos(M_PI * k / N);
            floor += (2 * cs * cs + 1) / (12.0 * N * N * N * sn * sn);
        }
        CHECK(t.get(i, "h1") == doctest::Approx(floor).epsilon(1e-10));
    }
}
