#include "twoscale/harness.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "twoscale/coarse_grain.hpp"
#include "twoscale/ensemble.hpp"
#include "twoscale/errors.hpp"
#include "twoscale/fokker_planck.hpp"
#include "twoscale/grid_density.hpp"
#include "twoscale/kawasaki.hpp"
#include "twoscale/parallel.hpp"
#include "twoscale/potential.hpp"
#include "twoscale/projection.hpp"
#include "twoscale/stats.hpp"
#include "twoscale/transforms.hpp"

namespace twoscale {

using std::numbers::pi;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw DomainError("config: " + key + " = '" + v + "' is not a number");
    }
}

long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw DomainError("config: " + key + " = '" + v + "' is not an integer");
    }
}

std::vector<LadderEntry> parse_ladder(const std::string& ns, const std::string& ms, const std::string& what) {
    const auto n = split_list(ns), m = split_list(ms);
    if (n.size() != m.size()) throw DomainError("config: " + what + " N and M lists differ in length");
    std::vector<LadderEntry> out;
    for (std::size_t i = 0; i < n.size(); ++i)
        out.push_back({static_cast<int>(to_int(what + ".N", n[i])), static_cast<int>(to_int(what + ".M", m[i]))});
    return out;
}

std::string join_ints(const std::vector<LadderEntry>& l, bool n) {
    std::string s;
    for (std::size_t i = 0; i < l.size(); ++i) s += (i ? ", " : "") + std::to_string(n ? l[i].N : l[i].M);
    return s;
}

std::uint64_t mix_seed(std::uint64_t seed, const std::string& tag, int N, int M, std::uint64_t purpose) {
    std::uint64_t s = splitmix64(seed ^ splitmix64(fnv1a64(tag)));
    s = splitmix64(s ^ (static_cast<std::uint64_t>(N) << 32 | static_cast<std::uint64_t>(M)));
    return splitmix64(s ^ purpose);
}

std::vector<double> cell_profile(int n, double m, double a) {
    return HydroField::from_function(n, [=](double th) { return m + a * std::sin(2 * pi * th); }).values;
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
    double s = 0;
    for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (f[i] + f[i - 1]) * (t[i] - t[i - 1]);
    return s;
}

Check make_check(std::string name, bool pass, std::string detail) {
    return Check{std::move(name), pass, std::move(detail)};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string file_tag(const std::string& potential) {
    std::string s;
    for (char c : potential) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') ? c : '_';
    return s;
}

// ---------------------------------------------------------------- config

int ExperimentConfig::n_outputs() const { return static_cast<int>(std::llround(T / output_every)); }

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& m) { throw DomainError("config: " + m); };
    if (!(T > 0)) fail("T must be positive");
    if (!(output_every > 0)) fail("output_every must be positive");
    if (std::abs(n_outputs() * output_every - T) > 1e-9 * T) fail("T must be a multiple of output_every");
    if (replicas < 1) fail("replicas must be >= 1");
    if (threads < 1) fail("threads must be >= 1");
    if (potentials.empty()) fail("no potentials");
    for (const auto& p : potentials) Potential::from_tag(p);
    if (ladder.empty()) fail("empty ladder");
    for (const auto* l : {&ladder, &gibbs_pairs})
        for (const auto& e : *l) {
            if (e.M < 1 || e.N < 2 || e.N % e.M != 0)
                fail("ladder entry (N=" + std::to_string(e.N) + ", M=" + std::to_string(e.M) + ") needs N mod M = 0");
        }
    for (const auto& e : ladder)
        if (hydro_cells % e.N != 0) fail("hydro_cells must be a multiple of every ladder N");
    if (hydro_cells < 3) fail("hydro_cells too small");
    if (!(table.hi > table.lo) || table.n < 11) fail("bad table grid");
    if (!(table.lo < m - std::abs(amplitude) && m + std::abs(amplitude) < table.hi)) fail("profile leaves the table");
    auto on_grid = [&](double t) {
        const double k = t / output_every;
        return std::abs(k - std::round(k)) < 1e-9 && t <= T + 1e-12 && t >= 0;
    };
    if (!(epsilon > 0) || !on_grid(epsilon)) fail("epsilon must be a positive multiple of output_every");
    for (double t : entropy_times)
        if (!on_grid(t) || t < epsilon || t + epsilon > T + 1e-12)
            fail("entropy time " + fmt_short(t) + " must lie on the output grid inside [epsilon, T - epsilon]");
    if (gibbs_samples < 2 || gibbs_chains < 2 || gibbs_time_samples < 2) fail("gibbs sample counts too small");
    if (gibbs_time_nodes < 2) fail("gibbs_time_nodes must be >= 2");
    if (fp_nodes < 11 || !(fp_half_width > 0) || !(fp_T > 0) || !(fp_var0 > 0)) fail("bad Fokker-Planck settings");
    if (!(dt_micro > 0)) fail("dt_micro must be positive");
    if (dt_macro < 0 || dt_hydro < 0) fail("dt overrides must be >= 0");
}

std::string ExperimentConfig::to_ini() const {
    std::ostringstream os;
    auto list = [](const std::vector<std::string>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
        return s;
    };
    std::vector<std::string> times;
    for (double t : entropy_times) times.push_back(fmt(t));
    os << "[experiment]\nname = " << name << "\nseed = " << seed << "\nout = " << out << "\nthreads = " << threads
       << "\n\n[model]\npotentials = " << list(potentials) << "\nm = " << fmt(m) << "\n\n[ladder]\nN = "
       << join_ints(ladder, true) << "\nM = " << join_ints(ladder, false) << "\ngibbs_N = " << join_ints(gibbs_pairs, true)
       << "\ngibbs_M = " << join_ints(gibbs_pairs, false) << "\n\n[time]\nT = " << fmt(T)
       << "\noutput_every = " << fmt(output_every) << "\ndt_micro = " << fmt(dt_micro) << "\ndt_macro = " << fmt(dt_macro)
       << "\ndt_hydro = " << fmt(dt_hydro) << "\n\n[initial]\namplitude = " << fmt(amplitude)
       << "\nentropy_amplitude = " << fmt(entropy_amplitude) << "\ngibbs_amplitude = " << fmt(gibbs_amplitude)
       << "\n\n[micro]\nreplicas = " << replicas << "\nburn_in_sweeps = " << burn_in_sweeps
       << "\n\n[audit]\nreplicas = " << audit_replicas << "\nburn_in_sweeps = " << audit_burn_in
       << "\nkappa_probes = " << kappa_probes << "\n\n[entropy]\nepsilon = " << fmt(epsilon)
       << "\ntimes = " << list(times) << "\n\n[gibbs]\nsamples = " << gibbs_samples << "\nchains = " << gibbs_chains
       << "\ntime_samples = " << gibbs_time_samples << "\ntime_nodes = " << gibbs_time_nodes
       << "\n\n[tables]\nlo = " << fmt(table.lo) << "\nhi = " << fmt(table.hi) << "\nn = " << table.n
       << "\nhydro_cells = " << hydro_cells << "\n\n[fp]\nnodes = " << fp_nodes << "\nhalf_width = " << fmt(fp_half_width)
       << "\nT = " << fmt(fp_T) << "\nu0 = " << fmt(fp_u0) << "\nvar0 = " << fmt(fp_var0) << "\n";
    return os.str();
}

ExperimentConfig parse_config(std::istream& is) {
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::ini_parser::read_ini(is, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw DomainError(std::string("config: ") + e.what());
    }
    ExperimentConfig c;
    std::string ln, lm, gn, gm;
    for (const auto& [section, body] : pt) {
        if (body.empty() && !body.data().empty()) throw DomainError("config: key '" + section + "' outside a section");
        for (const auto& [key, node] : body) {
            const std::string k = section + "." + key;
            const std::string v = trim(node.data());
            auto d = [&] { return to_double(k, v); };
            auto i = [&] { return static_cast<int>(to_int(k, v)); };
            if (k == "experiment.name") c.name = v;
            else if (k == "experiment.seed") {
                try {
                    std::size_t pos = 0;
                    c.seed = std::stoull(v, &pos, 0);
                    if (pos != v.size()) throw std::invalid_argument(v);
                } catch (const std::exception&) {
                    throw DomainError("config: " + k + " = '" + v + "' is not an unsigned integer");
                }
            } else if (k == "experiment.out") c.out = v;
            else if (k == "experiment.threads") c.threads = i();
            else if (k == "model.potentials") c.potentials = split_list(v);
            else if (k == "model.m") c.m = d();
            else if (k == "ladder.N") ln = v;
            else if (k == "ladder.M") lm = v;
            else if (k == "ladder.gibbs_N") gn = v;
            else if (k == "ladder.gibbs_M") gm = v;
            else if (k == "time.T") c.T = d();
            else if (k == "time.output_every") c.output_every = d();
            else if (k == "time.dt_micro") c.dt_micro = d();
            else if (k == "time.dt_macro") c.dt_macro = d();
            else if (k == "time.dt_hydro") c.dt_hydro = d();
            else if (k == "initial.amplitude") c.amplitude = d();
            else if (k == "initial.entropy_amplitude") c.entropy_amplitude = d();
            else if (k == "initial.gibbs_amplitude") c.gibbs_amplitude = d();
            else if (k == "micro.replicas") c.replicas = i();
            else if (k == "micro.burn_in_sweeps") c.burn_in_sweeps = i();
            else if (k == "audit.replicas") c.audit_replicas = i();
            else if (k == "audit.burn_in_sweeps") c.audit_burn_in = i();
            else if (k == "audit.kappa_probes") c.kappa_probes = i();
            else if (k == "entropy.epsilon") c.epsilon = d();
            else if (k == "entropy.times") {
                c.entropy_times.clear();
                for (const auto& s : split_list(v)) c.entropy_times.push_back(to_double(k, s));
            } else if (k == "gibbs.samples") c.gibbs_samples = i();
            else if (k == "gibbs.chains") c.gibbs_chains = i();
            else if (k == "gibbs.time_samples") c.gibbs_time_samples = i();
            else if (k == "gibbs.time_nodes") c.gibbs_time_nodes = i();
            else if (k == "tables.lo") c.table.lo = d();
            else if (k == "tables.hi") c.table.hi = d();
            else if (k == "tables.n") c.table.n = i();
            else if (k == "tables.hydro_cells") c.hydro_cells = i();
            else if (k == "fp.nodes") c.fp_nodes = i();
            else if (k == "fp.half_width") c.fp_half_width = d();
            else if (k == "fp.T") c.fp_T = d();
            else if (k == "fp.u0") c.fp_u0 = d();
            else if (k == "fp.var0") c.fp_var0 = d();
            else throw DomainError("config: unknown key " + k);
        }
    }
    if (!ln.empty() || !lm.empty()) c.ladder = parse_ladder(ln, lm, "ladder");
    if (!gn.empty() || !gm.empty()) c.gibbs_pairs = parse_ladder(gn, gm, "gibbs");
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("config: cannot open " + path);
    return parse_config(in);
}

// ---------------------------------------------------------------- ledger

std::string Ledger::text() const {
    std::ostringstream os;
    os << "group,potential,N,M,K,rho,rho_assumed,lambda,Lambda,kappa,tau,alpha,alpha_se,beta,gamma,C1,C2,xi0\n";
    for (const auto& e : entries) {
        os << e.group << ',' << e.potential << ',' << e.N << ',' << e.M << ',' << e.N / e.M << ',' << fmt(e.c.rho) << ','
           << (e.rho_assumed ? 1 : 0) << ',' << fmt(e.c.lambda) << ',' << fmt(e.c.Lambda) << ',' << fmt(e.c.kappa) << ','
           << fmt(e.c.tau) << ',' << fmt(e.c.alpha) << ',' << fmt(e.alpha_se) << ',' << fmt(e.c.beta) << ','
           << fmt(e.c.gamma) << ',' << fmt(e.c.C1) << ',' << fmt(e.c.C2) << ',' << fmt(e.xi0) << '\n';
    }
    return os.str();
}

void Ledger::seal() { id = fnv1a64(text()); }

void Ledger::verify() const {
    if (id == 0 || fnv1a64(text()) != id) throw ConsistencyError("stale ledger: content does not match id " + id_hex());
}

std::string Ledger::id_hex() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(id));
    return buf;
}

const LedgerEntry& Ledger::at(const std::string& group, const std::string& potential, int N, int M) const {
    for (const auto& e : entries)
        if (e.group == group && e.potential == potential && e.N == N && e.M == M) return e;
    throw DomainError("ledger: no entry for " + group + "/" + potential + " N=" + std::to_string(N) +
                      " M=" + std::to_string(M));
}

ConstantsLedger Ledger::uniform(const std::string& group, const std::string& potential) const {
    ConstantsLedger u;
    bool first = true;
    for (const auto& e : entries) {
        if (e.group != group || e.potential != potential) continue;
        if (first) {
            u = e.c;
            first = false;
            continue;
        }
        u.rho = std::min(u.rho, e.c.rho);
        u.lambda = std::min(u.lambda, e.c.lambda);
        u.tau = std::min(u.tau, e.c.tau);
        u.Lambda = std::max(u.Lambda, e.c.Lambda);
        u.kappa = std::max(u.kappa, e.c.kappa);
        u.alpha = std::max(u.alpha, e.c.alpha);
        u.beta = std::max(u.beta, e.c.beta);
        u.gamma = std::max(u.gamma, e.c.gamma);
        u.C1 = std::max(u.C1, e.c.C1);
        u.C2 = std::max(u.C2, e.c.C2);
    }
    if (first) throw DomainError("ledger: no entries for " + group + "/" + potential);
    return u;
}

// ---------------------------------------------------------------- tables and results

int Table::col(const std::string& c) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == c) return static_cast<int>(i);
    throw DomainError("table " + name + ": no column " + c);
}

void Table::write_csv(std::ostream& os) const {
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    char buf[64];
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            std::snprintf(buf, sizeof buf, i ? ",%.17g" : "%.17g", r[i]);
            os << buf;
        }
        os << '\n';
    }
}

bool ExperimentResult::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Table& ExperimentResult::table(const std::string& name) const {
    for (const auto& t : tables)
        if (t.name == name) return t;
    throw DomainError(experiment + ": no table " + name);
}

double ExperimentResult::timing(const std::string& section) const {
    for (const auto& [k, v] : timings)
        if (k == section) return v;
    throw DomainError(experiment + ": no timing " + section);
}

const Check& ExperimentResult::check(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw DomainError(experiment + ": no check " + name);
}

// ---------------------------------------------------------------- gamma

double estimate_gamma(int N, int M, int n_probes, std::uint64_t seed, int iterations) {
    if (M < 1 || N % M != 0) throw DomainError("estimate_gamma: N must be a multiple of M");
    const KawasakiOperator op(N);
    const Projection P(N, M);
    const double M2 = double(M) * M;
    auto perp = [&](const std::vector<double>& v) {
        auto w = P.lift(P.project(v));
        for (int i = 0; i < N; ++i) w[i] = v[i] - w[i];
        return w;
    };
    auto quotient = [&](const std::vector<double>& v) {
        const auto w = perp(v);
        const auto av = op.apply(v);
        double num = 0, den = 0;
        for (int i = 0; i < N; ++i) num += w[i] * w[i], den += v[i] * av[i];
        return den > 0 ? M2 * num / den : 0.0;
    };
    std::vector<std::vector<double>> starts;
    std::set<int> modes;
    for (int k = 1; k <= std::min(N / 2, 6); ++k) modes.insert(k);
    if (M <= N / 2) modes.insert(M);
    for (int k : modes) {
        std::vector<double> v(N);
        for (int i = 0; i < N; ++i) v[i] = std::cos(2 * pi * k * (i + 0.5) / N);
        starts.push_back(std::move(v));
    }
    auto rng = make_stream(seed, 0, 0x67616d6d61ULL);
    std::normal_distribution<double> gauss;
    for (int q = 0; q < n_probes; ++q) {
        std::vector<double> v(N);
        double s = 0;
        for (auto& x : v) s += (x = gauss(rng));
        for (auto& x : v) x -= s / N;
        starts.push_back(std::move(v));
    }
    double best = 0;
    for (auto v : starts) {
        best = std::max(best, quotient(v));
        for (int it = 0; it < iterations; ++it) {
            auto w = perp(v);
            double nw = 0;
            for (double x : w) nw += x * x;
            if (nw < 1e-300) break;
            v = op.apply_inverse(w);
            double nv = 0;
            for (double x : v) nv += x * x;
            nv = std::sqrt(nv);
            for (auto& x : v) x /= nv;
            best = std::max(best, quotient(v));
        }
    }
    return best;
}

// ---------------------------------------------------------------- harness state

namespace {

struct MacroRun {
    CoarseHamiltonian h;
    MacroOperator abar;
    MacroTrajectory full;
    MacroTrajectory grid;  // frames on the output grid
    Dissipation diss;
};

std::string entry_name(const std::string& tag, int N, int M) {
    return tag + " N=" + std::to_string(N) + " M=" + std::to_string(M);
}

}  // namespace

struct Harness::Cache {
    std::map<std::string, Potential> pots;
    std::map<std::string, TabulatedFunction> phi;
    std::map<std::string, std::map<int, TabulatedFunction>> psiK;
    std::map<std::pair<std::string, double>, HydroTrajectory> hydro;
    std::map<std::tuple<std::string, int, int, double>, MacroRun> macro;
    std::unique_ptr<Ledger> ledger;
    ExperimentResult audit;

    std::map<std::string, double> build_seconds;
    std::set<std::string>* used = nullptr;
    double building = 0.0;  // build time accumulated since construction

    // build through f, recording its own cost (nested builds excluded)
    template <class F>
    auto track(const std::string& key, bool fresh, F&& f) -> decltype(f()) {
        if (used) used->insert(key);
        if (!fresh) {
            build_seconds.try_emplace(key, 0.0);  // built as part of another artifact
            return f();
        }
        const auto t0 = std::chrono::steady_clock::now();
        const double b0 = building;
        auto&& r = f();
        const double own = seconds_since(t0) - (building - b0);
        build_seconds[key] = own;
        building += own;
        return r;
    }
};

namespace {

class SectionTimer {
public:
    explicit SectionTimer(Harness::Cache& c) : c_(c), prev_(c.used), b0_(c.building), t0_(std::chrono::steady_clock::now()) {
        c_.used = &used_;
    }
    ~SectionTimer() {
        c_.used = prev_;
        if (prev_) prev_->insert(used_.begin(), used_.end());
    }
    double seconds() const {
        double s = seconds_since(t0_) - (c_.building - b0_);
        for (const auto& k : used_) s += c_.build_seconds.at(k);
        return s;
    }

private:
    Harness::Cache& c_;
    std::set<std::string>* prev_;
    std::set<std::string> used_;
    double b0_;
    std::chrono::steady_clock::time_point t0_;
};

}  // namespace

Harness::Harness(ExperimentConfig cfg) : cfg_(std::move(cfg)), cache_(std::make_unique<Cache>()) { cfg_.validate(); }

Harness::~Harness() = default;

namespace {

const Potential& potential_of(std::map<std::string, Potential>& pots, const std::string& tag) {
    auto it = pots.find(tag);
    if (it == pots.end()) it = pots.emplace(tag, Potential::from_tag(tag)).first;
    return it->second;
}

}  // namespace

namespace {

std::set<int> configured_ks(const ExperimentConfig& cfg) {
    std::set<int> ks;
    for (const auto& e : cfg.ladder) ks.insert(e.K());
    for (const auto& e : cfg.gibbs_pairs) ks.insert(e.K());
    return ks;
}

}  // namespace

namespace detail {

struct Access {
    static const TabulatedFunction& phi(Harness::Cache& c, const ExperimentConfig& cfg, const std::string& tag) {
        auto it = c.phi.find(tag);
        return c.track("phi:" + tag, it == c.phi.end(), [&]() -> const TabulatedFunction& {
            if (it == c.phi.end()) it = c.phi.emplace(tag, cramer_transform(potential_of(c.pots, tag), cfg.table)).first;
            return it->second;
        });
    }

    static const TabulatedFunction& psiK(Harness::Cache& c, const ExperimentConfig& cfg, const std::string& tag, int K) {
        auto& m = c.psiK[tag];
        c.track("psiK:" + tag, m.empty(), [&] {
            if (m.empty()) {
                const auto ks = configured_ks(cfg);
                m = coarse_potential_ladder(potential_of(c.pots, tag), std::vector<int>(ks.begin(), ks.end()), cfg.table,
                                            {}, cfg.threads);
            }
            return 0;
        });
        return c.track("psiK:" + tag + ":" + std::to_string(K), !m.count(K), [&]() -> const TabulatedFunction& {
            auto it = m.find(K);
            if (it == m.end())
                it = m.emplace(K, coarse_potential(potential_of(c.pots, tag), K, cfg.table, {}, cfg.threads)).first;
            return it->second;
        });
    }

    static const HydroTrajectory& hydro(Harness::Cache& c, const ExperimentConfig& cfg, const std::string& tag, double a) {
        const auto key = std::make_pair(tag, a);
        auto it = c.hydro.find(key);
        return c.track("hydro:" + tag + ":" + fmt(a), it == c.hydro.end(), [&]() -> const HydroTrajectory& {
            if (it == c.hydro.end()) {
                const auto z0 = HydroField::from_values(cell_profile(cfg.hydro_cells, cfg.m, a));
                const auto& f = phi(c, cfg, tag);
                it = c.hydro.emplace(key, solve_hydro(z0, f, cfg.T, cfg.dt_hydro, cfg.output_every)).first;
            }
            return it->second;
        });
    }

    static const MacroRun& macro(Harness::Cache& c, const ExperimentConfig& cfg, const std::string& tag, int N, int M,
                                 double a) {
        const auto key = std::make_tuple(tag, N, M, a);
        auto it = c.macro.find(key);
        return c.track("macro:" + tag + ":" + std::to_string(N) + ":" + std::to_string(M) + ":" + fmt(a),
                       it == c.macro.end(), [&]() -> const MacroRun& {
            if (it != c.macro.end()) return it->second;
            return build_macro(c, cfg, tag, N, M, a);
        });
    }

    static const MacroRun& build_macro(Harness::Cache& c, const ExperimentConfig& cfg, const std::string& tag, int N,
                                       int M, double a) {
        const auto key = std::make_tuple(tag, N, M, a);
        MacroRun r;
        r.h = build_coarse_hamiltonian(psiK(c, cfg, tag, N / M), N, M);
        const Projection P(N, M);
        const KawasakiOperator op(N);
        r.abar = build_macro_operator(P, op);
        const auto eta0 = MacroProfile::from_values(P.project(cell_profile(N, cfg.m, a)));
        const int n_out = cfg.n_outputs();
        if (M == 1) {
            r.full.dt = cfg.T;
            for (int o = 0; o <= n_out; ++o) {
                r.full.times.push_back(o * cfg.output_every);
                r.full.states.push_back(eta0);
                r.full.energies.push_back(hbar_potential(r.h, eta0.values));
            }
            r.grid = r.full;
        } else {
            const double target = cfg.dt_macro > 0 ? cfg.dt_macro : macro_dt_bound(r.abar, r.h);
            const long long n_sub = std::max(1LL, static_cast<long long>(std::ceil(cfg.output_every / target * (1 - 1e-12))));
            const double dt = cfg.output_every / n_sub;
            r.full = solve_macro_ode(eta0, r.abar, r.h, cfg.T, dt, 1);
            if (static_cast<long long>(r.full.times.size()) != n_out * n_sub + 1)
                throw ConsistencyError("macro ODE: step count does not match the output grid");
            r.grid.dt = r.full.dt;
            for (int o = 0; o <= n_out; ++o) {
                const std::size_t f = static_cast<std::size_t>(o * n_sub);
                r.grid.times.push_back(o * cfg.output_every);
                r.grid.states.push_back(r.full.states[f]);
                r.grid.energies.push_back(r.full.energies[f]);
            }
        }
        r.diss = dissipation_integral(r.full, r.abar, r.h);
        return c.macro.emplace(key, std::move(r)).first->second;
    }
};

}  // namespace detail

namespace {

using detail::Access;

// per-entry audit of the constants
LedgerEntry audit_entry(Harness::Cache& c, const ExperimentConfig& cfg, const std::string& group, const std::string& tag,
                        const LadderEntry& le) {
    const Potential& p = potential_of(c.pots, tag);
    const int N = le.N, M = le.M, K = le.K();
    LedgerEntry e;
    e.group = group;
    e.potential = tag;
    e.N = N;
    e.M = M;

    CoarseHamiltonian h;
    try {
        h = build_coarse_hamiltonian(Access::psiK(c, cfg, tag, K), N, M);
    } catch (const PreconditionError&) {
        int pass = 0;
        for (int k = 1; k <= 1024; k *= 2)
            if (convexity_bounds(Access::psiK(c, cfg, tag, k)).lambda > 0) {
                pass = k;
                break;
            }
        std::ostringstream os;
        os << "audit: psi_K is not convex at K = " << K << " for " << tag << "; smallest passing K = ";
        if (pass) os << pass;
        else os << "none up to 1024";
        throw PreconditionError(os.str());
    }
    const KawasakiOperator op(N);
    e.c.lambda = h.lambda;
    e.c.Lambda = h.Lambda;
    e.c.tau = op.tau();
    e.c.kappa = estimate_kappa(p, N, K, cfg.kappa_probes, mix_seed(cfg.seed, tag, N, M, 1));
    if (p.is_gaussian()) {
        e.c.rho = 1.0;
    } else {
        e.c.rho = std::exp(-p.osc);
        e.rho_assumed = true;
    }

    SamplerOptions so;
    so.proposal = 1.0;
    so.burn_in_sweeps = cfg.audit_burn_in;
    so.threads = cfg.threads;
    so.start_spread = 1.0 / std::sqrt(mean_curvature(p, cfg.m));
    const auto eq = sample_equilibrium(p, N, cfg.m, cfg.audit_replicas, mix_seed(cfg.seed, tag, N, M, 2), so);
    std::vector<double> sm(eq.ensemble.replicas);
    for (int r = 0; r < eq.ensemble.replicas; ++r) {
        const double* x = eq.ensemble.row(r);
        double s = 0;
        for (int i = 0; i < N; ++i) s += x[i] * x[i];
        sm[r] = s / N;
    }
    const auto alpha = mc_mean(sm);
    e.c.alpha = alpha.value;
    e.alpha_se = alpha.stderr_;

    e.c.gamma = estimate_gamma(N, M, 4, mix_seed(cfg.seed, tag, N, M, 3));

    const Projection P(N, M);
    const auto site = cell_profile(N, cfg.m, cfg.amplitude);
    const auto eta0 = MacroProfile::from_values(P.project(site));
    const auto lp = log_partition_bar(h, cfg.m);
    e.c.C2 = hbar_potential(h, eta0.values) + lp.upper;
    e.c.beta = std::max(0.0, -(h.psiK.value(cfg.m) + lp.lower));
    if (p.is_gaussian()) {
        e.c.C1 = CirculantGaussian::equilibrium_fluctuations(site).relative_entropy() / N;
    } else {
        const auto gap = gibbs_free_energy_gap(h, eta0);
        e.c.C1 = e.c.C2 + e.c.beta + gap.bound;
    }
    return e;
}

// per-replica reduction with a fixed summation order
template <class F>
McEstimate replica_mean(int R, int threads, F&& f) {
    std::vector<double> v(R);
    parallel_for(R, threads, [&](int b, int e, int) {
        for (int r = b; r < e; ++r) v[r] = f(r);
    });
    return mc_mean(v);
}

std::vector<std::string> col_names(std::initializer_list<const char*> l) { return {l.begin(), l.end()}; }

}  // namespace

const Ledger& Harness::ledger() {
    if (cache_->ledger) return *cache_->ledger;
    const auto t0 = std::chrono::steady_clock::now();
    auto L = std::make_unique<Ledger>();
    for (const auto& tag : cfg_.potentials) {
        for (const auto& e : cfg_.ladder) L->entries.push_back(audit_entry(*cache_, cfg_, "ladder", tag, e));
        for (const auto& e : cfg_.gibbs_pairs) L->entries.push_back(audit_entry(*cache_, cfg_, "pairs", tag, e));
    }
    for (auto& e : L->entries) e.xi0 = xi_bound(cfg_.T, e.M, e.N, L->uniform(e.group, e.potential), 0.0);
    L->seal();

    ExperimentResult res;
    res.experiment = "audit";
    res.ledger_id = L->id_hex();
    for (const auto& tag : cfg_.potentials) {
        for (const std::string group : {"ladder", "pairs"}) {
            Table t;
            t.name = "constants_" + group + "_" + file_tag(tag);
            t.header = col_names({"N", "M", "K", "rho", "lambda", "Lambda", "kappa", "tau", "alpha", "alpha_se", "beta",
                                  "gamma", "C1", "C2", "xi0"});
            std::vector<double> gam, xi;
            bool convex = true;
            for (const auto& e : L->entries) {
                if (e.group != group || e.potential != tag) continue;
                t.rows.push_back({double(e.N), double(e.M), double(e.N / e.M), e.c.rho, e.c.lambda, e.c.Lambda,
                                  e.c.kappa, e.c.tau, e.c.alpha, e.alpha_se, e.c.beta, e.c.gamma, e.c.C1, e.c.C2, e.xi0});
                gam.push_back(e.c.gamma);
                xi.push_back(e.xi0);
                convex = convex && e.c.lambda > 0;
            }
            res.tables.push_back(t);
            const auto [gmin, gmax] = std::minmax_element(gam.begin(), gam.end());
            res.checks.push_back(make_check("gamma_stable[" + group + "," + tag + "]",
                                            std::isfinite(*gmax) && *gmax > 0 && *gmax <= 2 * *gmin,
                                            "gamma in [" + fmt_short(*gmin) + ", " + fmt_short(*gmax) + "]"));
            res.checks.push_back(make_check("convexity[" + group + "," + tag + "]", convex, "lambda > 0 on every entry"));
            if (group == "ladder") {
                bool dec = true;
                for (std::size_t i = 1; i < xi.size(); ++i) dec = dec && xi[i] < xi[i - 1];
                res.checks.push_back(make_check("xi_decreasing[" + tag + "]", dec, "Xi with Theta(0)=0 along the ladder"));
            }
        }
        if (potential_of(cache_->pots, tag).is_gaussian()) {
            double worst = 0, tau_err = 0;
            for (const auto& e : L->entries) {
                if (e.potential != tag) continue;
                worst = std::max({worst, std::abs(e.c.lambda - 1), std::abs(e.c.Lambda - 1), std::abs(e.c.kappa)});
            }
            int nmax = 0;
            for (const auto& e : cfg_.ladder) nmax = std::max(nmax, e.N);
            tau_err = std::abs(KawasakiOperator(nmax).tau() / (4 * pi * pi) - 1);
            res.checks.push_back(make_check("gaussian_closed_forms[" + tag + "]", worst <= 1e-6 && tau_err < 0.01,
                                            "max |lambda-1|,|Lambda-1|,|kappa| = " + fmt_short(worst) +
                                                ", tau/(4 pi^2) - 1 = " + fmt_short(tau_err)));
        } else {
            res.notes.push_back("rho for " + tag + " is the assumed bounded-perturbation value exp(-osc)");
        }
    }
    res.seconds = seconds_since(t0);
    cache_->audit = std::move(res);
    cache_->ledger = std::move(L);
    return *cache_->ledger;
}

ExperimentResult Harness::run_assumption_audit() {
    ledger();
    return cache_->audit;
}

// ---------------------------------------------------------------- tabulate

ExperimentResult Harness::run_tabulate() {
    const auto& L = ledger();
    ExperimentResult res;
    res.experiment = "tabulate";
    res.ledger_id = L.id_hex();
    auto as_table = [](const std::string& name, const TabulatedFunction& f) {
        Table t;
        t.name = name;
        t.header = col_names({"x", "value", "d1", "d2"});
        for (int i = 0; i < f.size(); ++i) t.rows.push_back({f.grid().node(i), f.values()[i], f.d1()[i], f.d2()[i]});
        return t;
    };
    for (const auto& tag : cfg_.potentials) {
        const auto& phi = Access::phi(*cache_, cfg_, tag);
        res.tables.push_back(as_table("phi_" + file_tag(tag), phi));
        const auto cb = convexity_bounds(phi);
        res.checks.push_back(make_check("phi_convex[" + tag + "]", cb.lambda > 0,
                                        "phi'' in [" + fmt_short(cb.lambda) + ", " + fmt_short(cb.Lambda) + "]"));
        for (int K : configured_ks(cfg_)) {
            const auto& f = Access::psiK(*cache_, cfg_, tag, K);
            res.tables.push_back(as_table("psiK_" + file_tag(tag) + "_K" + std::to_string(K), f));
            const auto b = convexity_bounds(f);
            res.checks.push_back(make_check("psiK_convex[" + tag + ",K=" + std::to_string(K) + "]", b.lambda > 0,
                                            "psi_K'' in [" + fmt_short(b.lambda) + ", " + fmt_short(b.Lambda) + "]"));
        }
    }
    return res;
}

// ---------------------------------------------------------------- hydrodynamic limit

ExperimentResult Harness::run_hydrodynamic_limit() {
    const auto& L = ledger();
    ExperimentResult res;
    res.experiment = "micro";
    res.ledger_id = L.id_hex();
    const int n_out = cfg_.n_outputs();

    for (const auto& tag : cfg_.potentials) {
        SectionTimer st(*cache_);
        const Potential& p = potential_of(cache_->pots, tag);
        const bool oracle = p.is_gaussian();
        const auto U = L.uniform("ladder", tag);
        const auto& zeta = Access::hydro(*cache_, cfg_, tag, cfg_.amplitude);

        Table curves;
        curves.name = "hydro_limit_" + file_tag(tag);
        curves.header = col_names({"N", "M", "t", "h1", "h1_se", "theta", "theta_se", "xi", "m2", "m2_se"});
        Table trend;
        trend.name = "trend_" + file_tag(tag);
        trend.header = col_names({"N", "M", "sup_h1", "sup_h1_se", "sup_theta", "theta0", "xi", "xi0", "int_m2",
                                  "int_m2_se", "two_xi_over_lambda"});
        bool theta_ok = true;
        std::string theta_detail;

        for (const auto& le : cfg_.ladder) {
            const int N = le.N, M = le.M;
            const KawasakiOperator op(N);
            const Projection P(N, M);
            const auto& mr = Access::macro(*cache_, cfg_, tag, N, M, cfg_.amplitude);
            const auto site = cell_profile(N, cfg_.m, cfg_.amplitude);

            std::vector<double> h1(n_out + 1), h1se(n_out + 1, 0.0), th(n_out + 1), thse(n_out + 1, 0.0),
                m2(n_out + 1), m2se(n_out + 1, 0.0);
            if (oracle) {
                const auto c0 = CirculantGaussian::equilibrium_fluctuations(site);
                for (int o = 0; o <= n_out; ++o) {
                    const auto c = c0.evolve(op, zeta.times[o]);
                    const auto& eta = mr.grid.states[o].values;
                    h1[o] = c.h_minus_one_distance(zeta.frames[o]);
                    th[o] = c.theta(eta, op);
                    m2[o] = c.macro_second_moment(eta);
                }
            } else {
                const auto eta0 = mr.grid.states.front();
                SamplerOptions so;
                so.proposal = 1.0;
                so.burn_in_sweeps = cfg_.burn_in_sweeps;
                so.threads = cfg_.threads;
                so.tilt = P.lift(grad_Hbar(mr.h, eta0));
                so.start = P.lift(eta0);
                so.start_spread = 1.0 / std::sqrt(mean_curvature(p, cfg_.m));
                auto smp = sample_equilibrium(p, N, cfg_.m, cfg_.replicas, mix_seed(cfg_.seed, tag, N, M, 10), so);
                res.notes.push_back(entry_name(tag, N, M) + ": local Gibbs start R-hat " +
                                    fmt_short(smp.diagnostics.rhat) + ", acceptance " +
                                    fmt_short(smp.diagnostics.acceptance) + ", status " + smp.diagnostics.status);
                MicroEnsemble e = std::move(smp.ensemble);
                e.rng_seed = mix_seed(cfg_.seed, tag, N, M, 11);
                e.step = 0;
                e.t = 0;
                const long long n_sub =
                    std::max(1LL, static_cast<long long>(std::ceil(cfg_.output_every / cfg_.dt_micro * (1 - 1e-12))));
                const EtdIntegrator etd(op, cfg_.output_every / n_sub, mean_curvature(p, cfg_.m));
                for (int o = 0; o <= n_out; ++o) {
                    if (o > 0) etd.advance(e, p, static_cast<int>(n_sub), cfg_.threads);
                    const auto& zf = zeta.frames[o];
                    const auto& eta = mr.grid.states[o];
                    const auto a = replica_mean(e.replicas, cfg_.threads, [&](int r) {
                        const std::vector<double> x(e.row(r), e.row(r) + N);
                        return h_minus_one_norm(difference(step_embed(x, zf.n_cells), zf));
                    });
                    const auto b = replica_mean(e.replicas, cfg_.threads, [&](int r) {
                        const std::vector<double> x(e.row(r), e.row(r) + N);
                        const auto y = P.project(x);
                        double s = 0;
                        for (int j = 0; j < M; ++j) s += (y[j] - eta.values[j]) * (y[j] - eta.values[j]);
                        return s / M;
                    });
                    const auto t = theta_functional(e, eta, op, P);
                    h1[o] = a.value, h1se[o] = a.stderr_;
                    m2[o] = b.value, m2se[o] = b.stderr_;
                    th[o] = t.value, thse[o] = t.stderr_;
                }
            }
            const double theta0 = th[0];
            const double xi = xi_bound(cfg_.T, M, N, U, std::max(0.0, theta0));
            for (int o = 0; o <= n_out; ++o) {
                curves.rows.push_back({double(N), double(M), zeta.times[o], h1[o], h1se[o], th[o], thse[o], xi, m2[o], m2se[o]});
                if (!(th[o] <= xi)) {
                    theta_ok = false;
                    theta_detail = entry_name(tag, N, M) + " t=" + fmt_short(zeta.times[o]) + " theta " +
                                   fmt_short(th[o]) + " > xi " + fmt_short(xi);
                }
            }
            const auto imax = static_cast<std::size_t>(std::max_element(h1.begin(), h1.end()) - h1.begin());
            const double int_m2 = trapezoid(zeta.times, m2);
            const double int_m2_se = trapezoid(zeta.times, m2se);
            trend.rows.push_back({double(N), double(M), h1[imax], h1se[imax], *std::max_element(th.begin(), th.end()),
                                  theta0, xi, L.at("ladder", tag, N, M).xi0, int_m2, int_m2_se, 2 * xi / U.lambda});
        }

        res.checks.push_back(make_check("theta_below_xi[" + tag + "]", theta_ok,
                                        theta_ok ? "Theta(t) <= Xi at every output time" : theta_detail));
        bool trend_ok = true;
        std::ostringstream td;
        for (std::size_t i = 1; i < trend.rows.size(); ++i) {
            const double a = trend.get(i - 1, "sup_h1"), b = trend.get(i, "sup_h1");
            const double sa = trend.get(i - 1, "sup_h1_se"), sb = trend.get(i, "sup_h1_se");
            const bool ok = oracle ? b < a : b <= a + 4 * std::sqrt(sa * sa + sb * sb);
            trend_ok = trend_ok && ok;
            td << (i > 1 ? "; " : "") << fmt_short(a) << " -> " << fmt_short(b);
        }
        res.checks.push_back(make_check(std::string(oracle ? "h1_trend_oracle[" : "h1_trend_mc[") + tag + "]", trend_ok,
                                        td.str()));
        bool xi_dec = true, mom_ok = true;
        for (std::size_t i = 0; i < trend.rows.size(); ++i) {
            if (i > 0) xi_dec = xi_dec && trend.get(i, "xi0") < trend.get(i - 1, "xi0");
            mom_ok = mom_ok && trend.get(i, "int_m2") <= trend.get(i, "two_xi_over_lambda") + 3 * trend.get(i, "int_m2_se");
        }
        res.checks.push_back(make_check("xi_to_zero[" + tag + "]", xi_dec, "Xi(T,M,N) with Theta(0)=0 strictly decreasing"));
        res.checks.push_back(make_check("moment_below_2xi[" + tag + "]", mom_ok, "int E|y-eta|^2 dt <= (2/lambda) Xi"));
        res.tables.push_back(std::move(curves));
        res.tables.push_back(std::move(trend));
        res.timings.emplace_back(tag, st.seconds());
    }
    return res;
}

// ---------------------------------------------------------------- macro

ExperimentResult Harness::run_macro() {
    const auto& L = ledger();
    ExperimentResult res;
    res.experiment = "macro";
    res.ledger_id = L.id_hex();
    for (const auto& tag : cfg_.potentials) {
        SectionTimer st(*cache_);
        Table d;
        d.name = "dissipation_" + file_tag(tag);
        d.header = col_names({"N", "M", "dt", "integral", "bound", "bound_tau_A", "energy_drop", "tangent_min", "tau_A",
                               "quadrature_error"});
        bool mono = true, holds = true;
        for (const auto& le : cfg_.ladder) {
            const auto& mr = Access::macro(*cache_, cfg_, tag, le.N, le.M, cfg_.amplitude);
            Table t;
            t.name = "macro_" + file_tag(tag) + "_N" + std::to_string(le.N) + "_M" + std::to_string(le.M);
            t.header = {"t"};
            for (int j = 1; j <= le.M; ++j) t.header.push_back("eta_" + std::to_string(j));
            t.header.push_back("H");
            for (std::size_t f = 0; f < mr.grid.times.size(); ++f) {
                std::vector<double> row{mr.grid.times[f]};
                row.insert(row.end(), mr.grid.states[f].values.begin(), mr.grid.states[f].values.end());
                row.push_back(mr.grid.energies[f]);
                t.rows.push_back(std::move(row));
            }
            for (std::size_t f = 1; f < mr.full.energies.size(); ++f) mono = mono && mr.full.energies[f] <= mr.full.energies[f - 1];
            holds = holds && mr.diss.holds;
            const double tauA = KawasakiOperator(le.N).tau();
            const double bound_tau = (mr.full.energies.front() - mr.h.psiK.value(cfg_.m)) / tauA;
            d.rows.push_back({double(le.N), double(le.M), mr.full.dt, mr.diss.integral, mr.diss.bound, bound_tau,
                              mr.diss.energy_drop, mr.diss.tau, tauA, mr.diss.quadrature_error});
            res.tables.push_back(std::move(t));
        }
        res.checks.push_back(make_check("energy_monotone[" + tag + "]", mono, "H-bar non-increasing at every step"));
        res.checks.push_back(make_check("dissipation[" + tag + "]", holds, "int |grad H-bar|^2 dt <= (H(0) - inf H)/tau"));
        res.tables.push_back(std::move(d));
        res.timings.emplace_back(tag, st.seconds());
    }
    return res;
}

// ---------------------------------------------------------------- hydro

ExperimentResult Harness::run_hydro() {
    const auto& L = ledger();
    ExperimentResult res;
    res.experiment = "hydro";
    res.ledger_id = L.id_hex();
    Table s;
    s.name = "hydro_summary";
    s.header = col_names({"potential", "lambda", "Lambda", "dt", "steps", "guaranteed_rate", "observed_rate",
                          "worst_contraction", "mass_drift"});
    for (std::size_t pi_ = 0; pi_ < cfg_.potentials.size(); ++pi_) {
        const auto& tag = cfg_.potentials[pi_];
        SectionTimer st(*cache_);
        const auto& tr = Access::hydro(*cache_, cfg_, tag, cfg_.amplitude);
        const auto& phi = Access::phi(*cache_, cfg_, tag);
        Table snap;
        snap.name = "hydro_" + file_tag(tag);
        snap.header = {"t"};
        const int n = tr.frames.front().n_cells;
        for (int j = 0; j < n; ++j) snap.header.push_back(fmt(tr.frames.front().center(j)));
        double m0 = 0;
        for (double v : tr.frames.front().values) m0 += v;
        double drift = 0;
        for (std::size_t f = 0; f < tr.times.size(); ++f) {
            std::vector<double> row{tr.times[f]};
            row.insert(row.end(), tr.frames[f].values.begin(), tr.frames[f].values.end());
            snap.rows.push_back(std::move(row));
            double mf = 0;
            for (double v : tr.frames[f].values) mf += v;
            drift = std::max(drift, std::abs(mf - m0) / n);
        }
        const auto rep = regularity_diagnostics(tr, phi);
        Table reg;
        reg.name = "regularity_" + file_tag(tag);
        reg.header = col_names({"t", "L2", "grad2", "D1", "D2", "L4_ratio"});
        for (const auto& f : rep.frames) reg.rows.push_back({f.t, f.L2, f.grad2, f.D1, f.D2, f.L4_ratio});
        s.rows.push_back({double(pi_), tr.lambda, tr.Lambda, tr.dt, double(tr.steps), rep.guaranteed_rate, rep.observed_rate,
                          rep.worst_contraction, drift});
        res.checks.push_back(make_check("contraction[" + tag + "]",
                                        rep.contraction_holds && rep.observed_rate >= rep.guaranteed_rate,
                                        "observed D1 rate " + fmt_short(rep.observed_rate) + " vs 2 lambda pi^2 = " +
                                            fmt_short(rep.guaranteed_rate) + ", worst ratio " +
                                            fmt_short(rep.worst_contraction)));
        res.checks.push_back(make_check("l4_interpolation[" + tag + "]", rep.l4_holds, "every frame"));
        res.checks.push_back(make_check("energy_monotone[" + tag + "]", rep.energy_monotone, "int phi(zeta) non-increasing"));
        res.checks.push_back(make_check("mass[" + tag + "]", drift <= 1e-12, "max mean drift " + fmt_short(drift)));
        res.tables.push_back(std::move(snap));
        res.tables.push_back(std::move(reg));
        res.timings.emplace_back(tag, st.seconds());
    }
    res.tables.push_back(std::move(s));
    return res;
}

// ---------------------------------------------------------------- local Gibbs

ExperimentResult Harness::run_local_gibbs() {
    const auto& L = ledger();
    ExperimentResult res;
    res.experiment = "gibbs";
    res.ledger_id = L.id_hex();
    const int n_out = cfg_.n_outputs();

    for (const auto& tag : cfg_.potentials) {
        const Potential& p = potential_of(cache_->pots, tag);

        std::optional<SectionTimer> st(std::in_place, *cache_);
        Table mt;
        mt.name = "moment_" + file_tag(tag);
        mt.header = col_names({"N", "M", "lambda", "moment", "se", "bound", "closed_form", "quadrature", "rhat", "ess",
                               "acceptance"});
        bool bound_ok = true, closed_ok = true;
        std::ostringstream bd;
        for (const auto& le : cfg_.gibbs_pairs) {
            const int N = le.N, M = le.M;
            const auto h = build_coarse_hamiltonian(Access::psiK(*cache_, cfg_, tag, le.K()), N, M);
            std::vector<double> ev(M);
            for (int j = 0; j < M; ++j) ev[j] = cfg_.m + cfg_.gibbs_amplitude * std::sin(2 * pi * (j + 0.5) / M);
            const auto eta = MacroProfile::from_values(ev);
            LocalGibbsOptions lo;
            lo.chains = cfg_.gibbs_chains;
            lo.threads = cfg_.threads;
            lo.thin_sweeps = 10;
            const auto smp = sample_local_gibbs(h, eta, cfg_.gibbs_samples, mix_seed(cfg_.seed, tag, N, M, 20), lo);
            std::vector<double> flat;
            flat.reserve(smp.y.size());
            for (int r = 0; r < smp.R; ++r) flat.insert(flat.end(), smp.row(r), smp.row(r) + M);
            std::vector<double> d2(smp.R);
            for (int r = 0; r < smp.R; ++r) {
                double s = 0;
                for (int j = 0; j < M; ++j) s += (smp.row(r)[j] - eta.values[j]) * (smp.row(r)[j] - eta.values[j]);
                d2[r] = s / M;
            }
            // batch means over chains
            std::vector<double> per(lo.chains, 0.0), cnt(lo.chains, 0.0);
            for (int r = 0; r < smp.R; ++r) per[smp.chain[r]] += d2[r], cnt[smp.chain[r]] += 1;
            std::vector<double> bm;
            for (int c = 0; c < lo.chains; ++c)
                if (cnt[c] > 0) bm.push_back(per[c] / cnt[c]);
            const auto est = mc_mean(bm);
            double mean = 0;
            for (double v : d2) mean += v;
            mean /= smp.R;
            const double bound = double(M) / (h.lambda * N);
            const double closed = double(M - 1) / (h.lambda * N);
            double quad = NAN;
            if (M <= 3) {
                // quadrature moment on the hyperplane grid
                const double sd = std::sqrt(double(M) / (h.lambda * N));
                double room = INFINITY;
                for (double v : eta.values) room = std::min({room, v - h.psiK.lo(), h.psiK.hi() - v});
                const double width = std::min(12 * sd, room * (M == 2 ? std::sqrt(2.0) : 1.0 / (1 / std::sqrt(2.0) + 1 / std::sqrt(6.0))));
                const auto grid = make_hyperplane_grid(eta.values, width, M == 2 ? 1601 : 241);
                const auto g = grad_Hbar(h, eta);
                std::vector<double> lw(grid.points.size());
                double mx = -INFINITY;
                for (std::size_t i = 0; i < lw.size(); ++i) {
                    double e = 0;
                    for (int j = 0; j < M; ++j) e += g[j] * grid.points[i][j] - h.psiK.value(grid.points[i][j]);
                    lw[i] = grid.log_weights[i] + double(N) / M * e;
                    mx = std::max(mx, lw[i]);
                }
                double z = 0, s = 0;
                for (std::size_t i = 0; i < lw.size(); ++i) {
                    const double w = std::exp(lw[i] - mx);
                    double q = 0;
                    for (int j = 0; j < M; ++j) q += (grid.points[i][j] - eta.values[j]) * (grid.points[i][j] - eta.values[j]);
                    z += w;
                    s += w * q / M;
                }
                quad = s / z;
            }
            mt.rows.push_back({double(N), double(M), h.lambda, mean, est.stderr_, bound, closed, quad, smp.rhat, smp.ess,
                               smp.acceptance});
            const bool ok = mean <= bound + 3 * est.stderr_;
            bound_ok = bound_ok && ok;
            bd << (bd.tellp() ? "; " : "") << "M=" << M << " N=" << N << ": " << fmt_short(mean) << " <= "
               << fmt_short(bound);
            if (p.is_gaussian()) closed_ok = closed_ok && std::abs(mean - closed) <= 1e-3;
            if (!smp.converged) res.notes.push_back(entry_name(tag, N, M) + ": local Gibbs sampler status " + smp.status);
        }
        res.checks.push_back(make_check("moment_bound[" + tag + "]", bound_ok, bd.str()));
        if (p.is_gaussian())
            res.checks.push_back(make_check("gaussian_closed_form[" + tag + "]", closed_ok, "|E|y-eta|^2 - (M-1)/(lambda N)| <= 1e-3"));
        res.tables.push_back(std::move(mt));
        res.timings.emplace_back("moment:" + tag, st->seconds());
        st.reset();
        st.emplace(*cache_);

        // time-integrated channels along the macroscopic trajectory
        for (const std::string group : {"ladder", "pairs"}) {
        const auto& entries = group == "ladder" ? cfg_.ladder : cfg_.gibbs_pairs;
        const auto U = L.uniform(group, tag);
        Table it;
        it.name = "integrated_" + group + "_" + file_tag(tag);
        it.header = col_names({"N", "M", "int_G_moment", "int_G_moment_se", "T_M_over_lambdaN", "int_f_moment",
                               "two_xi_over_lambda", "int_rel_entropy", "theta0", "envelope"});
        bool g_ok = true, f_ok = true, ent_dec = true;
        double prev_ent = INFINITY;
        for (const auto& le : entries) {
            const int N = le.N, M = le.M;
            const auto& mr = Access::macro(*cache_, cfg_, tag, N, M, cfg_.amplitude);
            std::vector<double> tn, gm, gse;
            for (int k = 0; k < cfg_.gibbs_time_nodes; ++k) {
                const int o = static_cast<int>(std::llround(double(k) * n_out / (cfg_.gibbs_time_nodes - 1)));
                if (!tn.empty() && mr.grid.times[o] == tn.back()) continue;
                const auto& eta = mr.grid.states[o];
                LocalGibbsOptions lo;
                lo.chains = std::min(cfg_.gibbs_chains, cfg_.gibbs_time_samples);
                lo.threads = cfg_.threads;
                lo.stage = static_cast<std::uint64_t>(o) + 1;
                const auto smp = sample_local_gibbs(mr.h, eta, cfg_.gibbs_time_samples, mix_seed(cfg_.seed, tag, N, M, group == "ladder" ? 21 : 22), lo);
                std::vector<double> per(lo.chains, 0.0), cnt(lo.chains, 0.0);
                for (int r = 0; r < smp.R; ++r) {
                    double s = 0;
                    for (int j = 0; j < M; ++j) s += (smp.row(r)[j] - eta.values[j]) * (smp.row(r)[j] - eta.values[j]);
                    per[smp.chain[r]] += s / M;
                    cnt[smp.chain[r]] += 1;
                }
                std::vector<double> bm;
                for (int c = 0; c < lo.chains; ++c)
                    if (cnt[c] > 0) bm.push_back(per[c] / cnt[c]);
                const auto est = mc_mean(bm);
                tn.push_back(mr.grid.times[o]);
                gm.push_back(est.value);
                gse.push_back(est.stderr_);
            }
            const double int_g = trapezoid(tn, gm), int_g_se = trapezoid(tn, gse);
            const double g_bound = cfg_.T * M / (mr.h.lambda * N);
            g_ok = g_ok && int_g <= g_bound + 3 * int_g_se;

            double int_f = NAN, int_ent = NAN, theta0 = NAN, two_xi = NAN, env = NAN;
            if (p.is_gaussian()) {
                const KawasakiOperator op(N);
                const auto c0 = CirculantGaussian::equilibrium_fluctuations(cell_profile(N, cfg_.m, cfg_.amplitude));
                std::vector<double> fm(n_out + 1), fe(n_out + 1);
                for (int o = 0; o <= n_out; ++o) {
                    const auto c = c0.evolve(op, mr.grid.times[o]);
                    fm[o] = c.macro_second_moment(mr.grid.states[o].values);
                    fe[o] = c.macro_relative_entropy(mr.grid.states[o].values);
                }
                int_f = trapezoid(mr.grid.times, fm);
                int_ent = trapezoid(mr.grid.times, fe);
                theta0 = std::max(0.0, c0.theta(mr.grid.states.front().values, op));
                two_xi = 2 * xi_bound(cfg_.T, M, N, U, theta0) / U.lambda;
                env = std::sqrt(theta0 + double(M) / N + 1.0 / M);
                f_ok = f_ok && int_f <= two_xi;
                ent_dec = ent_dec && int_ent < prev_ent;
                prev_ent = int_ent;
            }
            it.rows.push_back({double(N), double(M), int_g, int_g_se, g_bound, int_f, two_xi, int_ent, theta0, env});
        }
        res.checks.push_back(make_check("integrated_G_moment[" + group + "," + tag + "]", g_ok, "int E_G|y-eta|^2 dt <= T M/(lambda N)"));
        if (p.is_gaussian()) {
            res.checks.push_back(make_check("integrated_f_moment[" + group + "," + tag + "]", f_ok,
                                            "int E_f|y-eta|^2 dt <= (2/lambda) Xi"));
            if (group == "ladder")
                res.checks.push_back(make_check("integrated_entropy_decreasing[" + tag + "]", ent_dec,
                                                "time-integrated (1/N) Ent(f-bar | G-bar) decreases along the ladder"));
        } else if (group == "ladder") {
            res.notes.push_back(tag + ": the f-bar channels need the Gaussian oracle and are not evaluated");
        }
        res.tables.push_back(std::move(it));
        }
        res.timings.emplace_back("integrated:" + tag, st->seconds());
    }
    return res;
}

// ---------------------------------------------------------------- entropy

ExperimentResult Harness::run_entropy_convergence() {
    const auto& L = ledger();
    ExperimentResult res;
    res.experiment = "entropy";
    res.ledger_id = L.id_hex();
    const int n_out = cfg_.n_outputs();
    const int eps_k = static_cast<int>(std::llround(cfg_.epsilon / cfg_.output_every));
    std::vector<int> t_idx;
    for (double t : cfg_.entropy_times) t_idx.push_back(static_cast<int>(std::llround(t / cfg_.output_every)));

    for (const auto& tag : cfg_.potentials) {
        const Potential& p = potential_of(cache_->pots, tag);
        std::optional<SectionTimer> st(std::in_place, *cache_);
        if (p.is_gaussian()) {
            const auto& zeta = Access::hydro(*cache_, cfg_, tag, cfg_.entropy_amplitude);
            const auto& phi = Access::phi(*cache_, cfg_, tag);
            std::vector<double> hyd(n_out + 1);
            const double phim = phi.value(cfg_.m);
            for (int o = 0; o <= n_out; ++o) {
                double s = 0;
                for (double v : zeta.frames[o].values) s += phi.value(v);
                hyd[o] = s / zeta.frames[o].n_cells - phim;
            }
            Table trend;
            trend.name = "entropy_trend_" + file_tag(tag);
            trend.header = {"N", "M"};
            for (double t : cfg_.entropy_times) trend.header.push_back("gap_t" + fmt_short(t));
            for (const char* c : {"uniform_gap", "L1_gap", "sandwich_worst_margin"}) trend.header.push_back(c);
            bool mono = true, sandwich = true;
            std::string mono_detail = "every output step", sandwich_detail = "both windows at every configured time";
            for (const auto& le : cfg_.ladder) {
                const int N = le.N;
                const KawasakiOperator op(N);
                const auto c0 = CirculantGaussian::equilibrium_fluctuations(cell_profile(N, cfg_.m, cfg_.entropy_amplitude));
                std::vector<double> micro(n_out + 1), gap(n_out + 1);
                Table t;
                t.name = "entropy_" + file_tag(tag) + "_N" + std::to_string(N);
                t.header = col_names({"t", "micro", "hydro", "gap"});
                for (int o = 0; o <= n_out; ++o) {
                    micro[o] = c0.evolve(op, zeta.times[o]).relative_entropy() / N;
                    gap[o] = std::abs(micro[o] - hyd[o]);
                    t.rows.push_back({zeta.times[o], micro[o], hyd[o], gap[o]});
                    if (o > 0 && !(micro[o] <= micro[o - 1])) {
                        mono = false;
                        mono_detail = "N=" + std::to_string(N) + " increase at t=" + fmt_short(zeta.times[o]);
                    }
                }
                std::vector<double> row{double(N), double(le.M)};
                for (int k : t_idx) row.push_back(gap[k]);
                double uni = 0;
                for (int o = eps_k; o <= n_out; ++o) uni = std::max(uni, gap[o]);
                row.push_back(uni);
                row.push_back(trapezoid(zeta.times, gap));
                // averages over [t - eps, t] and [t, t + eps] sandwich the monotone micro entropy
                double worst = INFINITY;
                for (int k : t_idx) {
                    auto avg = [&](int a, int b, const std::vector<double>& f) {
                        double s = 0;
                        for (int o = a + 1; o <= b; ++o) s += 0.5 * (f[o] + f[o - 1]);
                        return s / (b - a);
                    };
                    std::vector<double> diff(n_out + 1);
                    for (int o = 0; o <= n_out; ++o) diff[o] = micro[o] - hyd[o];
                    const double left = std::abs(avg(k - eps_k, k, diff)), right = std::abs(avg(k, k + eps_k, diff));
                    double lo = INFINITY, hi = -INFINITY;
                    for (int o = k - eps_k; o <= k + eps_k; ++o) lo = std::min(lo, hyd[o]), hi = std::max(hi, hyd[o]);
                    const double rhs = std::max(left, right) + (hi - lo);
                    const bool in_window = avg(k, k + eps_k, micro) <= micro[k] && micro[k] <= avg(k - eps_k, k, micro);
                    worst = std::min(worst, rhs - gap[k]);
                    if (!(gap[k] <= rhs) || !in_window) {
                        sandwich = false;
                        sandwich_detail = "N=" + std::to_string(N) + " t=" + fmt_short(zeta.times[k]);
                    }
                }
                row.push_back(worst);
                trend.rows.push_back(std::move(row));
                res.tables.push_back(std::move(t));
            }
            bool dec = true;
            for (std::size_t i = 1; i < trend.rows.size(); ++i)
                for (std::size_t c = 2; c < 2 + t_idx.size(); ++c) dec = dec && trend.rows[i][c] < trend.rows[i - 1][c];
            const std::size_t uc = trend.col("uniform_gap");
            const double ratio = trend.rows.front()[uc] / trend.rows.back()[uc];
            res.checks.push_back(make_check("entropy_monotone[" + tag + "]", mono, mono_detail));
            res.checks.push_back(make_check("gap_decreasing[" + tag + "]", dec, "pointwise gaps at the configured times"));
            res.checks.push_back(make_check("uniform_gap_ratio[" + tag + "]", ratio >= 2,
                                            "first/last ladder entry = " + fmt_short(ratio)));
            res.checks.push_back(make_check("sandwich[" + tag + "]", sandwich, sandwich_detail));
            res.tables.push_back(std::move(trend));
            res.timings.emplace_back(tag, st->seconds());
        } else {
            res.notes.push_back(tag + ": the quantitative channel needs the Gaussian oracle; grid channel at N=2 only");
        }

        st.reset();
        st.emplace(*cache_);
        // grid channel: N = 2 reduces to a 1-D Fokker-Planck equation in u = (x1 - x2)/sqrt(2)
        auto grid = GridDensity::make_1d(-cfg_.fp_half_width, cfg_.fp_half_width, cfg_.fp_nodes);
        std::vector<double> H(grid.size());
        const double r2 = std::sqrt(2.0);
        for (std::size_t i = 0; i < H.size(); ++i) {
            const double u = grid.node(0, static_cast<int>(i));
            H[i] = psi(p, cfg_.m + u / r2) + psi(p, cfg_.m - u / r2);
        }
        const auto A2 = kawasaki_matrix(2);
        const Eigen::Vector2d e2(1 / r2, -1 / r2);
        Eigen::MatrixXd D(1, 1);
        D(0, 0) = e2.dot(A2 * e2);
        auto rho0 = GridDensity::sample(grid, [&](double u, double) {
            return std::exp(-(u - cfg_.fp_u0) * (u - cfg_.fp_u0) / (2 * cfg_.fp_var0));
        });
        rho0.normalize();
        FokkerPlanckOptions fo;
        fo.T = cfg_.fp_T;
        fo.output_every = cfg_.output_every;
        const auto fp = solve_fokker_planck(H, D, rho0, fo);
        Table ft;
        ft.name = "fp_n2_" + file_tag(tag);
        ft.header = col_names({"t", "entropy_grid", "entropy_oracle", "mass"});
        double worst = 0, mass_err = 0;
        GaussianState g0;
        g0.mean = Eigen::Vector2d(cfg_.m + cfg_.fp_u0 / r2, cfg_.m - cfg_.fp_u0 / r2);
        g0.cov = cfg_.fp_var0 * (Eigen::Matrix2d() << 0.5, -0.5, -0.5, 0.5).finished();
        for (std::size_t f = 0; f < fp.times.size(); ++f) {
            double orc = NAN;
            if (p.is_gaussian()) {
                orc = relative_entropy(gaussian_oracle_evolve(g0, A2, fp.times[f]));
                worst = std::max(worst, std::abs(orc - fp.entropy[f]));
            }
            mass_err = std::max(mass_err, std::abs(fp.mass[f] - 1.0));
            ft.rows.push_back({fp.times[f], fp.entropy[f], orc, fp.mass[f]});
        }
        if (p.is_gaussian())
            res.checks.push_back(make_check("fp_oracle[" + tag + "]", worst <= 1e-4, "max |grid - oracle| = " + fmt_short(worst)));
        res.checks.push_back(make_check("fp_mass[" + tag + "]", mass_err <= 1e-8, "max |mass - 1| = " + fmt_short(mass_err)));
        res.checks.push_back(make_check("fp_entropy_monotone[" + tag + "]", fp.entropy_monotone, "every step"));
        res.tables.push_back(std::move(ft));
        res.timings.emplace_back("fp:" + tag, st->seconds());
    }
    return res;
}

// ---------------------------------------------------------------- dispatch

std::vector<ExperimentResult> Harness::run(const std::string& which) {
    static const std::vector<std::string> order{"audit", "tabulate", "hydro", "macro", "micro", "gibbs", "entropy"};
    std::vector<std::string> todo;
    if (which == "all") todo = order;
    else if (std::find(order.begin(), order.end(), which) != order.end()) todo = {which};
    else throw DomainError("unknown experiment: " + which);
    std::vector<ExperimentResult> out;
    for (const auto& w : todo) {
        const auto t0 = std::chrono::steady_clock::now();
        ExperimentResult r;
        if (w == "audit") r = run_assumption_audit();
        else if (w == "tabulate") r = run_tabulate();
        else if (w == "hydro") r = run_hydro();
        else if (w == "macro") r = run_macro();
        else if (w == "micro") r = run_hydrodynamic_limit();
        else if (w == "gibbs") r = run_local_gibbs();
        else r = run_entropy_convergence();
        if (w != "audit") r.seconds = seconds_since(t0);
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------- reports

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << content;
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::string summary_text(const std::vector<const ExperimentResult*>& rs, const std::string& ledger_id) {
    std::ostringstream os;
    os << "# experiment check status detail\n";
    os << "ledger_id " << ledger_id << "\n";
    for (const auto* r : rs) {
        for (const auto& c : r->checks)
            os << r->experiment << ' ' << c.name << ' ' << (c.pass ? "PASS" : "FAIL") << ' ' << c.detail << '\n';
        for (const auto& n : r->notes) os << r->experiment << " note " << n << '\n';
        char buf[64];
        for (const auto& [k, v] : r->timings) {
            std::snprintf(buf, sizeof buf, "%.2f", v);
            os << r->experiment << " section_seconds " << k << ' ' << buf << '\n';
        }
        std::snprintf(buf, sizeof buf, "%.2f", r->seconds);
        os << r->experiment << " seconds " << buf << '\n';
    }
    return os.str();
}

}  // namespace

void emit_report(const std::vector<ExperimentResult>& results, const Ledger& ledger, const ExperimentConfig& cfg,
                 const std::string& dir) {
    namespace fs = std::filesystem;
    if (!results.empty()) ledger.verify();
    for (const auto& r : results)
        if (r.ledger_id != ledger.id_hex())
            throw ConsistencyError("stale ledger: " + r.experiment + " was produced under ledger " + r.ledger_id +
                                   ", report ledger is " + ledger.id_hex());
    fs::create_directories(dir);
    const std::string cfg_text = cfg.to_ini();
    std::vector<const ExperimentResult*> all;
    for (const auto& r : results) {
        const fs::path d = fs::path(dir) / r.experiment;
        fs::create_directories(d);
        // drop tables left by an earlier run so the directory matches this report
        for (const auto& f : fs::directory_iterator(d))
            if (f.is_regular_file() && f.path().extension() == ".csv") fs::remove(f.path());
        write_file(d / "config.ini", cfg_text);
        write_file(d / "ledger.csv", ledger.text());
        for (const auto& t : r.tables) {
            std::ostringstream os;
            t.write_csv(os);
            write_file(d / (t.name + ".csv"), os.str());
        }
        write_file(d / "summary.txt", summary_text({&r}, r.ledger_id));
        all.push_back(&r);
    }
    write_file(fs::path(dir) / "summary.txt", summary_text(all, results.empty() ? "none" : ledger.id_hex()));
}

}  // namespace twoscale
