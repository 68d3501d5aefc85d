#include "twoscale/potential.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "twoscale/errors.hpp"

namespace twoscale {

namespace {

std::string fmt_num(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

Potential Potential::gaussian() {
    Potential p;
    p.delta_psi = [](double) { return 0.0; };
    p.delta_psi_d1 = [](double) { return 0.0; };
    p.delta_psi_d2 = [](double) { return 0.0; };
    p.tag = "gaussian";
    return p;
}

Potential Potential::cosine(double a, double k) {
    if (!std::isfinite(a) || !std::isfinite(k) || k <= 0.0) throw DomainError("cosine potential: bad parameters");
    if (a == 0.0) return gaussian();
    Potential p;
    p.delta_psi = [a, k](double x) { return a * std::cos(k * x); };
    p.delta_psi_d1 = [a, k](double x) { return -a * k * std::sin(k * x); };
    p.delta_psi_d2 = [a, k](double x) { return -a * k * k * std::cos(k * x); };
    p.c2_bound = std::abs(a) * std::sqrt((1 + k * k) * (1 + k * k) + k * k);
    p.d2_sup = std::abs(a) * k * k;
    p.osc = 2 * std::abs(a);
    p.tag = "cos:" + fmt_num(a) + ":" + fmt_num(k);
    return p;
}

Potential Potential::bump(double a) {
    if (!std::isfinite(a)) throw DomainError("bump potential: bad amplitude");
    if (a == 0.0) return gaussian();
    Potential p;
    p.delta_psi = [a](double x) { return a * std::exp(-0.5 * x * x); };
    p.delta_psi_d1 = [a](double x) { return -a * x * std::exp(-0.5 * x * x); };
    p.delta_psi_d2 = [a](double x) { return a * (x * x - 1) * std::exp(-0.5 * x * x); };
    // sup of (1 + |x| + |x^2-1|) e^{-x^2/2}, scanned
    double s = 0.0;
    for (int i = 0; i <= 20000; ++i) {
        double x = i * 1e-3;
        s = std::max(s, (1 + x + std::abs(x * x - 1)) * std::exp(-0.5 * x * x));
    }
    p.c2_bound = std::abs(a) * s * (1 + 1e-6);
    p.d2_sup = std::abs(a);
    p.osc = std::abs(a);
    p.tag = "bump:" + fmt_num(a);
    return p;
}

Potential Potential::from_tag(const std::string& tag) {
    std::vector<std::string> parts;
    std::stringstream ss(tag);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.empty()) throw DomainError("empty potential tag");
    auto num = [&](std::size_t i) {
        try {
            return std::stod(parts.at(i));
        } catch (const std::exception&) {
            throw DomainError("bad potential tag: " + tag);
        }
    };
    if (parts[0] == "gaussian" || parts[0] == "none") return gaussian();
    if (parts[0] == "cos" && (parts.size() == 2 || parts.size() == 3))
        return cosine(num(1), parts.size() == 3 ? num(2) : 1.0);
    if (parts[0] == "bump" && parts.size() == 2) return bump(num(1));
    throw DomainError("unknown potential tag: " + tag);
}

PsiValue eval_psi(const Potential& p, double x) {
    if (!std::isfinite(x)) throw DomainError("eval_psi: non-finite argument");
    return {0.5 * x * x + p.delta_psi(x), x + p.delta_psi_d1(x), 1.0 + p.delta_psi_d2(x)};
}

}  // namespace twoscale
