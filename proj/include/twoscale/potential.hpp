#pragma once

#include <functional>
#include <string>

namespace twoscale {

// Single-site potential psi(x) = x^2/2 + dpsi(x).
struct Potential {
    std::function<double(double)> delta_psi;
    std::function<double(double)> delta_psi_d1;
    std::function<double(double)> delta_psi_d2;
    double c2_bound = 0.0;  // >= sup(|dpsi| + |dpsi'| + |dpsi''|)
    double d2_sup = 0.0;    // sup |dpsi''|
    double osc = 0.0;       // sup dpsi - inf dpsi
    std::string tag = "gaussian";

    static Potential gaussian();
    // a*cos(k x)
    static Potential cosine(double a, double k = 1.0);
    // a*exp(-x^2/2)
    static Potential bump(double a);
    // "gaussian", "cos:A[:k]", "bump:A"
    static Potential from_tag(const std::string& tag);

    bool is_gaussian() const { return c2_bound == 0.0; }
};

struct PsiValue {
    double value, d1, d2;
};

PsiValue eval_psi(const Potential& p, double x);

inline double psi(const Potential& p, double x) { return 0.5 * x * x + p.delta_psi(x); }
inline double psi_d1(const Potential& p, double x) { return x + p.delta_psi_d1(x); }
inline double psi_d2(const Potential& p, double x) { return 1.0 + p.delta_psi_d2(x); }

}  // namespace twoscale
