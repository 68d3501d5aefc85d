#include "twoscale/stats.hpp"

#include <algorithm>
#include <cmath>

namespace twoscale {

McEstimate mc_mean(const std::vector<double>& v) {
    McEstimate e;
    if (v.empty()) return e;
    double s = 0.0;
    for (double x : v) s += x;
    const double mean = s / v.size();
    double q = 0.0;
    for (double x : v) q += (x - mean) * (x - mean);
    e.value = mean;
    e.stderr_ = v.size() > 1 ? std::sqrt(q / (v.size() - 1) / v.size()) : 0.0;
    return e;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
    std::vector<std::vector<double>> halves;
    for (const auto& c : chains) {
        const std::size_t h = c.size() / 2;
        if (h < 2) continue;
        halves.emplace_back(c.begin(), c.begin() + h);
        halves.emplace_back(c.begin() + h, c.begin() + 2 * h);
    }
    if (halves.size() < 2) return NAN;
    const std::size_t n = std::min_element(halves.begin(), halves.end(), [](auto& a, auto& b) {
                              return a.size() < b.size();
                          })->size();
    const double m = halves.size();
    std::vector<double> means, vars;
    for (auto& c : halves) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += c[i];
        const double mu = s / n;
        double q = 0;
        for (std::size_t i = 0; i < n; ++i) q += (c[i] - mu) * (c[i] - mu);
        means.push_back(mu);
        vars.push_back(q / (n - 1));
    }
    double gm = 0;
    for (double x : means) gm += x;
    gm /= m;
    double B = 0;
    for (double x : means) B += (x - gm) * (x - gm);
    B *= n / (m - 1);
    double W = 0;
    for (double x : vars) W += x;
    W /= m;
    if (W <= 0) return B > 0 ? INFINITY : 1.0;
    const double vhat = (n - 1.0) / n * W + B / n;
    return std::sqrt(vhat / W);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
    double total = 0.0;
    for (const auto& c : chains) {
        const std::size_t n = c.size();
        if (n < 4) {
            total += n;
            continue;
        }
        double mu = 0;
        for (double x : c) mu += x;
        mu /= n;
        auto acov = [&](std::size_t lag) {
            double s = 0;
            for (std::size_t i = 0; i + lag < n; ++i) s += (c[i] - mu) * (c[i + lag] - mu);
            return s / n;
        };
        const double g0 = acov(0);
        if (g0 <= 0) {
            total += n;
            continue;
        }
        double tau = -1.0;
        for (std::size_t k = 0; k + 1 < n; k += 2) {
            const double pair = (acov(k) + acov(k + 1)) / g0;
            if (pair <= 0) break;
            tau += 2 * pair;
        }
        total += n / std::max(tau, 1.0 / n);
    }
    return total;
}

}  // namespace twoscale
