#pragma once

#include <vector>

namespace twoscale {

struct McEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

// sample mean and standard error, summed in index order
McEstimate mc_mean(const std::vector<double>& v);

// Split-Rhat over equal-length chains (each split in halves).
double split_rhat(const std::vector<std::vector<double>>& chains);

// Effective sample size summed over chains (initial positive sequence).
double effective_sample_size(const std::vector<std::vector<double>>& chains);

}  // namespace twoscale
