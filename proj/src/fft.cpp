#include "twoscale/fft.hpp"

#include <fftw3.h>

#include <mutex>

#include "twoscale/errors.hpp"

namespace twoscale {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

RealFft::RealFft(int n) : n_(n) {
    if (n < 1) throw DomainError("RealFft: length must be positive");
    std::lock_guard<std::mutex> lock(planner_mutex());
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    spec_ = reinterpret_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
    if (!real_ || !spec_) throw NumericalError("RealFft: allocation failed");
    fwd_ = fftw_plan_dft_r2c_1d(n, real_, reinterpret_cast<fftw_complex*>(spec_), FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(spec_), real_, FFTW_ESTIMATE);
    if (!fwd_ || !bwd_) throw NumericalError("RealFft: planning failed");
}

RealFft::~RealFft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
    fftw_free(real_);
    fftw_free(spec_);
}

void RealFft::forward() { fftw_execute(static_cast<fftw_plan>(fwd_)); }
void RealFft::backward() { fftw_execute(static_cast<fftw_plan>(bwd_)); }

}  // namespace twoscale
