#pragma once

#include <complex>

namespace twoscale {

// Real <-> half-complex FFT of fixed length with FFTW-owned aligned buffers.
// Unnormalized: backward(forward(x)) = n*x. backward() clobbers the spectrum.
// One instance per thread; construction is serialized internally.
class RealFft {
public:
    explicit RealFft(int n);
    ~RealFft();
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    int n() const { return n_; }
    int n_spec() const { return n_ / 2 + 1; }
    double* real() { return real_; }
    std::complex<double>* spec() { return spec_; }

    void forward();
    void backward();

private:
    int n_;
    double* real_;
    std::complex<double>* spec_;
    void* fwd_;
    void* bwd_;
};

}  // namespace twoscale
