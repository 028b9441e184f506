#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace capde {

// FFTW-backed real transform on a fixed-size periodic grid. Instances own
// their buffers, so independent instances can run on different threads;
// plan creation itself is serialized internally.
class Fft1d {
  public:
    explicit Fft1d(std::size_t n);
    ~Fft1d();
    Fft1d(const Fft1d&) = delete;
    Fft1d& operator=(const Fft1d&) = delete;

    std::size_t n() const { return n_; }
    std::size_t n_modes() const { return n_ / 2 + 1; }

    // X_k = sum_j u_j exp(-2 pi i j k / n), k = 0..n/2 (unnormalized)
    void forward(const double* in, std::complex<double>* out);
    // u_j = (1/n) * full inverse of the half-complex spectrum
    void inverse(const std::complex<double>* in, double* out);

  private:
    std::size_t n_;
    void* plan_fwd_;
    void* plan_inv_;
    double* real_buf_;
    void* cplx_buf_;
};

// d^order u / dx^order on a periodic grid of domain length L, exact on
// resolvable modes.
std::vector<double> spectral_derivative(const std::vector<double>& u, int order, double domain_len);

// Zero every mode with |k| >= cutoff (index units), return same-size field.
std::vector<double> spectral_lowpass(const std::vector<double>& u, std::size_t cutoff);

// Energy content of modes with index >= cutoff (diagnostic for filter tests).
double spectral_energy_above(const std::vector<double>& u, std::size_t cutoff);

// u_t = -d/dx(alpha u^2 - beta u_x + delta u_xx + gamma u_xxx) by Fourier
// differentiation; the quadratic term is 2/3-dealiased when requested.
std::vector<double> rhs_combined(const std::vector<double>& u, double alpha, double beta,
                                 double delta, double gamma, double domain_len, bool dealias = true);

}  // namespace capde
