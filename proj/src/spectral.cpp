#include "capde/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

#include "capde/errors.hpp"

namespace capde {

namespace {
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

Fft1d::Fft1d(std::size_t n) : n_(n) {
    if (n < 2) throw ShapeError("Fft1d: grid too small");
    real_buf_ = fftw_alloc_real(n);
    fftw_complex* cbuf = fftw_alloc_complex(n / 2 + 1);
    cplx_buf_ = cbuf;
    std::lock_guard<std::mutex> lock(plan_mutex());
    plan_fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_buf_, cbuf, FFTW_ESTIMATE);
    plan_inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), cbuf, real_buf_, FFTW_ESTIMATE);
}

Fft1d::~Fft1d() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
    fftw_free(real_buf_);
    fftw_free(static_cast<fftw_complex*>(cplx_buf_));
}

void Fft1d::forward(const double* in, std::complex<double>* out) {
    for (std::size_t i = 0; i < n_; ++i) real_buf_[i] = in[i];
    fftw_execute(static_cast<fftw_plan>(plan_fwd_));
    fftw_complex* cbuf = static_cast<fftw_complex*>(cplx_buf_);
    for (std::size_t k = 0; k < n_modes(); ++k) out[k] = {cbuf[k][0], cbuf[k][1]};
}

void Fft1d::inverse(const std::complex<double>* in, double* out) {
    fftw_complex* cbuf = static_cast<fftw_complex*>(cplx_buf_);
    for (std::size_t k = 0; k < n_modes(); ++k) {
        cbuf[k][0] = in[k].real();
        cbuf[k][1] = in[k].imag();
    }
    fftw_execute(static_cast<fftw_plan>(plan_inv_));
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = real_buf_[i] * inv_n;
}

std::vector<double> spectral_derivative(const std::vector<double>& u, int order, double domain_len) {
    const std::size_t n = u.size();
    Fft1d fft(n);
    std::vector<std::complex<double>> modes(fft.n_modes());
    fft.forward(u.data(), modes.data());
    const double k0 = 2.0 * M_PI / domain_len;
    for (std::size_t k = 0; k < modes.size(); ++k) {
        std::complex<double> ik(0.0, k0 * static_cast<double>(k));
        std::complex<double> factor(1.0, 0.0);
        for (int p = 0; p < order; ++p) factor *= ik;
        modes[k] *= factor;
    }
    if (n % 2 == 0 && order % 2 == 1) modes[n / 2] = 0.0;  // odd derivative kills Nyquist
    std::vector<double> out(n);
    fft.inverse(modes.data(), out.data());
    return out;
}

std::vector<double> spectral_lowpass(const std::vector<double>& u, std::size_t cutoff) {
    const std::size_t n = u.size();
    Fft1d fft(n);
    std::vector<std::complex<double>> modes(fft.n_modes());
    fft.forward(u.data(), modes.data());
    for (std::size_t k = cutoff; k < modes.size(); ++k) modes[k] = 0.0;
    std::vector<double> out(n);
    fft.inverse(modes.data(), out.data());
    return out;
}

double spectral_energy_above(const std::vector<double>& u, std::size_t cutoff) {
    const std::size_t n = u.size();
    Fft1d fft(n);
    std::vector<std::complex<double>> modes(fft.n_modes());
    fft.forward(u.data(), modes.data());
    double e = 0.0;
    for (std::size_t k = cutoff; k < modes.size(); ++k) e += std::norm(modes[k] / static_cast<double>(n));
    return e;
}

std::vector<double> rhs_combined(const std::vector<double>& u, double alpha, double beta,
                                 double delta, double gamma, double domain_len, bool dealias) {
    const std::size_t n = u.size();
    Fft1d fft(n);
    const std::size_t nm = fft.n_modes();
    const double k0 = 2.0 * M_PI / domain_len;

    std::vector<std::complex<double>> uhat(nm);
    fft.forward(u.data(), uhat.data());

    // quadratic term in physical space, optionally 2/3-dealiased
    std::vector<std::complex<double>> sqhat(nm);
    {
        std::vector<double> usq(n);
        for (std::size_t i = 0; i < n; ++i) usq[i] = u[i] * u[i];
        fft.forward(usq.data(), sqhat.data());
        if (dealias) {
            const std::size_t cut = n / 3;
            for (std::size_t k = cut; k < nm; ++k) sqhat[k] = 0.0;
        }
    }

    // flux_hat = alpha*(u^2)_hat - beta (ik) u_hat + delta (ik)^2 u_hat + gamma (ik)^3 u_hat
    std::vector<std::complex<double>> duhat(nm);
    for (std::size_t k = 0; k < nm; ++k) {
        const double kk = k0 * static_cast<double>(k);
        const std::complex<double> ik(0.0, kk);
        std::complex<double> flux = alpha * sqhat[k] - beta * (ik * uhat[k]) +
                                    delta * (ik * ik * uhat[k]) + gamma * (ik * ik * ik * uhat[k]);
        duhat[k] = -ik * flux;
    }
    if (n % 2 == 0) duhat[n / 2] = 0.0;
    std::vector<double> out(n);
    fft.inverse(duhat.data(), out.data());
    return out;
}

}  // namespace capde
