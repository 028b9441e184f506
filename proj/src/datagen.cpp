#include "capde/datagen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <thread>

#include "capde/dynamics.hpp"
#include "capde/errors.hpp"
#include "capde/physics.hpp"
#include "capde/spectral.hpp"

namespace capde {

namespace {

struct KindDefaults {
    std::size_t train_envs, train_trajs, adapt_envs;
    double horizon, dt_save;
};

KindDefaults defaults_for(PdeKind kind) {
    switch (kind) {
        case PdeKind::pendulum: return {4, 8, 4, 25.0, 0.5};
        case PdeKind::gray_scott: return {4, 1, 4, 200.0, 1.0};
        case PdeKind::burgers: return {6, 4, 4, 0.05, 1e-3};
        case PdeKind::combined: return {50, 4, 10, 30.0, 3.0};
    }
    return {};
}

double pendulum_forcing(const EnvironmentSpec& env, double t) {
    return env.coeff("F") * std::cos(env.coeff("w_f") * t);
}

}  // namespace

std::vector<double> default_time_grid(PdeKind kind, const std::string& split, double horizon,
                                      double dt_save) {
    const KindDefaults kd = defaults_for(kind);
    const bool eval_split = split == "eval_in" || split == "eval_out";
    if (horizon <= 0.0) horizon = eval_split ? 2.0 * kd.horizon : kd.horizon;
    if (dt_save <= 0.0) dt_save = kd.dt_save;
    const std::size_t frames = static_cast<std::size_t>(std::llround(horizon / dt_save));
    std::vector<double> grid(frames + 1);
    for (std::size_t i = 0; i <= frames; ++i) grid[i] = dt_save * static_cast<double>(i);
    return grid;
}

// ---------------------------------------------------------------------------
// pendulum

Tensor simulate_pendulum(const EnvironmentSpec& env, double theta0, double theta_dot0,
                         const std::vector<double>& t_grid, double micro_dt) {
    const double w0 = env.coeff("omega0");
    const double w0sq = w0 * w0;
    const double alpha = env.coeff("alpha");
    auto rhs = [&](const Tensor& s, double t) {
        Tensor d({2});
        d.data[0] = s.data[1];
        d.data[1] = -w0sq * std::sin(s.data[0]) - alpha * s.data[1] + pendulum_forcing(env, t);
        return d;
    };
    Tensor out({t_grid.size(), 2});
    Tensor s({2}, {theta0, theta_dot0});
    out.data[0] = theta0;
    out.data[1] = theta_dot0;
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
        const double t0 = t_grid[k - 1], t1 = t_grid[k];
        const int n = std::max(1, static_cast<int>(std::ceil((t1 - t0) / micro_dt - 1e-12)));
        const double dt = (t1 - t0) / n;
        for (int i = 0; i < n; ++i) s = rk4_step(rhs, s, t0 + i * dt, dt);
        out.data[2 * k] = s.data[0];
        out.data[2 * k + 1] = s.data[1];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gray-Scott

Tensor gray_scott_ic(const DomainSpec& dom, RngStream& rng, bool homogeneous) {
    const std::size_t H = dom.points, W = dom.points;
    Tensor ic({2, H, W});
    double* u = ic.data.data();
    double* v = u + H * W;
    for (std::size_t i = 0; i < H * W; ++i) {
        u[i] = 1.0;
        v[i] = 0.0;
    }
    if (homogeneous) return ic;
    const std::size_t n_patches = 2 + rng.uniform_int(2);  // 2 or 3
    for (std::size_t p = 0; p < n_patches; ++p) {
        const std::size_t size = 4 + rng.uniform_int(5);  // 4..8 cells
        const std::size_t i0 = rng.uniform_int(H - size);
        const std::size_t j0 = rng.uniform_int(W - size);
        for (std::size_t i = i0; i < i0 + size; ++i)
            for (std::size_t j = j0; j < j0 + size; ++j) {
                u[i * W + j] = 0.5;
                v[i * W + j] = 0.25;
            }
    }
    // 1% positive uniform noise keeps concentrations non-negative
    for (std::size_t i = 0; i < H * W; ++i) {
        u[i] += 0.01 * rng.uniform();
        v[i] += 0.01 * rng.uniform();
    }
    return ic;
}

namespace {

void gs_rhs(const std::vector<double>& y, std::vector<double>& dy, std::size_t H, std::size_t W,
            double F, double k, double Du, double Dv, double ds) {
    const double inv_ds2 = 1.0 / (ds * ds);
    const double* u = y.data();
    const double* v = y.data() + H * W;
    double* du = dy.data();
    double* dv = dy.data() + H * W;
    for (std::size_t i = 0; i < H; ++i) {
        const std::size_t im = (i + H - 1) % H, ip = (i + 1) % H;
        for (std::size_t j = 0; j < W; ++j) {
            const std::size_t jm = (j + W - 1) % W, jp = (j + 1) % W;
            const std::size_t c = i * W + j;
            const double lap_u =
                (u[im * W + j] + u[ip * W + j] + u[i * W + jm] + u[i * W + jp] - 4.0 * u[c]) * inv_ds2;
            const double lap_v =
                (v[im * W + j] + v[ip * W + j] + v[i * W + jm] + v[i * W + jp] - 4.0 * v[c]) * inv_ds2;
            const double uvv = u[c] * v[c] * v[c];
            du[c] = Du * lap_u - uvv + F * (1.0 - u[c]);
            dv[c] = Dv * lap_v + uvv - (F + k) * v[c];
        }
    }
}

// Dormand-Prince 5(4) adaptive stepper over a flat state vector.
struct Dopri5 {
    std::function<void(const std::vector<double>&, std::vector<double>&)> rhs;
    double atol, rtol;

    void integrate(std::vector<double>& y, double t0, double t1, double& dt) {
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                                a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                                e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                                e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

        const std::size_t n = y.size();
        std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n);
        double t = t0;
        int rejected_in_a_row = 0;
        while (t < t1 - 1e-14) {
            double h = std::min(dt, t1 - t);
            rhs(y, k1);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
            rhs(tmp, k2);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
            rhs(tmp, k3);
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            rhs(tmp, k4);
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            rhs(tmp, k5);
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
            rhs(tmp, k6);
            for (std::size_t i = 0; i < n; ++i)
                ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
            rhs(ynew, k7);

            double err = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                                      e7 * k7[i]);
                const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
                err += (e / sc) * (e / sc);
            }
            err = std::sqrt(err / static_cast<double>(n));
            if (!std::isfinite(err)) throw DivergenceError("rk45 produced non-finite state");

            if (err <= 1.0) {
                t += h;
                y.swap(ynew);
                rejected_in_a_row = 0;
            } else if (++rejected_in_a_row > 60) {
                throw DivergenceError("rk45 cannot meet the tolerance");
            }
            const double factor =
                std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
            dt = h * factor;
        }
    }
};

}  // namespace

Tensor simulate_gray_scott(const EnvironmentSpec& env, const Tensor& ic,
                           const std::vector<double>& t_grid, double tol) {
    const std::size_t H = ic.shape[1], W = ic.shape[2];
    const double F = env.coeff("F"), k = env.coeff("k");
    const GrayScottConsts gs{};
    Dopri5 stepper;
    stepper.rhs = [&](const std::vector<double>& y, std::vector<double>& dy) {
        gs_rhs(y, dy, H, W, F, k, gs.D_u, gs.D_v, gs.ds);
    };
    stepper.atol = tol;
    stepper.rtol = tol;

    Tensor out({t_grid.size(), 2, H, W});
    std::vector<double> y = ic.data;
    std::copy(y.begin(), y.end(), out.data.begin());
    double dt = 1e-2;
    for (std::size_t f = 1; f < t_grid.size(); ++f) {
        stepper.integrate(y, t_grid[f - 1], t_grid[f], dt);
        std::copy(y.begin(), y.end(), out.data.begin() + f * 2 * H * W);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Burgers

std::vector<double> burgers_energy_spectrum(double k0, std::size_t n_points) {
    std::vector<double> E(n_points / 2 + 1, 0.0);
    for (std::size_t k = 1; k < E.size(); ++k) {
        const double x = static_cast<double>(k) / k0;
        E[k] = (2.0 / 3.0) * std::sqrt(M_PI) * std::pow(x, 4) * (1.0 / k0) * std::exp(-x * x);
    }
    return E;
}

std::vector<double> burgers_spectrum_ic(double k0, std::size_t n_points, RngStream& rng) {
    if ((n_points & (n_points - 1)) != 0) throw ShapeError("burgers ic: points must be a power of two");
    const std::vector<double> E = burgers_energy_spectrum(k0, n_points);
    Fft1d fft(n_points);
    std::vector<std::complex<double>> modes(fft.n_modes(), 0.0);
    // |c_k|^2 = E(k) so that mean(u^2) = 2 sum_k E(k)
    for (std::size_t k = 1; k + 1 < modes.size(); ++k) {
        const double phase = rng.uniform(0.0, 2.0 * M_PI);
        modes[k] = std::sqrt(E[k]) * std::exp(std::complex<double>(0.0, phase));
    }
    // half-complex convention carries the factor n and the conjugate half
    for (auto& m : modes) m *= static_cast<double>(n_points);
    std::vector<double> u(n_points);
    fft.inverse(modes.data(), u.data());
    return u;
}

std::vector<double> spectral_filter_downsample(const std::vector<double>& field, std::size_t target) {
    const std::size_t n = field.size();
    if (n % target != 0) throw ShapeError("spectral filter: target must divide source size");
    if ((n & (n - 1)) != 0 || (target & (target - 1)) != 0)
        throw ShapeError("spectral filter: sizes must be powers of two");
    std::vector<double> smooth = spectral_lowpass(field, target / 2);
    const std::size_t stride = n / target;
    std::vector<double> out(target);
    for (std::size_t i = 0; i < target; ++i) out[i] = smooth[i * stride];
    return out;
}

namespace {

struct SpectralBurgers {
    std::size_t n;
    double nu;
    const EnvironmentSpec* env;
    Fft1d fft;
    std::vector<double> kvals;     // wavenumbers (domain 2*pi so k = index)
    std::vector<double> x;
    std::size_t dealias_cut;

    explicit SpectralBurgers(std::size_t n_, const EnvironmentSpec& e)
        : n(n_), nu(e.coeff("nu")), env(&e), fft(n_) {
        kvals.resize(fft.n_modes());
        for (std::size_t k = 0; k < kvals.size(); ++k) kvals[k] = static_cast<double>(k);
        x.resize(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = 2.0 * M_PI * static_cast<double>(i) / n;
        dealias_cut = n / 3;
    }

    double forcing(double xi, double t) const {
        const double F = env->coeff("F");
        if (F == 0.0 || env->forcing == "none") return 0.0;
        const double wf = env->coeff("w_f");
        if (env->forcing == "sin_cos") return F * (std::sin(wf * xi) + std::cos(wf * t));
        // gauss_x: signed circular distance from 0 keeps the bump periodic
        double d = xi <= M_PI ? xi : xi - 2.0 * M_PI;
        return F * std::exp(-wf * d * d);
    }

    // N(u) = -d/dx(u^2/2) + f, evaluated spectrally with 2/3 dealiasing
    void nonlinear(const std::vector<std::complex<double>>& uhat, double t,
                   std::vector<std::complex<double>>& out) {
        std::vector<double> u(n), fl(n);
        fft.inverse(uhat.data(), u.data());
        for (std::size_t i = 0; i < n; ++i) fl[i] = 0.5 * u[i] * u[i];
        std::vector<std::complex<double>> flhat(fft.n_modes());
        fft.forward(fl.data(), flhat.data());
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i) f[i] = forcing(x[i], t);
        std::vector<std::complex<double>> fhat(fft.n_modes());
        fft.forward(f.data(), fhat.data());
        for (std::size_t k = 0; k < fft.n_modes(); ++k) {
            std::complex<double> ik(0.0, kvals[k]);
            out[k] = -ik * flhat[k] + fhat[k];
            if (k >= dealias_cut) out[k] = 0.0;
        }
    }

    double max_abs(const std::vector<std::complex<double>>& uhat) {
        std::vector<double> u(n);
        fft.inverse(uhat.data(), u.data());
        double m = 0.0;
        for (double v : u) m = std::max(m, std::abs(v));
        return m;
    }

    // integrating-factor RK4 over [t0, t1]
    void advance(std::vector<std::complex<double>>& uhat, double t0, double t1, double micro_scale) {
        const double dx = 2.0 * M_PI / n;
        const std::size_t nm = fft.n_modes();
        std::vector<std::complex<double>> n1(nm), n2(nm), n3(nm), n4(nm), a(nm), b(nm), c(nm);
        double t = t0;
        while (t < t1 - 1e-15) {
            const double umax = std::max(max_abs(uhat), 1e-3);
            double dt = 0.3 * dx / umax * micro_scale;
            const int steps = std::max(1, static_cast<int>(std::ceil((t1 - t) / dt - 1e-12)));
            dt = (t1 - t) / steps;
            std::vector<std::complex<double>> E(nm), E2(nm);
            for (std::size_t k = 0; k < nm; ++k) {
                const double lam = -nu * kvals[k] * kvals[k];
                E[k] = std::exp(lam * dt / 2.0);
                E2[k] = E[k] * E[k];
            }
            for (int s = 0; s < steps; ++s) {
                nonlinear(uhat, t, n1);
                for (std::size_t k = 0; k < nm; ++k) a[k] = E[k] * (uhat[k] + 0.5 * dt * n1[k]);
                nonlinear(a, t + dt / 2, n2);
                for (std::size_t k = 0; k < nm; ++k) b[k] = E[k] * uhat[k] + 0.5 * dt * n2[k];
                nonlinear(b, t + dt / 2, n3);
                for (std::size_t k = 0; k < nm; ++k) c[k] = E2[k] * uhat[k] + dt * E[k] * n3[k];
                nonlinear(c, t + dt, n4);
                for (std::size_t k = 0; k < nm; ++k)
                    uhat[k] = E2[k] * uhat[k] +
                              dt / 6.0 * (E2[k] * n1[k] + 2.0 * E[k] * (n2[k] + n3[k]) + n4[k]);
                t += dt;
                if (!std::isfinite(uhat[1].real()))
                    throw DivergenceError("burgers dns diverged at t=" + std::to_string(t));
            }
        }
    }
};

}  // namespace

Tensor simulate_burgers(const EnvironmentSpec& env, const std::vector<double>& ic_dns,
                        const std::vector<double>& t_grid, std::size_t les_points,
                        double micro_scale) {
    const std::size_t n = ic_dns.size();
    SpectralBurgers solver(n, env);
    std::vector<std::complex<double>> uhat(solver.fft.n_modes());
    solver.fft.forward(ic_dns.data(), uhat.data());

    Tensor out({t_grid.size(), 1, les_points});
    std::vector<double> u(n);
    auto save = [&](std::size_t frame) {
        solver.fft.inverse(uhat.data(), u.data());
        std::vector<double> les = spectral_filter_downsample(u, les_points);
        std::copy(les.begin(), les.end(), out.data.begin() + frame * les_points);
    };
    save(0);
    for (std::size_t f = 1; f < t_grid.size(); ++f) {
        solver.advance(uhat, t_grid[f - 1], t_grid[f], micro_scale);
        save(f);
    }
    return out;
}

// ---------------------------------------------------------------------------
// combined equation

std::vector<double> combined_ic(double domain_len, std::size_t n, RngStream& rng) {
    const std::size_t J = 5;
    std::vector<double> u(n, 0.0);
    for (std::size_t j = 0; j < J; ++j) {
        const double A = rng.uniform(-0.5, 0.5);
        const double ell = 1.0 + static_cast<double>(rng.uniform_int(3));
        const double phi = rng.uniform(0.0, 2.0 * M_PI);
        for (std::size_t i = 0; i < n; ++i) {
            const double xi = domain_len * static_cast<double>(i) / n;
            u[i] += A * std::sin(2.0 * M_PI * ell * xi / domain_len + phi);
        }
    }
    return u;
}

Tensor simulate_combined(const EnvironmentSpec& env, const std::vector<double>& ic,
                         const std::vector<double>& t_grid, double micro_scale) {
    const std::size_t n = ic.size();
    const double L = env.domain.extent;
    const double alpha = env.coeff("alpha"), beta = env.coeff("beta"), delta = env.coeff("delta"),
                 gamma = env.coeff("gamma");
    Fft1d fft(n);
    const std::size_t nm = fft.n_modes();
    const double k0 = 2.0 * M_PI / L;
    const std::size_t dealias_cut = n / 3;

    std::vector<std::complex<double>> uhat(nm);
    fft.forward(ic.data(), uhat.data());

    std::vector<double> u(n), sq(n);
    std::vector<std::complex<double>> sqhat(nm);
    auto nonlinear = [&](const std::vector<std::complex<double>>& yhat,
                         std::vector<std::complex<double>>& out) {
        fft.inverse(yhat.data(), u.data());
        for (std::size_t i = 0; i < n; ++i) sq[i] = u[i] * u[i];
        fft.forward(sq.data(), sqhat.data());
        for (std::size_t k = 0; k < nm; ++k) {
            const std::complex<double> ik(0.0, k0 * static_cast<double>(k));
            out[k] = -ik * (alpha * sqhat[k]);
            if (k >= dealias_cut) out[k] = 0.0;
        }
    };
    auto max_abs = [&](const std::vector<std::complex<double>>& yhat) {
        fft.inverse(yhat.data(), u.data());
        double m = 0.0;
        for (double v : u) m = std::max(m, std::abs(v));
        return m;
    };

    Tensor out({t_grid.size(), 1, n});
    std::copy(ic.begin(), ic.end(), out.data.begin());

    const double dx = L / n;
    std::vector<std::complex<double>> n1(nm), n2(nm), n3(nm), n4(nm), a(nm), b(nm), c(nm), E(nm), E2(nm);
    for (std::size_t f = 1; f < t_grid.size(); ++f) {
        double t = t_grid[f - 1];
        const double t1 = t_grid[f];
        while (t < t1 - 1e-12) {
            const double umax = std::max(max_abs(uhat), 1e-3);
            double dt = std::min(0.3 * dx / (std::max(alpha, 1e-3) * umax), 0.05) * micro_scale;
            const int steps = std::max(1, static_cast<int>(std::ceil((t1 - t) / dt - 1e-12)));
            dt = (t1 - t) / steps;
            for (std::size_t k = 0; k < nm; ++k) {
                const double kk = k0 * static_cast<double>(k);
                // L(k) = -beta k^2 + i delta k^3 - gamma k^4
                const std::complex<double> lam(-beta * kk * kk - gamma * kk * kk * kk * kk,
                                               delta * kk * kk * kk);
                E[k] = std::exp(lam * (dt / 2.0));
                E2[k] = E[k] * E[k];
            }
            for (int s = 0; s < steps; ++s) {
                nonlinear(uhat, n1);
                for (std::size_t k = 0; k < nm; ++k) a[k] = E[k] * (uhat[k] + 0.5 * dt * n1[k]);
                nonlinear(a, n2);
                for (std::size_t k = 0; k < nm; ++k) b[k] = E[k] * uhat[k] + 0.5 * dt * n2[k];
                nonlinear(b, n3);
                for (std::size_t k = 0; k < nm; ++k) c[k] = E2[k] * uhat[k] + dt * E[k] * n3[k];
                nonlinear(c, n4);
                for (std::size_t k = 0; k < nm; ++k)
                    uhat[k] = E2[k] * uhat[k] +
                              dt / 6.0 * (E2[k] * n1[k] + 2.0 * E[k] * (n2[k] + n3[k]) + n4[k]);
                t += dt;
                if (!std::isfinite(uhat[1].real()))
                    throw DivergenceError("combined equation diverged at t=" + std::to_string(t));
            }
        }
        fft.inverse(uhat.data(), u.data());
        std::copy(u.begin(), u.end(), out.data.begin() + f * n);
    }
    return out;
}

// ---------------------------------------------------------------------------
// dataset assembly

TrajectoryDataset generate_dataset(PdeKind kind, GenOptions opt) {
    const KindDefaults kd = defaults_for(kind);
    const bool eval_split = opt.split == "eval_in" || opt.split == "eval_out";
    const std::string pool = (opt.split == "train" || opt.split == "eval_in") ? "train" : "adapt";
    if (opt.split != "train" && opt.split != "eval_in" && opt.split != "adapt" &&
        opt.split != "eval_out")
        throw UsageError("split must be train, eval_in, adapt, or eval_out");
    if (opt.n_envs == 0) opt.n_envs = pool == "train" ? kd.train_envs : kd.adapt_envs;
    if (opt.n_trajs == 0) opt.n_trajs = eval_split ? 32 : (opt.split == "adapt" ? 1 : kd.train_trajs);
    if (kind == PdeKind::combined) opt.sampling = SamplingMode::range;

    TrajectoryDataset ds;
    ds.kind = kind;
    ds.split = opt.split;
    ds.seed = opt.seed;
    ds.envs = sample_environments(kind, opt.n_envs, pool, opt.sampling, opt.seed, opt.avoid);
    ds.t_grid = default_time_grid(kind, opt.split, opt.horizon, opt.dt_save);
    ds.dt = ds.t_grid[1] - ds.t_grid[0];
    ds.train_horizon = opt.horizon > 0.0 ? (eval_split ? opt.horizon / 2.0 : opt.horizon) : kd.horizon;

    // honor resolution overrides
    for (auto& e : ds.envs) {
        if (kind == PdeKind::gray_scott) e.domain.points = opt.gs_points;
        if (kind == PdeKind::burgers) e.domain.points = opt.burgers_les_points;
        if (kind == PdeKind::combined) e.domain.points = opt.combined_points;
    }

    const std::size_t frames = ds.t_grid.size();
    switch (kind) {
        case PdeKind::pendulum:
            ds.u = Tensor({opt.n_envs, opt.n_trajs, frames, 2});
            ds.spatial_dims = 0;
            ds.ds = 0.0;
            break;
        case PdeKind::gray_scott:
            ds.u = Tensor({opt.n_envs, opt.n_trajs, frames, 2, opt.gs_points, opt.gs_points});
            ds.spatial_dims = 2;
            ds.ds = 2.0;
            break;
        case PdeKind::burgers:
            ds.u = Tensor({opt.n_envs, opt.n_trajs, frames, 1, opt.burgers_les_points});
            ds.spatial_dims = 1;
            ds.ds = 2.0 * M_PI / opt.burgers_les_points;
            break;
        case PdeKind::combined:
            ds.u = Tensor({opt.n_envs, opt.n_trajs, frames, 1, opt.combined_points});
            ds.spatial_dims = 1;
            ds.ds = ds.envs[0].domain.extent / opt.combined_points;
            break;
    }

    const std::size_t state = ds.state_numel();
    auto run_one = [&](std::size_t e, std::size_t j) {
        const std::string stream =
            std::string("ic/") + pde_kind_name(kind) + "/" + opt.split + "/" + std::to_string(e) +
            "/" + std::to_string(j);
        RngStream rng(opt.seed, stream);
        Tensor traj;
        switch (kind) {
            case PdeKind::pendulum: {
                const double theta0 = rng.uniform(0.0, M_PI / 12.0);
                const double theta_dot0 = rng.uniform(0.0, 1.0);
                traj = simulate_pendulum(ds.envs[e], theta0, theta_dot0, ds.t_grid,
                                         opt.pendulum_micro_dt * opt.micro_scale);
                break;
            }
            case PdeKind::gray_scott: {
                Tensor ic = gray_scott_ic(ds.envs[e].domain, rng);
                traj = simulate_gray_scott(ds.envs[e], ic, ds.t_grid, opt.gs_tol);
                break;
            }
            case PdeKind::burgers: {
                std::vector<double> ic = burgers_spectrum_ic(opt.burgers_k0, opt.burgers_dns_points, rng);
                traj = simulate_burgers(ds.envs[e], ic, ds.t_grid, opt.burgers_les_points,
                                        opt.micro_scale);
                break;
            }
            case PdeKind::combined: {
                std::vector<double> ic = combined_ic(ds.envs[e].domain.extent, opt.combined_points, rng);
                traj = simulate_combined(ds.envs[e], ic, ds.t_grid, opt.micro_scale);
                break;
            }
        }
        std::copy(traj.data.begin(), traj.data.end(),
                  ds.u.data.begin() + (e * opt.n_trajs + j) * frames * state);
    };

    const std::size_t total = opt.n_envs * opt.n_trajs;
    const int jobs = std::max(1, opt.jobs);
    if (jobs == 1) {
        for (std::size_t i = 0; i < total; ++i) run_one(i / opt.n_trajs, i % opt.n_trajs);
    } else {
        std::vector<std::thread> workers;
        std::atomic<std::size_t> next{0};
        for (int w = 0; w < jobs; ++w)
            workers.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < total; i = next.fetch_add(1))
                    run_one(i / opt.n_trajs, i % opt.n_trajs);
            });
        for (auto& t : workers) t.join();
    }
    ds.validate();
    return ds;
}

}  // namespace capde
