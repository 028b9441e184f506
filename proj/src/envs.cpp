#include "capde/envs.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "capde/errors.hpp"
#include "capde/rng.hpp"

namespace capde {

const char* pde_kind_name(PdeKind k) {
    switch (k) {
        case PdeKind::pendulum: return "pendulum";
        case PdeKind::gray_scott: return "gray_scott";
        case PdeKind::burgers: return "burgers";
        case PdeKind::combined: return "combined";
    }
    return "?";
}

PdeKind parse_pde_kind(const std::string& s) {
    if (s == "pendulum") return PdeKind::pendulum;
    if (s == "gray_scott" || s == "gray-scott") return PdeKind::gray_scott;
    if (s == "burgers") return PdeKind::burgers;
    if (s == "combined") return PdeKind::combined;
    throw UsageError("unknown pde kind: " + s);
}

double EnvironmentSpec::coeff(const std::string& name) const {
    auto it = coeffs.find(name);
    if (it == coeffs.end()) throw MissingInputError("environment " + id + " has no coefficient " + name);
    return it->second;
}

std::size_t EnvironmentSpec::degrees_of_variation() const {
    switch (kind) {
        case PdeKind::pendulum: return 4;
        case PdeKind::gray_scott: return 2;
        case PdeKind::burgers: return 3;
        case PdeKind::combined: return 4;
    }
    return 0;
}

std::string EnvironmentSpec::value_key() const {
    std::ostringstream os;
    os.precision(17);
    os << forcing;
    for (const auto& [k, v] : coeffs) os << "|" << k << "=" << v;
    return os.str();
}

DomainSpec default_domain(PdeKind kind) {
    switch (kind) {
        case PdeKind::pendulum: return DomainSpec{0.0, 0, 0, false};
        case PdeKind::gray_scott: return DomainSpec{64.0, 32, 2, true};  // ds = 2
        case PdeKind::burgers: return DomainSpec{2.0 * M_PI, 256, 1, true};
        case PdeKind::combined: return DomainSpec{16.0, 256, 1, true};
    }
    return {};
}

namespace {

EnvironmentSpec base_env(PdeKind kind, const std::string& pool, std::size_t index) {
    EnvironmentSpec e;
    e.kind = kind;
    e.pool = pool;
    e.id = (pool == "train" ? "tr" : "ad") + std::to_string(index);
    e.domain = default_domain(kind);
    return e;
}

// Discrete factor sets of the evaluation protocol.
std::vector<EnvironmentSpec> pendulum_grid_pool(const std::string& pool) {
    std::vector<EnvironmentSpec> out;
    if (pool == "train") {
        // damped only (F = 0) or driven only (alpha = 0)
        for (double w0 : {0.5, 0.7})
            for (double alpha : {0.2, 0.5}) {
                EnvironmentSpec e = base_env(PdeKind::pendulum, pool, out.size());
                e.coeffs = {{"omega0", w0}, {"alpha", alpha}, {"F", 0.0}, {"w_f", 0.0}};
                out.push_back(e);
            }
        for (double w0 : {0.5, 0.7})
            for (double wf : {0.75, 1.0})
                for (double F : {0.1, 0.2}) {
                    EnvironmentSpec e = base_env(PdeKind::pendulum, pool, out.size());
                    e.coeffs = {{"omega0", w0}, {"alpha", 0.0}, {"F", F}, {"w_f", wf}};
                    out.push_back(e);
                }
    } else {
        // both damping and forcing active
        for (double w0 : {0.5, 0.75, 1.0})
            for (double wf : {0.3, 0.5, 0.7, 1.0})
                for (double F : {0.05, 0.1, 0.15, 0.2})
                    for (double alpha : {0.1, 0.5}) {
                        EnvironmentSpec e = base_env(PdeKind::pendulum, pool, out.size());
                        e.coeffs = {{"omega0", w0}, {"alpha", alpha}, {"F", F}, {"w_f", wf}};
                        out.push_back(e);
                    }
    }
    return out;
}

std::vector<EnvironmentSpec> gray_scott_grid_pool(const std::string& pool) {
    const std::vector<double> Fs = pool == "train" ? std::vector<double>{0.03, 0.039}
                                                   : std::vector<double>{0.025, 0.042};
    const std::vector<double> ks = pool == "train" ? std::vector<double>{0.058, 0.062}
                                                   : std::vector<double>{0.050, 0.065};
    std::vector<EnvironmentSpec> out;
    for (double F : Fs)
        for (double k : ks) {
            EnvironmentSpec e = base_env(PdeKind::gray_scott, pool, out.size());
            e.coeffs = {{"F", F}, {"k", k}};
            out.push_back(e);
        }
    return out;
}

std::vector<EnvironmentSpec> burgers_grid_pool(const std::string& pool) {
    std::vector<EnvironmentSpec> out;
    if (pool == "train") {
        for (double nu : {5e-1, 5e-2, 5e-4})
            for (int forced : {0, 1}) {
                EnvironmentSpec e = base_env(PdeKind::burgers, pool, out.size());
                e.forcing = forced ? "sin_cos" : "none";
                e.coeffs = {{"nu", nu}, {"F", forced ? 0.5 : 0.0}, {"w_f", forced ? 1.5 : 0.0}};
                out.push_back(e);
            }
    } else {
        for (double nu : {1.0, 5e-5})
            for (double wf : {1.5, 3.0}) {
                EnvironmentSpec e = base_env(PdeKind::burgers, pool, out.size());
                e.forcing = "gauss_x";
                e.coeffs = {{"nu", nu}, {"F", 0.5}, {"w_f", wf}};
                out.push_back(e);
            }
    }
    return out;
}

// Continuous pools vary coefficients only (no forcing), so the dynamics stay
// autonomous; the discrete grid carries the forced/damped evaluation protocol.
EnvironmentSpec pendulum_range_draw(const std::string& pool, std::size_t index, RngStream& rng) {
    EnvironmentSpec e = base_env(PdeKind::pendulum, pool, index);
    e.coeffs = {{"omega0", rng.uniform(0.5, 1.0)},
                {"alpha", rng.uniform(0.0, 0.5)},
                {"F", 0.0},
                {"w_f", 0.0}};
    return e;
}

EnvironmentSpec range_draw(PdeKind kind, const std::string& pool, std::size_t index, RngStream& rng) {
    switch (kind) {
        case PdeKind::pendulum: return pendulum_range_draw(pool, index, rng);
        case PdeKind::gray_scott: {
            EnvironmentSpec e = base_env(kind, pool, index);
            e.coeffs = {{"F", rng.uniform(0.03, 0.04)}, {"k", rng.uniform(0.058, 0.062)}};
            return e;
        }
        case PdeKind::burgers: {
            EnvironmentSpec e = base_env(kind, pool, index);
            e.coeffs = {{"nu", rng.uniform(1e-4, 0.5)}, {"F", 0.0}, {"w_f", 0.0}};
            return e;
        }
        case PdeKind::combined: {
            EnvironmentSpec e = base_env(kind, pool, index);
            e.coeffs = {{"alpha", rng.uniform(0.5, 1.0)},
                        {"beta", rng.uniform(0.0, 0.5)},
                        {"delta", rng.uniform(0.0, 1.0)},
                        {"gamma", rng.uniform(0.0, 1.0)}};
            return e;
        }
    }
    throw UsageError("bad kind");
}

}  // namespace

std::vector<EnvironmentSpec> sample_environments(PdeKind kind, std::size_t n, const std::string& pool,
                                                 SamplingMode mode, std::uint64_t seed,
                                                 const std::vector<EnvironmentSpec>& avoid) {
    if (n < 1) throw UsageError("need at least one environment");
    if (pool != "train" && pool != "adapt") throw UsageError("pool must be train or adapt");
    if (kind == PdeKind::combined && mode == SamplingMode::grid)
        throw UsageError("combined equation has no discrete factor grid; use range sampling");

    std::set<std::string> taken;
    for (const auto& e : avoid) taken.insert(e.value_key());

    RngStream rng(seed, std::string("envs/") + pde_kind_name(kind) + "/" + pool);
    std::vector<EnvironmentSpec> out;

    if (mode == SamplingMode::grid) {
        std::vector<EnvironmentSpec> pool_envs;
        switch (kind) {
            case PdeKind::pendulum: pool_envs = pendulum_grid_pool(pool); break;
            case PdeKind::gray_scott: pool_envs = gray_scott_grid_pool(pool); break;
            case PdeKind::burgers: pool_envs = burgers_grid_pool(pool); break;
            default: break;
        }
        std::erase_if(pool_envs, [&](const EnvironmentSpec& e) { return taken.count(e.value_key()); });
        if (n > pool_envs.size())
            throw UsageError("requested " + std::to_string(n) + " environments but the discrete " +
                             pool + " pool holds only " + std::to_string(pool_envs.size()));
        // seeded Fisher-Yates, then keep the first n in draw order
        for (std::size_t i = pool_envs.size(); i > 1; --i)
            std::swap(pool_envs[i - 1], pool_envs[rng.uniform_int(i)]);
        out.assign(pool_envs.begin(), pool_envs.begin() + n);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i].id = (pool == "train" ? "tr" : "ad") + std::to_string(i);
    } else {
        while (out.size() < n) {
            EnvironmentSpec e = range_draw(kind, pool, out.size(), rng);
            if (taken.count(e.value_key())) continue;  // exact collision: re-draw
            taken.insert(e.value_key());
            out.push_back(e);
        }
    }
    return out;
}

}  // namespace capde
