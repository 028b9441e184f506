#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace capde {

enum class PdeKind { pendulum, gray_scott, burgers, combined };

const char* pde_kind_name(PdeKind k);
PdeKind parse_pde_kind(const std::string& s);

struct DomainSpec {
    double extent = 0.0;      // physical length per axis
    std::size_t points = 0;   // grid points per axis
    std::size_t dims = 0;     // 0 for ODEs
    bool periodic = true;
};

// One environment's parameter set: coefficient values, forcing descriptor,
// domain, and which pool it was drawn from.
struct EnvironmentSpec {
    std::string id;
    PdeKind kind = PdeKind::pendulum;
    std::map<std::string, double> coeffs;
    std::string forcing = "none";  // none | sin_cos | gauss_x
    DomainSpec domain;
    std::string pool = "train";  // train | adapt

    double coeff(const std::string& name) const;
    std::size_t degrees_of_variation() const;  // 4 pendulum, 2 gray-scott, 3 burgers, 4 combined
    // coefficient tuple as a sortable key, used for disjointness checks
    std::string value_key() const;
};

enum class SamplingMode { grid, range };

DomainSpec default_domain(PdeKind kind);

// Draw n environments for a pool. Grid mode enumerates the discrete factor
// sets (train environments are either damped or driven for the pendulum;
// adaptation environments combine both); range mode samples the continuous
// ranges. Adaptation draws avoid exact collisions with `avoid` (re-draw).
std::vector<EnvironmentSpec> sample_environments(PdeKind kind, std::size_t n, const std::string& pool,
                                                 SamplingMode mode, std::uint64_t seed,
                                                 const std::vector<EnvironmentSpec>& avoid = {});

}  // namespace capde
