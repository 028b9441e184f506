#pragma once

#include "capde/rng.hpp"
#include "capde/tensor.hpp"

namespace capde {

enum class InitKind { orthogonal, kaiming, xavier, lora };

const char* init_kind_name(InitKind k);
InitKind parse_init_kind(const std::string& s);

// Orthonormal columns when rows >= cols, orthonormal rows otherwise.
// Deterministic for a given stream state.
Tensor orthogonal_init(std::size_t rows, std::size_t cols, RngStream& rng);

// Fan-in scaled normal, std = sqrt(2 / fan_in).
Tensor kaiming_init(std::size_t rows, std::size_t cols, RngStream& rng);

// Fan-average scaled uniform, bound = sqrt(6 / (fan_in + fan_out)).
Tensor xavier_init(std::size_t rows, std::size_t cols, RngStream& rng);

// The low-rank pair initializers for a chosen scheme: A (d_in x r) and
// B (r x d_out). LoRA style draws A gaussian with std 1/sqrt(r) and zeros B.
Tensor lowrank_a_init(InitKind k, std::size_t d_in, std::size_t r, RngStream& rng);
Tensor lowrank_b_init(InitKind k, std::size_t r, std::size_t d_out, RngStream& rng);

}  // namespace capde
