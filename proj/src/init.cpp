#include "capde/init.hpp"

#include <cmath>

#include "capde/errors.hpp"

namespace capde {

const char* init_kind_name(InitKind k) {
    switch (k) {
        case InitKind::orthogonal: return "orthogonal";
        case InitKind::kaiming: return "kaiming";
        case InitKind::xavier: return "xavier";
        case InitKind::lora: return "lora";
    }
    return "?";
}

InitKind parse_init_kind(const std::string& s) {
    if (s == "orthogonal") return InitKind::orthogonal;
    if (s == "kaiming") return InitKind::kaiming;
    if (s == "xavier") return InitKind::xavier;
    if (s == "lora") return InitKind::lora;
    throw UsageError("unknown init kind: " + s);
}

Tensor orthogonal_init(std::size_t rows, std::size_t cols, RngStream& rng) {
    if (rows < 1 || cols < 1) throw ShapeError("orthogonal_init: rows, cols must be >= 1");
    const std::size_t n = std::max(rows, cols);
    const std::size_t m = std::min(rows, cols);
    // Gaussian n x m, then modified Gram-Schmidt with one re-orthogonalization
    // pass to push the residual well below 1e-10.
    std::vector<std::vector<double>> q(m, std::vector<double>(n));
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < n; ++i) q[j][i] = rng.normal();
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t p = 0; p < j; ++p) {
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += q[j][i] * q[p][i];
                for (std::size_t i = 0; i < n; ++i) q[j][i] -= dot * q[p][i];
            }
            double norm = 0.0;
            for (std::size_t i = 0; i < n; ++i) norm += q[j][i] * q[j][i];
            norm = std::sqrt(norm);
            for (std::size_t i = 0; i < n; ++i) q[j][i] /= norm;
        }
    }
    Tensor out({rows, cols});
    if (rows >= cols) {
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) out.at2(i, j) = q[j][i];
    } else {
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) out.at2(i, j) = q[i][j];
    }
    return out;
}

Tensor kaiming_init(std::size_t rows, std::size_t cols, RngStream& rng) {
    const double std = std::sqrt(2.0 / static_cast<double>(rows));
    Tensor out({rows, cols});
    for (auto& x : out.data) x = std * rng.normal();
    return out;
}

Tensor xavier_init(std::size_t rows, std::size_t cols, RngStream& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor out({rows, cols});
    for (auto& x : out.data) x = rng.uniform(-bound, bound);
    return out;
}

Tensor lowrank_a_init(InitKind k, std::size_t d_in, std::size_t r, RngStream& rng) {
    switch (k) {
        case InitKind::orthogonal: return orthogonal_init(d_in, r, rng);
        case InitKind::kaiming: return kaiming_init(d_in, r, rng);
        case InitKind::xavier: return xavier_init(d_in, r, rng);
        case InitKind::lora: {
            const double std = 1.0 / std::sqrt(static_cast<double>(r));
            Tensor out({d_in, r});
            for (auto& x : out.data) x = std * rng.normal();
            return out;
        }
    }
    throw UsageError("bad init kind");
}

Tensor lowrank_b_init(InitKind k, std::size_t r, std::size_t d_out, RngStream& rng) {
    switch (k) {
        case InitKind::orthogonal: return orthogonal_init(r, d_out, rng);
        case InitKind::kaiming: return kaiming_init(r, d_out, rng);
        case InitKind::xavier: return xavier_init(r, d_out, rng);
        case InitKind::lora: return Tensor::zeros({r, d_out});
    }
    throw UsageError("bad init kind");
}

}  // namespace capde
