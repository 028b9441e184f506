#include "capde/tensor.hpp"

#include <cmath>
#include <sstream>

namespace capde {

std::string shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << ",";
        os << s[i];
    }
    os << ")";
    return os.str();
}

void matmul_into(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate) {
    const std::size_t n = a.shape[0], k = a.shape[1], m = b.shape[1];
    if (b.shape[0] != k) throw ShapeError("matmul: inner dims " + shape_str(a.shape) + " @ " + shape_str(b.shape));
    if (!accumulate) std::fill(c.data.begin(), c.data.end(), 0.0);
    const double* pa = a.data.data();
    const double* pb = b.data.data();
    double* pc = c.data.data();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = pa[i * k + p];
            if (aip == 0.0) continue;
            const double* brow = pb + p * m;
            double* crow = pc + i * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
        }
    }
}

void matmul_at_b_into(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate) {
    // a (n,k), b (n,m) -> c (k,m) = a^T b
    const std::size_t n = a.shape[0], k = a.shape[1], m = b.shape[1];
    if (!accumulate) std::fill(c.data.begin(), c.data.end(), 0.0);
    const double* pa = a.data.data();
    const double* pb = b.data.data();
    double* pc = c.data.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = pa + i * k;
        const double* brow = pb + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = arow[p];
            if (aip == 0.0) continue;
            double* crow = pc + p * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
        }
    }
}

void matmul_a_bt_into(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate) {
    // a (n,m), b (k,m) -> c (n,k) = a b^T
    const std::size_t n = a.shape[0], m = a.shape[1], k = b.shape[0];
    if (!accumulate) std::fill(c.data.begin(), c.data.end(), 0.0);
    const double* pa = a.data.data();
    const double* pb = b.data.data();
    double* pc = c.data.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = pa + i * m;
        double* crow = pc + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = pb + p * m;
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += arow[j] * brow[j];
            crow[p] += acc;
        }
    }
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

}  // namespace capde
