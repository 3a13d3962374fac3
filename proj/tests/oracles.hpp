#pragma once

// Reference computations shared by the unit tests and the acceptance binary. They avoid the
// library's own integrators and matrix code.

#include <cmath>
#include <vector>

#include "mmc/params.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix identity(std::size_t n) {
    Matrix m(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
    return m;
}

inline Matrix multiply(const Matrix& a, const Matrix& b) {
    const std::size_t n = a.size();
    Matrix c(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
    return c;
}

/// exp(A) by scaling and squaring with a 30-term Taylor series.
inline Matrix expm(Matrix a) {
    const std::size_t n = a.size();
    double norm = 0.0;
    for (const auto& row : a) {
        double s = 0.0;
        for (double v : row) s += std::abs(v);
        norm = std::max(norm, s);
    }
    int squarings = 0;
    while (norm > 0.25) {
        norm *= 0.5;
        ++squarings;
    }
    const double scale = std::ldexp(1.0, -squarings);
    for (auto& row : a)
        for (double& v : row) v *= scale;
    Matrix result = identity(n);
    Matrix term = identity(n);
    for (int k = 1; k <= 30; ++k) {
        term = multiply(term, a);
        for (auto& row : term)
            for (double& v : row) v /= k;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) result[i][j] += term[i][j];
    }
    for (int s = 0; s < squarings; ++s) result = multiply(result, result);
    return result;
}

/// Exact solution of x' = M x + b after time h (constant b), via the augmented exponential.
inline std::vector<double> linear_step(const Matrix& M, const std::vector<double>& b,
                                       const std::vector<double>& x0, double h) {
    const std::size_t n = M.size();
    Matrix aug(n + 1, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) aug[i][j] = M[i][j] * h;
        aug[i][n] = b[i] * h;
    }
    const Matrix e = expm(aug);
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = e[i][n];
        for (std::size_t j = 0; j < n; ++j) x[i] += e[i][j] * x0[j];
    }
    return x;
}

/// Arm-current system with fixed arm voltages and load voltage:
/// d[I1, I2]/dt = M [I1, I2] + b.
struct CurrentSystem {
    Matrix M;
    std::vector<double> b;
};

inline CurrentSystem current_system(const mmc::ConverterParams& p, double V1, double V2,
                                    double Va) {
    const double a = p.L + p.La, c = p.La;
    const double det = a * a - c * c;
    // inverse of [[a, c], [c, a]]
    const double i00 = a / det, i01 = -c / det;
    const double r0 = -(p.R + p.Ra), r1 = -p.Ra;
    CurrentSystem s;
    s.M = {{i00 * r0 + i01 * r1, i00 * r1 + i01 * r0}, {i01 * r0 + i00 * r1, i01 * r1 + i00 * r0}};
    s.b = {i00 * (V1 - Va) + i01 * (V2 - Va), i01 * (V1 - Va) + i00 * (V2 - Va)};
    return s;
}

}  // namespace oracle
