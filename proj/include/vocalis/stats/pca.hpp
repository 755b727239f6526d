#pragma once

#include "vocalis/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace vocalis::stats {

using Matrix = std::vector<std::vector<double>>;  // row-major

struct SymmetricEigen {
    std::vector<double> values;  // descending
    Matrix vectors;              // vectors[k] is the unit eigenvector for values[k]
};

// Cyclic Jacobi rotations on a symmetric matrix.
inline SymmetricEigen jacobi_eigen(Matrix a, int max_sweeps = 100) {
    const std::size_t n = a.size();
    for (const auto& row : a) require(row.size() == n, ErrorKind::invalid_argument, "matrix is not square");
    Matrix v(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0, diag = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            diag += a[i][i] * a[i][i];
            for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        }
        if (off <= 1e-32 * diag || off == 0.0) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a[x][x] > a[y][y]; });
    SymmetricEigen out;
    for (auto k : order) {
        out.values.push_back(a[k][k]);
        std::vector<double> vec(n);
        for (std::size_t i = 0; i < n; ++i) vec[i] = v[i][k];
        out.vectors.push_back(std::move(vec));
    }
    return out;
}

struct PcaResult {
    Matrix components;                      // components[k][feature], orthonormal rows
    std::vector<double> eigenvalues;
    std::vector<double> explained_variance_ratio;
    Matrix scores;                          // scores[observation][k]
    std::vector<double> means;
    std::vector<double> scales;             // 1 when not standardized
    bool standardized = true;
};

// Principal components of the centred (and, by default, z-scored) data.
// Each loading vector is signed so its largest-magnitude entry is positive.
inline PcaResult pca(const Matrix& data, bool standardize = true) {
    require(data.size() >= 2, ErrorKind::invalid_argument, "PCA needs at least 2 observations");
    const std::size_t p = data.front().size();
    require(p >= 2, ErrorKind::invalid_argument, "PCA needs at least 2 features");
    for (const auto& row : data) {
        require(row.size() == p, ErrorKind::invalid_argument, "ragged PCA input");
        for (double v : row) require(std::isfinite(v), ErrorKind::invalid_argument, "PCA input has missing values");
    }
    const auto n = static_cast<double>(data.size());
    PcaResult out;
    out.standardized = standardize;
    out.means.assign(p, 0.0);
    out.scales.assign(p, 1.0);
    for (const auto& row : data) {
        for (std::size_t j = 0; j < p; ++j) out.means[j] += row[j];
    }
    for (double& m : out.means) m /= n;
    Matrix x(data.size(), std::vector<double>(p));
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < p; ++j) x[i][j] = data[i][j] - out.means[j];
    }
    if (standardize) {
        for (std::size_t j = 0; j < p; ++j) {
            double ss = 0.0;
            for (const auto& row : x) ss += row[j] * row[j];
            const double sd = std::sqrt(ss / (n - 1.0));
            require(sd > 0.0, ErrorKind::degenerate, "constant column " + std::to_string(j) + " cannot be standardized");
            out.scales[j] = sd;
            for (auto& row : x) row[j] /= sd;
        }
    }
    Matrix cov(p, std::vector<double>(p, 0.0));
    for (const auto& row : x) {
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = a; b < p; ++b) cov[a][b] += row[a] * row[b];
        }
    }
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = a; b < p; ++b) {
            cov[a][b] /= (n - 1.0);
            cov[b][a] = cov[a][b];
        }
    }
    auto eig = jacobi_eigen(cov);
    double total = 0.0;
    for (double& ev : eig.values) {
        ev = std::max(ev, 0.0);
        total += ev;
    }
    require(total > 0.0, ErrorKind::degenerate, "data has zero variance");
    for (std::size_t k = 0; k < p; ++k) {
        auto& vec = eig.vectors[k];
        const auto big = std::max_element(vec.begin(), vec.end(),
                                          [](double a, double b) { return std::abs(a) < std::abs(b); });
        if (*big < 0) {
            for (double& c : vec) c = -c;
        }
        out.explained_variance_ratio.push_back(eig.values[k] / total);
    }
    out.eigenvalues = eig.values;
    out.components = eig.vectors;
    out.scores.assign(data.size(), std::vector<double>(p, 0.0));
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t k = 0; k < p; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < p; ++j) s += x[i][j] * out.components[k][j];
            out.scores[i][k] = s;
        }
    }
    return out;
}

} // namespace vocalis::stats
