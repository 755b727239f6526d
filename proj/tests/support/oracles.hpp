#pragma once

// Independent reference computations used only by tests. None of these share
// code paths with the library routines they check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

namespace oracle {

// Analytic signal magnitude by direct O(n^2) DFT.
inline std::vector<double> analytic_magnitude(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<long double>> X(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<long double> acc = 0;
        for (std::size_t t = 0; t < n; ++t) {
            const long double ang = -2.0L * std::numbers::pi_v<long double> * k * t / n;
            acc += static_cast<long double>(x[t]) * std::complex<long double>(std::cos(ang), std::sin(ang));
        }
        X[k] = acc;
    }
    std::vector<double> out(n);
    for (std::size_t t = 0; t < n; ++t) {
        std::complex<long double> acc = X[0];
        for (std::size_t k = 1; k < n; ++k) {
            long double w = 0;
            if (2 * k < n) w = 2;
            else if (2 * k == n) w = 1;
            if (w == 0) continue;
            const long double ang = 2.0L * std::numbers::pi_v<long double> * k * t / n;
            acc += w * X[k] * std::complex<long double>(std::cos(ang), std::sin(ang));
        }
        out[t] = static_cast<double>(std::abs(acc) / n);
    }
    return out;
}

// Two-sided signed-rank p by brute-force enumeration of all 2^n sign
// assignments (untied, non-zero differences only).
inline double wilcoxon_enumeration_p(const std::vector<double>& diffs) {
    const std::size_t n = diffs.size();
    std::vector<int> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        int r = 1;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(diffs[j]) < std::abs(diffs[i])) ++r;
        }
        rank[i] = r;
    }
    const int total = static_cast<int>(n * (n + 1) / 2);
    int w_plus = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (diffs[i] > 0) w_plus += rank[i];
    }
    const int observed = std::min(w_plus, total - w_plus);
    std::uint64_t hits = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        int wp = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (std::uint64_t{1} << i)) wp += rank[i];
        }
        if (std::min(wp, total - wp) <= observed) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(std::uint64_t{1} << n);
}

// BH by the direct formula: adj_i = min(1, min_{j : p_j >= p_i} m p_j / r_j),
// with r_j = #{k : p_k <= p_j}. Assumes distinct p-values.
inline std::vector<double> bh_step_up(const std::vector<double>& p) {
    const std::size_t m = p.size();
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        double best = 1.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (p[j] < p[i]) continue;
            std::size_t r = 0;
            for (std::size_t k = 0; k < m; ++k) r += p[k] <= p[j];
            best = std::min(best, static_cast<double>(m) * p[j] / static_cast<double>(r));
        }
        out[i] = best;
    }
    return out;
}

// Pearson r from raw sums in long double.
inline double pearson_direct(const std::vector<double>& x, const std::vector<double>& y) {
    long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    const long double n = static_cast<long double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += static_cast<long double>(x[i]) * x[i];
        syy += static_cast<long double>(y[i]) * y[i];
        sxy += static_cast<long double>(x[i]) * y[i];
    }
    return static_cast<double>((n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy)));
}

// Eigenvalues of a symmetric 3x3 matrix, closed-form trigonometric solution, descending.
inline std::vector<double> eigenvalues_3x3(const double a[3][3]) {
    const double p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    const double q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    if (p1 == 0.0) {
        std::vector<double> d{a[0][0], a[1][1], a[2][2]};
        std::sort(d.rbegin(), d.rend());
        return d;
    }
    const double p2 = (a[0][0] - q) * (a[0][0] - q) + (a[1][1] - q) * (a[1][1] - q) + (a[2][2] - q) * (a[2][2] - q) + 2 * p1;
    const double p = std::sqrt(p2 / 6.0);
    double b[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) b[i][j] = (a[i][j] - (i == j ? q : 0.0)) / p;
    const double det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                       b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    const double r = std::clamp(det / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2 * p * std::cos(phi);
    const double e3 = q + 2 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    const double e2 = 3 * q - e1 - e3;
    return {e1, e2, e3};
}

struct EigenOracle {
    std::vector<double> values;                // descending
    std::vector<std::vector<double>> vectors;  // unit, sign-normalised like the library contract
};

// Eigen's self-adjoint solver on a covariance matrix.
inline EigenOracle eigen_symmetric(const std::vector<std::vector<double>>& m) {
    const auto n = static_cast<Eigen::Index>(m.size());
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = m[i][j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    EigenOracle out;
    for (Eigen::Index k = n - 1; k >= 0; --k) {
        out.values.push_back(solver.eigenvalues()(k));
        std::vector<double> v(n);
        Eigen::Index big = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            v[i] = solver.eigenvectors()(i, k);
            if (std::abs(v[i]) > std::abs(v[big])) big = i;
        }
        if (v[big] < 0)
            for (auto& c : v) c = -c;
        out.vectors.push_back(v);
    }
    return out;
}

inline std::vector<std::vector<double>> covariance(const std::vector<std::vector<double>>& x, bool standardize) {
    const std::size_t n = x.size(), p = x[0].size();
    std::vector<double> mean(p, 0), sd(p, 1);
    for (const auto& r : x)
        for (std::size_t j = 0; j < p; ++j) mean[j] += r[j] / n;
    if (standardize) {
        for (std::size_t j = 0; j < p; ++j) {
            double ss = 0;
            for (const auto& r : x) ss += (r[j] - mean[j]) * (r[j] - mean[j]);
            sd[j] = std::sqrt(ss / (n - 1));
        }
    }
    std::vector<std::vector<double>> c(p, std::vector<double>(p, 0));
    for (const auto& r : x)
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) c[a][b] += (r[a] - mean[a]) / sd[a] * (r[b] - mean[b]) / sd[b] / (n - 1);
    return c;
}

} // namespace oracle
