#pragma once

// Elementary symmetric functions, the Gårding cones Γ_k and small symmetric
// eigenproblems. Everything here is a pure function of its arguments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "khess/errors.hpp"

namespace khess {

/// Eigenvalues of a Hessian, λ ∈ ℝⁿ with n ≥ 1.
struct EigenSpectrum {
    std::vector<double> values;

    EigenSpectrum() = default;
    explicit EigenSpectrum(std::vector<double> v) : values(std::move(v)) {}
    EigenSpectrum(std::initializer_list<double> v) : values(v) {}

    int size() const noexcept { return static_cast<int>(values.size()); }
    double operator[](std::size_t i) const { return values[i]; }
    std::span<const double> view() const noexcept { return values; }
};

/// σ_1..σ_k of a spectrum together with the Γ_k membership verdict.
struct ConeReport {
    int k = 0;
    std::vector<double> sigmas;  // sigmas[j-1] = σ_j
    bool admissible = false;
};

/// Binomial coefficient C(n, r) as a double; zero outside 0 ≤ r ≤ n.
inline double binomial(int n, int r) {
    if (r < 0 || n < 0 || r > n) return 0.0;
    r = std::min(r, n - r);
    double c = 1.0;
    for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
    return c;
}

/// Coefficients σ_0..σ_{jmax} of ∏(1 + λ_i t), accumulated one factor at a time.
inline std::vector<double> elementary_symmetric(std::span<const double> lambda, int jmax) {
    const int n = static_cast<int>(lambda.size());
    jmax = std::max(0, std::min(jmax, n));
    std::vector<double> c(static_cast<std::size_t>(jmax) + 1, 0.0);
    c[0] = 1.0;
    for (int i = 0; i < n; ++i) {
        const int top = std::min(i + 1, jmax);
        for (int j = top; j >= 1; --j) c[j] += lambda[i] * c[j - 1];
    }
    return c;
}

/// σ_j(λ), with σ_0 = 1 and σ_j = 0 for j > n.
inline double sigma(int j, std::span<const double> lambda) {
    if (j < 0) throw ParameterError("sigma: order must be non-negative");
    if (j == 0) return 1.0;
    if (j > static_cast<int>(lambda.size())) return 0.0;
    return elementary_symmetric(lambda, j)[j];
}

inline double sigma(int j, const EigenSpectrum& lambda) { return sigma(j, lambda.view()); }

/// Γ_k membership by strict positivity of σ_1..σ_k (no tolerance: the cone is open).
inline ConeReport cone_membership(std::span<const double> lambda, int k) {
    const int n = static_cast<int>(lambda.size());
    if (k < 1 || k > n)
        throw ParameterError("cone_membership: k=" + std::to_string(k) + " outside 1.." +
                             std::to_string(n));
    auto c = elementary_symmetric(lambda, k);
    ConeReport rep;
    rep.k = k;
    rep.sigmas.assign(c.begin() + 1, c.end());
    rep.admissible = std::all_of(rep.sigmas.begin(), rep.sigmas.end(),
                                 [](double s) { return s > 0.0; });
    return rep;
}

inline ConeReport cone_membership(const EigenSpectrum& lambda, int k) {
    return cone_membership(lambda.view(), k);
}

/// ∂σ_j/∂λ_i = σ_{j-1}(λ with entry i removed). `i` is zero-based.
inline double sigma_partial(int j, std::span<const double> lambda, int i) {
    const int n = static_cast<int>(lambda.size());
    if (i < 0 || i >= n)
        throw ParameterError("sigma_partial: index " + std::to_string(i) + " out of range");
    if (j < 1 || j > n) throw ParameterError("sigma_partial: order out of range");
    std::vector<double> rest;
    rest.reserve(static_cast<std::size_t>(n) - 1);
    for (int m = 0; m < n; ++m)
        if (m != i) rest.push_back(lambda[m]);
    return sigma(j - 1, rest);
}

inline double sigma_partial(int j, const EigenSpectrum& lambda, int i) {
    return sigma_partial(j, lambda.view(), i);
}

/// Hessian spectrum of a radial function: (u″, u′/r, …, u′/r).
inline EigenSpectrum radial_eigenvalues(double du, double d2u, double r, int n) {
    if (!(r > 0.0)) throw ParameterError("radial_eigenvalues: r must be positive");
    if (n < 1) throw ParameterError("radial_eigenvalues: dimension must be positive");
    std::vector<double> v(static_cast<std::size_t>(n), du / r);
    v[0] = d2u;
    return EigenSpectrum(std::move(v));
}

/// S_k of a radial function, C(n-1,k)(u′/r)^k + C(n-1,k-1) u″ (u′/r)^{k-1}.
inline double sk_radial(double du, double d2u, double r, int n, int k) {
    if (!(r > 0.0)) throw ParameterError("sk_radial: r must be positive");
    if (k < 1 || k > n) throw ParameterError("sk_radial: k outside 1..n");
    const double q = du / r;
    return binomial(n - 1, k) * std::pow(q, k) + binomial(n - 1, k - 1) * d2u * std::pow(q, k - 1);
}

/// Dense square matrix, row-major. Only used for the small Hessians here.
struct SquareMatrix {
    int n = 0;
    std::vector<double> a;

    SquareMatrix() = default;
    explicit SquareMatrix(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}
    SquareMatrix(int dim, std::vector<double> entries) : n(dim), a(std::move(entries)) {
        if (a.size() != static_cast<std::size_t>(n) * n)
            throw ParameterError("SquareMatrix: entry count does not match dimension");
    }

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

    static SquareMatrix identity(int dim) {
        SquareMatrix m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline constexpr int kMaxJacobiSize = 8;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
/// descending. Iterates until the off-diagonal Frobenius norm is ≤ tol.
inline EigenSpectrum symmetric_eigenvalues(const SquareMatrix& m, double tol = 1e-14) {
    const int n = m.n;
    if (n < 1 || n > kMaxJacobiSize)
        throw ParameterError("symmetric_eigenvalues: size must be in 1..8");
    double scale = 0.0;
    for (double x : m.a) scale = std::max(scale, std::abs(x));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(m(i, j) - m(j, i)) > 1e-12 * std::max(scale, 1e-300))
                throw ParameterError("symmetric_eigenvalues: matrix is not symmetric");

    SquareMatrix a = m;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) a(j, i) = a(i, j);

    auto off_norm = [&] {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    const double target = std::max(tol * std::max(scale, 1.0), 0.0);
    for (int sweep = 0; sweep < 100 && off_norm() > target; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int r = 0; r < n; ++r) {
                    const double arp = a(r, p), arq = a(r, q);
                    a(r, p) = c * arp - s * arq;
                    a(r, q) = s * arp + c * arq;
                }
                for (int r = 0; r < n; ++r) {
                    const double apr = a(p, r), aqr = a(q, r);
                    a(p, r) = c * apr - s * aqr;
                    a(q, r) = s * apr + c * aqr;
                }
                a(p, q) = a(q, p) = 0.0;
            }
        }
    }

    std::vector<double> ev(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ev[i] = a(i, i);
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return EigenSpectrum(std::move(ev));
}

/// S_k(A) = σ_k of the eigenvalues of a symmetric matrix.
inline double sk_matrix(const SquareMatrix& a, int k) {
    return sigma(k, symmetric_eigenvalues(a));
}

}  // namespace khess
