#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "khess/errors.hpp"
#include "khess/hessian.hpp"

using namespace khess;

TEST(Sigma, SmallCases) {
    EXPECT_DOUBLE_EQ(sigma(2, EigenSpectrum{1, 2, 3}), 11.0);
    EXPECT_DOUBLE_EQ(sigma(3, EigenSpectrum{1, 1, 1, 1}), 4.0);
    EXPECT_DOUBLE_EQ(sigma(0, EigenSpectrum{5, -7}), 1.0);
    EXPECT_DOUBLE_EQ(sigma(3, EigenSpectrum{5, -7}), 0.0);
    EXPECT_THROW(sigma(-1, EigenSpectrum{1, 2}), ParameterError);
}

TEST(Sigma, LargeNMatchesBinomial) {
    std::vector<double> ones(40, 1.0);
    for (int j = 0; j <= 40; j += 7) EXPECT_NEAR(sigma(j, ones), binomial(40, j), 1e-6 * binomial(40, j));
}

TEST(Cone, Membership) {
    auto a = cone_membership(EigenSpectrum{3, -1}, 1);
    EXPECT_TRUE(a.admissible);
    EXPECT_DOUBLE_EQ(a.sigmas[0], 2.0);
    auto b = cone_membership(EigenSpectrum{3, -1}, 2);
    EXPECT_FALSE(b.admissible);
    EXPECT_DOUBLE_EQ(b.sigmas[1], -3.0);
    auto c = cone_membership(EigenSpectrum{1, 1, 1}, 3);
    EXPECT_TRUE(c.admissible);
    EXPECT_EQ(c.sigmas, (std::vector<double>{3, 3, 1}));
    EXPECT_THROW(cone_membership(EigenSpectrum{1, 1}, 3), ParameterError);
    EXPECT_THROW(cone_membership(EigenSpectrum{1, 1}, 0), ParameterError);
}

TEST(Cone, BoundaryIsExcluded) {
    EXPECT_FALSE(cone_membership(EigenSpectrum{1, 0}, 2).admissible);
    EXPECT_FALSE(cone_membership(EigenSpectrum{1, -1}, 1).admissible);
}

TEST(SigmaPartial, Examples) {
    EXPECT_DOUBLE_EQ(sigma_partial(2, EigenSpectrum{1, 2, 3}, 0), 5.0);
    EXPECT_DOUBLE_EQ(sigma_partial(1, EigenSpectrum{-4, 9, 0.5}, 2), 1.0);
    EXPECT_DOUBLE_EQ(sigma_partial(3, EigenSpectrum{1, 2, 3, 4}, 3), 11.0);
    EXPECT_THROW(sigma_partial(2, EigenSpectrum{1, 2, 3}, 3), ParameterError);
    EXPECT_THROW(sigma_partial(2, EigenSpectrum{1, 2, 3}, -1), ParameterError);
}

TEST(SigmaPartial, MatchesFiniteDifference) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-2, 2);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> l(5);
        for (auto& x : l) x = U(rng);
        for (int i = 0; i < 5; ++i) {
            auto lp = l, lm = l;
            lp[i] += 1e-6;
            lm[i] -= 1e-6;
            const double fd = (sigma(3, lp) - sigma(3, lm)) / 2e-6;
            EXPECT_NEAR(sigma_partial(3, l, i), fd, 1e-7);
        }
    }
}

TEST(Radial, Eigenvalues) {
    EXPECT_EQ(radial_eigenvalues(2, 4, 1, 3).values, (std::vector<double>{4, 2, 2}));
    EXPECT_EQ(radial_eigenvalues(0, 1.5, 1, 2).values, (std::vector<double>{1.5, 0}));
    EXPECT_EQ(radial_eigenvalues(3, 1, 3, 4).values, (std::vector<double>{1, 1, 1, 1}));
    EXPECT_THROW(radial_eigenvalues(1, 1, 0, 2), ParameterError);
    EXPECT_THROW(radial_eigenvalues(1, 1, -1, 2), ParameterError);
}

TEST(Radial, SkClosedForm) {
    EXPECT_DOUBLE_EQ(sk_radial(2, 4, 1, 3, 2), 20.0);
    for (double r : {0.1, 0.5, 0.9}) EXPECT_NEAR(sk_radial(r, 1, r, 2, 2), 1.0, 1e-15);
    for (double r : {0.1, 0.5, 0.9}) EXPECT_NEAR(sk_radial(r / 2, 0.5, r, 2, 1), 1.0, 1e-15);
    EXPECT_THROW(sk_radial(1, 1, 0, 2, 1), ParameterError);
    EXPECT_THROW(sk_radial(1, 1, 1, 2, 3), ParameterError);
}

TEST(Radial, SkMatchesSigmaOfSpectrum) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-3, 3), R(0.05, 2);
    for (int t = 0; t < 200; ++t) {
        const int n = 2 + t % 4;
        const int k = 1 + t % n;
        const double du = U(rng), d2u = U(rng), r = R(rng);
        const double a = sk_radial(du, d2u, r, n, k);
        const double b = sigma(k, radial_eigenvalues(du, d2u, r, n));
        EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(b)));
    }
}

// u = r²: the flux r^{n-k}(u')^k differenced on a grid reproduces sk_radial to O(h).
TEST(Radial, DivergenceFormFirstOrder) {
    const int n = 3, k = 2;
    const double r0 = 0.7;
    auto flux = [&](double r) { return std::pow(r, n - k) * std::pow(2.0 * r, k); };
    const double exact = sk_radial(2 * r0, 2.0, r0, n, k);
    double prev_err = 0.0;
    for (double h : {1e-2, 5e-3, 2.5e-3}) {
        const double df = (flux(r0 + h) - flux(r0)) / h;
        const double approx = binomial(n - 1, k - 1) / (k * std::pow(r0, n - 1)) * df;
        const double err = std::abs(approx - exact);
        EXPECT_LT(err, 20.0 * h);
        if (prev_err > 0) {
            EXPECT_NEAR(prev_err / err, 2.0, 0.1);
        }
        prev_err = err;
    }
}

TEST(Jacobi, Examples) {
    EXPECT_EQ(symmetric_eigenvalues(SquareMatrix::identity(3)).values,
              (std::vector<double>{1, 1, 1}));
    auto d = symmetric_eigenvalues(SquareMatrix(2, {5, 0, 0, -2}));
    EXPECT_EQ(d.values, (std::vector<double>{5, -2}));
    auto e = symmetric_eigenvalues(SquareMatrix(2, {2, 1, 1, 2}));
    EXPECT_NEAR(e[0], 3.0, 1e-14);
    EXPECT_NEAR(e[1], 1.0, 1e-14);
}

TEST(Jacobi, Rejects) {
    EXPECT_THROW(symmetric_eigenvalues(SquareMatrix(2, {1, 2, 0, 1})), ParameterError);
    EXPECT_THROW(symmetric_eigenvalues(SquareMatrix::identity(9)), ParameterError);
    EXPECT_THROW(SquareMatrix(2, {1, 2, 3}), ParameterError);
}

TEST(Jacobi, TraceAndDeterminantPreserved) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> N;
    for (int t = 0; t < 100; ++t) {
        const int n = 2 + t % 7;
        SquareMatrix a(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) a(i, j) = a(j, i) = N(rng);
        auto ev = symmetric_eigenvalues(a);
        double tr = 0, fro = 0, evsq = 0;
        for (int i = 0; i < n; ++i) tr += a(i, i);
        for (double x : a.a) fro += x * x;
        for (double x : ev.values) evsq += x * x;
        EXPECT_NEAR(sigma(1, ev), tr, 1e-12 * std::max(1.0, std::abs(tr)) + 1e-12);
        EXPECT_NEAR(evsq, fro, 1e-11 * fro);
        for (int i = 1; i < n; ++i) EXPECT_GE(ev[i - 1], ev[i]);
    }
}
