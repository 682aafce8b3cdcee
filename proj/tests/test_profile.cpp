#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "khess/errors.hpp"
#include "khess/profile.hpp"

using namespace khess;

namespace {

// f = s^γ: φ(t) = A t^{-(k+1)/(γ-k)}.
double power_phi(int k, double gamma, double t) {
    const double gk = gamma - k;
    const double A = std::pow(std::pow(k + 1.0, k) * (gamma + 1.0) / std::pow(gk, k + 1.0), 1.0 / gk);
    return A * std::pow(t, -(k + 1.0) / gk);
}

}  // namespace

TEST(Profile, PowerCasesMatchClosedForm) {
    Profile p31(Nonlinearity::power(3), 1);
    EXPECT_NEAR(p31.phi(1.0), std::sqrt(2.0), 1e-6 * std::sqrt(2.0));
    Profile p52(Nonlinearity::power(5), 2);
    EXPECT_NEAR(p52.phi(0.5), 2.0 * std::cbrt(2.0), 1e-6 * 2.5);
    for (auto [k, g] : {std::pair{1, 3.0}, {2, 5.0}, {3, 7.0}, {1, 1.5}}) {
        Profile p(Nonlinearity::power(g), k);
        for (double t = 1e-3; t <= 1.0; t *= 1.7) {
            const double ex = power_phi(k, g, t);
            EXPECT_NEAR(p.phi(t), ex, 1e-7 * ex) << "k=" << k << " gamma=" << g << " t=" << t;
        }
    }
}

TEST(Profile, ExponentialClosedForm) {
    Profile p(Nonlinearity::exponential(2), 1);
    EXPECT_NEAR(p.Phi(1.0), std::asin(std::exp(-1.0)), 1e-12);
    EXPECT_NEAR(p.Phi(1.0), 0.376727, 1e-6);
    for (double s : {1e-6, 1e-3, 0.1, 1.0, 5.0, 30.0})
        EXPECT_NEAR(p.Phi(s), std::asin(std::exp(-s)), 1e-9 * std::asin(std::exp(-s)));
    for (double t : {1e-4, 1e-2, 0.3, 1.0, 1.5})
        EXPECT_NEAR(p.phi(t), -std::log(std::sin(t)), 1e-9 * std::abs(std::log(std::sin(t))) + 1e-12);
    EXPECT_NEAR(p.Phi_at_zero(), M_PI / 2, 1e-8);
    EXPECT_THROW(p.phi(1.6), ParameterError);
}

TEST(Profile, ExponentialGeneralRate) {
    // k=1, f = e^{as}: Φ = sqrt(2/a) arcsin(e^{-as/2}).
    for (double a : {0.5, 1.0, 3.0}) {
        Profile p(Nonlinearity::exponential(a), 1);
        for (double s : {0.01, 0.5, 4.0}) {
            const double ex = std::sqrt(2.0 / a) * std::asin(std::exp(-a * s / 2));
            EXPECT_NEAR(p.Phi(s), ex, 1e-9 * ex);
        }
    }
}

TEST(Profile, DivergentTailThrows) {
    EXPECT_THROW(Profile(Nonlinearity::power(1), 1), KellerOssermanViolation);
    EXPECT_THROW(Profile(Nonlinearity::power(1.5), 2), KellerOssermanViolation);
    try {
        Profile(Nonlinearity::power(2), 2);
        FAIL();
    } catch (const KellerOssermanViolation& e) {
        EXPECT_NEAR(e.tail_exponent(), 1.0, 1e-9);
    }
}

TEST(Profile, DirectAgreesWithTable) {
    Profile p(Nonlinearity::exponential(1.0), 2);
    for (double s : {1e-3, 0.2, 3.0, 40.0})
        EXPECT_NEAR(p.Phi(s), p.Phi_direct(s), 1e-9 * p.Phi_direct(s));
    for (double t : {0.01, 0.5}) EXPECT_NEAR(p.phi(t), p.phi_bisect(t), 1e-9 * p.phi(t));
}

TEST(Profile, InversionAndMonotonicity) {
    for (auto f : {Nonlinearity::power(3), Nonlinearity::exponential(2)}) {
        for (int k : {1, 2}) {
            Profile p(f, k);
            double prev_phi = INFINITY;
            for (double t = 1e-4; t <= 1.0; t *= 1.3) {
                if (t >= p.Phi_at_zero()) break;
                const double s = p.phi(t);
                EXPECT_LE(std::abs(p.Phi(s) - t), 1e-8 * t);
                EXPECT_LT(s, prev_phi);
                prev_phi = s;
            }
        }
    }
}

TEST(Profile, DerivativeIdentities) {
    Profile p(Nonlinearity::exponential(1.5), 2);
    for (double t : {1e-3, 0.05, 0.4}) {
        const double h = 1e-5 * t;
        const double fd = (p.phi(t + h) - p.phi(t - h)) / (2 * h);
        EXPECT_NEAR(fd, p.dphi(t), 1e-5 * std::abs(p.dphi(t)));
        const double fd2 = (p.dphi(t + h) - p.dphi(t - h)) / (2 * h);
        EXPECT_NEAR(fd2, p.d2phi(t), 1e-4 * p.d2phi(t));
        auto jet = p.phi_jet(t);
        EXPECT_DOUBLE_EQ(jet.value, p.phi(t));
        EXPECT_DOUBLE_EQ(jet.d1, p.dphi(t));
    }
}

TEST(Profile, CustomMatchesBuiltin) {
    auto f = Nonlinearity::custom([](double s) { return s * s * s; },
                                  [](double s) { return 3 * s * s; }, 3.0);
    Profile p(f, 1);
    for (double t : {1e-3, 0.1, 1.0}) {
        const double ex = power_phi(1, 3, t);
        EXPECT_NEAR(p.phi(t), ex, 1e-6 * ex);
    }
}

TEST(Cf, Examples) {
    EXPECT_NEAR(compute_Cf(Profile(Nonlinearity::power(3), 1)), 2.0, 1e-3);
    EXPECT_NEAR(compute_Cf(Profile(Nonlinearity::power(5), 2)), 2.0, 1e-3);
    EXPECT_NEAR(compute_Cf(Profile(Nonlinearity::power(7), 3)), 2.0, 1e-3);
    EXPECT_NEAR(compute_Cf(Profile(Nonlinearity::power(4), 1)), 5.0 / 3.0, 1e-3);
    EXPECT_NEAR(compute_Cf(Profile(Nonlinearity::exponential(2), 1)), 1.0, 1e-3);
    EXPECT_NEAR(compute_Cf(Profile(Nonlinearity::exponential(1), 3)), 1.0, 1e-3);
}

TEST(Weight, ConstantAndPower) {
    auto c = build_weight(Weight::constant());
    EXPECT_DOUBLE_EQ(c.M(0.3), 0.3);
    EXPECT_DOUBLE_EQ(c.C_m, 1.0);
    auto p1 = build_weight(Weight::power(1));
    EXPECT_DOUBLE_EQ(p1.M(0.4), 0.08);
    EXPECT_NEAR(p1.C_m, 0.5, 1e-12);
    auto p3 = build_weight(Weight::power(3));
    EXPECT_NEAR(p3.C_m, 0.25, 1e-6);
}

TEST(Weight, CustomLimitIsExtrapolated) {
    // m = t + t², M/m → (M/m)' → 1/2.
    auto w = Weight::custom([](double t) { return t + t * t; }, [](double t) { return 1 + 2 * t; },
                            1.0, 1.0, 1.0);
    auto wp = build_weight(w);
    EXPECT_NEAR(wp.C_m, 0.5, 1e-6);
    EXPECT_NEAR(wp.M(0.5), 0.125 + 0.125 / 3.0, 1e-12);
}

TEST(Weight, Validation) {
    EXPECT_THROW(Weight::constant(1, 1, 2, 1), ConditionViolation);
    EXPECT_THROW(Weight::constant(1, 0, 1, 1), ParameterError);
    EXPECT_THROW(Weight::custom([](double t) { return 1 - t; }, [](double) { return -1.0; }, 0.5, 1,
                                1),
                 ConditionViolation);
}

TEST(Weight, LimitsAtZero) {
    // M/m → 0 and M m'/m² → 1 - C_m, approached monotonically.
    for (double alpha : {0.0, 1.0, 3.0}) {
        auto w = alpha == 0.0 ? Weight::constant() : Weight::power(alpha);
        const double cm = build_weight(w).C_m;
        auto q = [&](double t) { return w.M(t) * w.dm(t) / (w.m(t) * w.m(t)); };
        EXPECT_LT(w.M(1e-5) / w.m(1e-5), w.M(1e-3) / w.m(1e-3));
        EXPECT_LE(std::abs(q(1e-5) - (1 - cm)), std::abs(q(1e-3) - (1 - cm)) + 1e-12);
    }
}

TEST(Xi, Examples) {
    auto a = xi_bounds(1, 1, 2, 2, 2, 1, 2);
    EXPECT_NEAR(a.lower, std::cbrt(0.5), 1e-12);
    EXPECT_NEAR(a.upper, std::cbrt(0.5), 1e-12);
    auto b = xi_bounds(1, 1, 1, 1, 2, 0.5, 1);
    EXPECT_NEAR(b.lower, std::sqrt(4.0 / 3.0), 1e-12);
    try {
        xi_bounds(1, 1, 1, 1, 1, 0, 1);
        FAIL();
    } catch (const ConditionViolation& e) {
        EXPECT_EQ(e.label(), "(1.5)");
    }
    auto c = xi_bounds(0.5, 2, 3, 1, 2, 0.5, 2);
    EXPECT_LE(c.lower, c.upper);
}

TEST(Psi, ClosedForms) {
    auto p = build_psi(Nonlinearity::power(3), 1);
    EXPECT_NEAR(p.psi(0.5), 1.0, 1e-9);
    EXPECT_NEAR(p.Psi(2.0), 1.0 / 8.0, 1e-12);
    auto q = build_psi(Nonlinearity::power(5), 2);
    EXPECT_NEAR(q.psi(2.0 / 3.0), 1.0, 1e-9);
    EXPECT_THROW(build_psi(Nonlinearity::power(2), 2), KellerOssermanViolation);
    auto e = build_psi(Nonlinearity::exponential(2), 1);
    // Ψ = ∫ e^{-2τ} = e^{-2s}/2
    EXPECT_NEAR(e.Psi(0.5), std::exp(-1.0) / 2, 1e-12);
    EXPECT_NEAR(e.psi(0.1), -std::log(0.2) / 2, 1e-9);
}

TEST(LimitFf, Probes) {
    auto a = check_limit_Ff(Nonlinearity::power(3), 1);
    EXPECT_NEAR(a.last, 0.5 * std::ldexp(1.0, -30), 1e-14);
    auto b = check_limit_Ff(Nonlinearity::exponential(2), 1);
    EXPECT_LT(b.ratio[1], 1e-12);  // s = 64
    auto c = check_limit_Ff(Nonlinearity::power(1.5), 1);
    for (std::size_t i = 1; i < c.ratio.size(); ++i) EXPECT_LT(c.ratio[i], c.ratio[i - 1]);
    EXPECT_NEAR(c.ratio.back() / c.ratio.front(), std::pow(2.0, -25 / 4.0), 1e-9);
}

TEST(ClosedForms, RemarkCases) {
    auto a = remark_case_closed_forms(RemarkCase::constant_weight, 2, 5, 0, 2, 2);
    EXPECT_DOUBLE_EQ(a.exponent, -1.0);
    EXPECT_NEAR(a.coeff_lower, std::pow(2.0, 2.0 / 3.0), 1e-12);
    auto b = remark_case_closed_forms(RemarkCase::constant_weight, 1, 3, 0, 1, 1);
    EXPECT_DOUBLE_EQ(b.exponent, -1.0);
    EXPECT_NEAR(b.coeff_upper, std::sqrt(2.0), 1e-12);
    auto c = remark_case_closed_forms(RemarkCase::power_weight, 1, 3, 1, 1, 1);
    EXPECT_DOUBLE_EQ(c.exponent, -2.0);
    EXPECT_NEAR(c.coeff_lower, std::sqrt(6.0), 1e-12);
    EXPECT_THROW(remark_case_closed_forms(RemarkCase::constant_weight, 2, 2, 0, 1, 1),
                 ConditionViolation);
}

// The closed forms agree with φ(ξ M(d)) built numerically.
TEST(ClosedForms, CompositionOracle) {
    {
        auto p = make_profile_fns(Nonlinearity::power(5), 2, Weight::constant());
        const auto xi = xi_bounds(1, 1, 2, 2, p.C_f, p.C_m, 2);
        auto cf = remark_case_closed_forms(RemarkCase::constant_weight, 2, 5, 0, 2, 2);
        for (double d : {1e-3, 0.1, 0.5}) {
            const double pred = predicted_profile(p, xi.lower, d);
            EXPECT_NEAR(pred, cf.coeff_lower * std::pow(d, cf.exponent), 1e-5 * pred);
        }
    }
    {
        auto p = make_profile_fns(Nonlinearity::power(3), 1, Weight::power(1));
        const auto xi = xi_bounds(1, 1, 1, 1, p.C_f, p.C_m, 1);
        auto cf = remark_case_closed_forms(RemarkCase::power_weight, 1, 3, 1, 1, 1);
        for (double d : {1e-2, 0.3}) {
            const double pred = predicted_profile(p, xi.lower, d);
            EXPECT_NEAR(pred, cf.coeff_lower * std::pow(d, cf.exponent), 1e-5 * pred);
        }
    }
}

TEST(Predicted, Examples) {
    auto p = make_profile_fns(Nonlinearity::power(3), 1, Weight::constant());
    EXPECT_NEAR(predicted_profile(p, 1.0, 0.1), 10 * std::sqrt(2.0), 1e-5);
    auto e = make_profile_fns(Nonlinearity::exponential(2), 1, Weight::constant());
    EXPECT_NEAR(predicted_profile(e, 1.0, 0.01), -std::log(std::sin(0.01)), 1e-8);
    EXPECT_NEAR(predicted_profile(e, 1.0, 0.01), 4.605187, 1e-6);
    const double near_edge = predicted_profile(e, 1.0, 1.0 - 1e-9);
    EXPECT_TRUE(std::isfinite(near_edge));
    EXPECT_GT(near_edge, 0.0);
    EXPECT_THROW(predicted_profile(e, 1.0, 1.0), ParameterError);
    EXPECT_THROW(predicted_profile(e, 1.0, 0.0), ParameterError);
}

TEST(Profile, RatioApproachesInverseCf) {
    for (auto [k, g] : {std::pair{1, 3.0}, {2, 5.0}}) {
        Profile p(Nonlinearity::power(g), k);
        const double cf = compute_Cf(p);
        auto q = [&](double t) {
            const double s = p.phi(t);
            return std::pow((k + 1) * p.F(s), k / (k + 1.0)) / (t * std::pow(s, g));
        };
        EXPECT_LE(std::abs(q(1e-5) - 1 / cf), std::abs(q(1e-3) - 1 / cf) + 1e-9);
        EXPECT_LT(std::abs(q(1e-6) - 1 / cf), 5e-3);
    }
    Profile e(Nonlinearity::exponential(2), 1);
    auto q = [&](double t) {
        const double s = e.phi(t);
        return std::sqrt(2 * e.F(s)) / (t * std::exp(2 * s));
    };
    EXPECT_LT(std::abs(q(1e-5) - 1), std::abs(q(1e-3) - 1));
}

TEST(Bundle, RemarkBounds) {
    for (auto f : {Nonlinearity::power(3), Nonlinearity::power(6), Nonlinearity::exponential(1)}) {
        for (auto w : {Weight::constant(), Weight::power(2)}) {
            auto p = make_profile_fns(f, 2, w);
            EXPECT_GE(p.C_f, 1 - 1e-3);
            EXPECT_GE(p.C_m, -1e-9);
            EXPECT_LE(p.C_m, 1 + 1e-9);
            EXPECT_TRUE(p.condition15_ok);
        }
    }
}
