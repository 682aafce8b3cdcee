#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "khess/report.hpp"

using namespace khess;

TEST(Report, LiouvilleRatio) {
    RadialProblem prob{2, 1, 1.0, Nonlinearity::exponential(2), [](double) { return 1.0; }};
    auto sol = integrate_blowup_ivp(prob, std::log(2.0), 1e-12);
    auto p = make_profile_fns(prob.f, 1, Weight::constant());
    auto rep = asymptotics_report(sol, p, 1.0, {1e-2, 1e-3, 1e-4});
    ASSERT_EQ(rep.rows.size(), 3u);
    const auto& row = rep.nearest(1e-3);
    EXPECT_NEAR(row.predicted, -std::log(std::sin(1e-3)), 1e-7);
    EXPECT_NEAR(row.ratio, 1.0, 0.02);
    // u = -ln d + ln(2/(2-d)) exactly, up to the small shift of Rstar.
    EXPECT_NEAR(row.u, -std::log(1e-3) + std::log(2 / (2 - 1e-3)), 1e-5);
}

TEST(Report, PowerCaseTrend) {
    RadialProblem prob{3, 2, 1.0, Nonlinearity::power(5), [](double) { return 1.0; }};
    auto sol = integrate_blowup_ivp(prob, shoot_to_radius(prob, 1.0), 1e-11);
    auto p = make_profile_fns(prob.f, 2, Weight::constant());
    auto rep = asymptotics_report(sol, p, std::cbrt(0.5), 3);
    for (const auto& r : rep.rows) EXPECT_NEAR(r.predicted, std::pow(2.0, 2.0 / 3.0) / r.d, 1e-5 * r.predicted);
    const double e2 = std::abs(rep.nearest(1e-2).ratio - 1), e4 = std::abs(rep.nearest(1e-4).ratio - 1);
    EXPECT_LT(e4, e2);
    for (const auto& r : rep.rows)
        if (r.d <= 1e-2) {
            EXPECT_GE(r.ratio, 0.9);
            EXPECT_LE(r.ratio, 1.1);
        }
}

TEST(Report, TruncatedOutsideRange) {
    RadialProblem prob{2, 1, 1.0, Nonlinearity::exponential(2), [](double) { return 1.0; }};
    auto sol = integrate_blowup_ivp(prob, std::log(2.0), 1e-10);
    auto p = make_profile_fns(prob.f, 1, Weight::constant(1, 2.0));
    try {
        asymptotics_report(sol, p, 1.0, {0.1, 1.5, -1.0, 1e-20});
        FAIL();
    } catch (const ReportTruncated& e) {
        EXPECT_EQ(e.available().rows.size(), 1u);
    }
}

TEST(Report, CsvAndJson) {
    AsymptoticsReport rep;
    rep.xi = 1;
    rep.rows.push_back({0.1, 2, 2, 1, 1, 1, 1, false});
    std::ostringstream os;
    write_csv(os, rep);
    EXPECT_EQ(os.str().substr(0, 4), "d,u,");
    EXPECT_EQ(to_json(rep)["rows"].size(), 1u);
}

TEST(Report, ProfileTable) {
    auto p = make_profile_fns(Nonlinearity::power(3), 1, Weight::constant());
    auto rows = profile_table(p, 1.0, {0.5, 1.0});
    EXPECT_NEAR(rows[1].phi, std::sqrt(2.0), 1e-6);
    EXPECT_NEAR(rows[1].phi_prime, -std::sqrt(2.0), 1e-6);
    EXPECT_NEAR(rows[0].predicted, 2 * std::sqrt(2.0), 1e-6);
    EXPECT_FALSE(std::isfinite(rows[1].predicted));
}
