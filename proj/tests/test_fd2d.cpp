#include <chrono>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "khess/fd2d.hpp"

using namespace khess;

namespace {

double liouville(double x, double y) { return std::log(2.0 / (1.0 - x * x - y * y)); }

double max_error(const Field2D& f, const std::function<double(double, double)>& exact) {
    double e = 0;
    for (int j = -f.J; j <= f.J; ++j)
        for (int i = -f.I; i <= f.I; ++i)
            if (f.is_unknown(f.index(i, j))) e = std::max(e, std::abs(f.at(i, j) - exact(f.x(i), f.y(j))));
    return e;
}

}  // namespace

TEST(Geometry, DiskAndEllipse) {
    auto d = DomainSpec2D::disk(1.0);
    EXPECT_DOUBLE_EQ(d.distance(0, 0), 1.0);
    EXPECT_NEAR(d.distance(0.3, 0.4), 0.5, 1e-15);
    auto e = DomainSpec2D::ellipse(2, 1);
    EXPECT_NEAR(e.distance(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(e.distance(1.9, 0), 0.1, 1e-12);
    EXPECT_NEAR(e.curvature(0.0), 2.0 / 1.0, 1e-12);
    EXPECT_NEAR(e.curvature(M_PI / 2), 1.0 / 4.0, 1e-12);
    EXPECT_THROW(DomainSpec2D::ellipse(1, 2), ParameterError);
    EXPECT_THROW(DomainSpec2D::disk(0), ParameterError);
}

// Nearest point against brute-force minimisation over a fine parameter sweep.
TEST(Geometry, EllipseDistanceMatchesBruteForce) {
    auto e = DomainSpec2D::ellipse(1.5, 0.8);
    for (double x : {-1.2, -0.5, 0.0, 0.3, 1.1, 1.45})
        for (double y : {-0.7, -0.2, 0.0, 0.4, 0.75}) {
            if (!e.inside(x, y)) continue;
            double best = 1e9, bt = 0;
            for (int s = 0; s < 200000; ++s) {
                const double t = 2 * M_PI * s / 200000;
                const double dd = std::hypot(1.5 * std::cos(t) - x, 0.8 * std::sin(t) - y);
                if (dd < best) best = dd, bt = t;
            }
            // refine
            for (double w = 2 * M_PI / 200000; w > 1e-15; w /= 2)
                for (double t : {bt - w, bt + w}) {
                    const double dd = std::hypot(1.5 * std::cos(t) - x, 0.8 * std::sin(t) - y);
                    if (dd < best) best = dd, bt = t;
                }
            const auto np = e.nearest(x, y);
            EXPECT_NEAR(np.distance, best, 1e-10 * best) << x << "," << y;
        }
}

TEST(Grid, DiskCoarse) {
    auto g = build_grid(DomainSpec2D::disk(1.0), 0.5);
    EXPECT_EQ(g.unknown_count(), 9u);
    EXPECT_DOUBLE_EQ(g.dist[g.index(0, 0)], 1.0);
    const auto& arm = g.arms[g.index(1, 0)];
    EXPECT_NEAR(arm[0], 1.0, 1e-15);  // (1,0) lies on the circle
    EXPECT_NEAR(g.arms[g.index(1, 1)][0], (std::sqrt(0.75) - 0.5) / 0.5, 1e-15);
    EXPECT_THROW(build_grid(DomainSpec2D::disk(1.0), 0.0), ParameterError);
    EXPECT_THROW(build_grid(DomainSpec2D::disk(1.0), 1.5), ParameterError);
}

TEST(Grid, EllipseMaskAndDistance) {
    auto g = build_grid(DomainSpec2D::ellipse(2, 1), 0.1);
    EXPECT_NEAR(g.dist[g.index(0, 0)], 1.0, 1e-12);
    for (int j = -g.J; j <= g.J; ++j)
        for (int i = -g.I; i <= g.I; ++i) {
            const auto p = g.index(i, j);
            EXPECT_EQ(g.is_unknown(p), g.domain.inside(g.x(i), g.y(j)));
            if (g.is_unknown(p)) {
                EXPECT_GT(g.dist[p], 0.0);
            }
        }
}

TEST(Dirichlet, PoissonIsExactForQuadratic) {
    auto g = build_grid(DomainSpec2D::disk(1.0), 1.0 / 64);
    auto u = solve_dirichlet(Nonlinearity::power(0), SourceWeight{}, 0.0, g, 1e-12);
    const double e = max_error(u, [](double x, double y) { return (x * x + y * y - 1) / 4; });
    EXPECT_LE(e, 3e-4);
    EXPECT_LE(e, 1e-9);
}

TEST(Dirichlet, TruncatedLiouville) {
    auto g = build_grid(DomainSpec2D::disk(0.9), 1.0 / 64);
    auto u = solve_dirichlet(Nonlinearity::exponential(2), SourceWeight{},
                             std::function<double(double, double)>(liouville), g, 1e-11);
    EXPECT_LE(max_error(u, liouville), 4e-3);
}

TEST(Dirichlet, ComparisonInBoundaryData) {
    auto g = build_grid(DomainSpec2D::ellipse(1.2, 1.0), 1.0 / 32);
    auto u1 = solve_dirichlet(Nonlinearity::exponential(2), SourceWeight{}, 1.0, g);
    auto u2 = solve_dirichlet(Nonlinearity::exponential(2), SourceWeight{}, 2.0, g);
    for (std::size_t p = 0; p < g.values.size(); ++p)
        if (g.is_unknown(p)) {
            EXPECT_LE(u1.values[p], u2.values[p] + 1e-8);
        }
}

TEST(Dirichlet, Deterministic) {
    auto g = build_grid(DomainSpec2D::ellipse(1.2, 1.0), 1.0 / 32);
    auto a = solve_dirichlet(Nonlinearity::power(3), SourceWeight{}, 3.0, g);
    auto b = solve_dirichlet(Nonlinearity::power(3), SourceWeight{}, 3.0, g);
    for (std::size_t p = 0; p < g.values.size(); ++p)
        if (g.is_unknown(p)) {
            EXPECT_EQ(a.values[p], b.values[p]);
        }
}

TEST(Exhaust, LiouvilleDisk) {
    auto g = build_grid(DomainSpec2D::disk(1.0), 1.0 / 64);
    auto res = exhaust(Nonlinearity::exponential(2), SourceWeight{}, g, {4, 6, 8, 10});
    const auto& d = res.diagnostics;
    EXPECT_TRUE(d.monotone);
    for (double m : d.min_increment) EXPECT_GE(m, -1e-8);
    EXPECT_LT(std::abs(d.center[3] - d.center[2]), std::abs(d.center[2] - d.center[1]));
    EXPECT_EQ(d.cauchy_ratio.size(), 2u);
    for (double r : d.cauchy_ratio) EXPECT_LT(r, 1.0);
}

TEST(Exhaust, Rejects) {
    auto g = build_grid(DomainSpec2D::disk(1.0), 1.0 / 16);
    EXPECT_THROW(exhaust(Nonlinearity::exponential(2), SourceWeight{}, g, {1, 2}), ParameterError);
    EXPECT_THROW(exhaust(Nonlinearity::exponential(2), SourceWeight{}, g, {1, 3, 2}), ParameterError);
}

TEST(Report2d, LiouvilleBins) {
    auto g = build_grid(DomainSpec2D::disk(1.0), 1.0 / 64);
    auto res = exhaust(Nonlinearity::exponential(2), SourceWeight{}, g, {4, 8, 12});
    auto p = make_profile_fns(Nonlinearity::exponential(2), 1, Weight::constant());
    auto rep = asymptotics_report_2d(res.limit, p, 1.0, &res.iterates[1]);
    const auto& row = rep.nearest(std::sqrt(0.02 * 0.04));
    EXPECT_NEAR(row.ratio, 1.0, 0.1);
    EXPECT_LE(row.ratio_min, row.ratio);
    EXPECT_GE(row.ratio_max, row.ratio);
}

TEST(Report2d, SmallJIsFlagged) {
    auto g = build_grid(DomainSpec2D::disk(1.0), 1.0 / 64);
    auto res = exhaust(Nonlinearity::exponential(2), SourceWeight{}, g, {1, 1.5, 2});
    auto p = make_profile_fns(Nonlinearity::exponential(2), 1, Weight::constant());
    auto rep = asymptotics_report_2d(res.limit, p, 1.0, &res.iterates[1]);
    for (const auto& r : rep.rows) {
        EXPECT_LT(r.ratio, 1.0);
        EXPECT_TRUE(r.flagged);
    }
}

TEST(Report2d, EmptyBinTruncates) {
    auto g = build_grid(DomainSpec2D::disk(1.0), 1.0 / 16);
    auto u = solve_dirichlet(Nonlinearity::exponential(2), SourceWeight{}, 3.0, g);
    auto p = make_profile_fns(Nonlinearity::exponential(2), 1, Weight::constant());
    EXPECT_THROW(asymptotics_report_2d(u, p, 1.0, nullptr, 1e-4, 3), ReportTruncated);
}
