#pragma once

// Δu = b(x) f(u) on a disk or ellipse by the Shortley–Weller five-point
// stencil, damped Newton and red–black SOR, plus the boundary-data exhaustion
// u_j → u as j → ∞.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "khess/errors.hpp"
#include "khess/geometry.hpp"
#include "khess/nonlinearity.hpp"
#include "khess/profile.hpp"
#include "khess/report.hpp"

namespace khess {

/// Grid function on the lattice (i h, j h), |i| ≤ I, |j| ≤ J.
///
/// Arms are the fractional distances θ ∈ (0, 1] to the next node or to the
/// boundary, in the order E, W, N, S; θ = 1 with an interior neighbour.
struct Field2D {
    enum Mask : std::uint8_t { exterior = 0, interior = 1, near_boundary = 2 };

    DomainSpec2D domain = DomainSpec2D::disk(1.0);
    double h = 0.0;
    int I = 0, J = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> mask;
    std::vector<double> dist;
    std::vector<double> param;  // nearest boundary parameter
    std::vector<std::array<double, 4>> arms;

    int nx() const { return 2 * I + 1; }
    int ny() const { return 2 * J + 1; }
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j + J) * nx() + static_cast<std::size_t>(i + I);
    }
    double x(int i) const { return i * h; }
    double y(int j) const { return j * h; }
    bool is_unknown(std::size_t p) const { return mask[p] != exterior; }

    std::size_t unknown_count() const {
        return static_cast<std::size_t>(std::count_if(
            mask.begin(), mask.end(), [](std::uint8_t m) { return m != exterior; }));
    }

    double at(int i, int j) const { return values[index(i, j)]; }
};

inline Field2D build_grid(const DomainSpec2D& dom, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("grid: spacing must be positive");
    if (h >= dom.b()) throw ParameterError("grid: spacing must be below the minor semi-axis");
    Field2D g;
    g.domain = dom;
    g.h = h;
    g.I = static_cast<int>(std::floor(dom.a() / h));
    g.J = static_cast<int>(std::floor(dom.b() / h));
    const std::size_t total = static_cast<std::size_t>(g.nx()) * g.ny();
    g.values.assign(total, std::numeric_limits<double>::quiet_NaN());
    g.mask.assign(total, Field2D::exterior);
    g.dist.assign(total, 0.0);
    g.param.assign(total, 0.0);
    g.arms.assign(total, {1.0, 1.0, 1.0, 1.0});
    for (int j = -g.J; j <= g.J; ++j) {
        for (int i = -g.I; i <= g.I; ++i) {
            const double x = g.x(i), y = g.y(j);
            if (!dom.inside(x, y)) continue;
            const std::size_t p = g.index(i, j);
            auto& arm = g.arms[p];
            if (!dom.inside(x + h, y)) arm[0] = (dom.boundary_x(y, 1.0) - x) / h;
            if (!dom.inside(x - h, y)) arm[1] = (x - dom.boundary_x(y, -1.0)) / h;
            if (!dom.inside(x, y + h)) arm[2] = (dom.boundary_y(x, 1.0) - y) / h;
            if (!dom.inside(x, y - h)) arm[3] = (y - dom.boundary_y(x, -1.0)) / h;
            for (double& a : arm) a = std::clamp(a, 1e-12, 1.0);
            const bool cut = std::any_of(arm.begin(), arm.end(), [](double a) { return a < 1.0; }) ||
                             !dom.inside(x + h, y) || !dom.inside(x - h, y) ||
                             !dom.inside(x, y + h) || !dom.inside(x, y - h);
            g.mask[p] = cut ? Field2D::near_boundary : Field2D::interior;
            const auto np = dom.nearest(x, y);
            g.dist[p] = np.distance;
            g.param[p] = np.t;
        }
    }
    return g;
}

/// Boundary data: a constant j or a function of the boundary point.
using BoundaryData = std::variant<double, std::function<double(double, double)>>;

/// b(x) = b̲ m(d(x))² (the normal form at k = 1) unless a spatial override is given.
struct SourceWeight {
    Weight weight = Weight::constant();
    std::function<double(double, double)> override_b;

    double operator()(double x, double y, double d) const {
        if (override_b) return override_b(x, y);
        const double m = weight.m(std::min(d, weight.delta0()));
        return weight.b_lower() * m * m;
    }
};

struct SolveStats {
    int newton_iterations = 0;
    long sor_sweeps = 0;
    double residual = 0.0;
    std::vector<double> residual_history;
};

namespace detail {

// Five-point Shortley–Weller system over the unknown nodes of a grid.
class ShortleyWeller {
public:
    ShortleyWeller(const Field2D& g, const BoundaryData& data) {
        const double h2 = g.h * g.h;
        const std::array<int, 4> di{1, -1, 0, 0}, dj{0, 0, 1, -1};
        std::vector<long> id(g.values.size(), -1);
        for (int j = -g.J; j <= g.J; ++j)
            for (int i = -g.I; i <= g.I; ++i)
                if (g.is_unknown(g.index(i, j))) {
                    id[g.index(i, j)] = static_cast<long>(node_.size());
                    node_.push_back(g.index(i, j));
                    color_.push_back(static_cast<std::uint8_t>(((i + j) % 2 + 2) % 2));
                }
        const std::size_t n = node_.size();
        nb_.assign(n, {-1, -1, -1, -1});
        c_.assign(n, {0, 0, 0, 0});
        cp_.assign(n, 0.0);
        bcon_.assign(n, 0.0);
        auto boundary_value = [&](double x, double y) {
            if (const double* c = std::get_if<double>(&data)) return *c;
            return std::get<1>(data)(x, y);
        };
        for (std::size_t q = 0; q < n; ++q) {
            const std::size_t p = node_[q];
            const int i = static_cast<int>(p % g.nx()) - g.I;
            const int j = static_cast<int>(p / g.nx()) - g.J;
            const auto& a = g.arms[p];
            // x direction arms a[0] (E), a[1] (W); y direction a[2] (N), a[3] (S).
            const double cE = 2.0 / (h2 * a[0] * (a[0] + a[1]));
            const double cW = 2.0 / (h2 * a[1] * (a[0] + a[1]));
            const double cN = 2.0 / (h2 * a[2] * (a[2] + a[3]));
            const double cS = 2.0 / (h2 * a[3] * (a[2] + a[3]));
            c_[q] = {cE, cW, cN, cS};
            cp_[q] = 2.0 / (h2 * a[0] * a[1]) + 2.0 / (h2 * a[2] * a[3]);
            for (int s = 0; s < 4; ++s) {
                const int ii = i + di[s], jj = j + dj[s];
                const bool in_range = std::abs(ii) <= g.I && std::abs(jj) <= g.J;
                const long other = in_range ? id[g.index(ii, jj)] : -1;
                if (a[s] >= 1.0 && other >= 0) {
                    nb_[q][s] = other;
                } else {
                    const double bx = g.x(i) + di[s] * a[s] * g.h;
                    const double by = g.y(j) + dj[s] * a[s] * g.h;
                    const double gv = boundary_value(bx, by);
                    bmin_ = std::min(bmin_, gv);
                    bmax_ = std::max(bmax_, gv);
                    bcon_[q] += c_[q][s] * gv;
                }
            }
        }
    }

    std::size_t size() const { return node_.size(); }
    std::size_t node(std::size_t q) const { return node_[q]; }
    double boundary_min() const { return bmin_; }
    double boundary_max() const { return bmax_; }
    double diagonal(std::size_t q) const { return cp_[q]; }

    // Discrete Laplacian at unknown q including boundary contributions.
    double laplacian(const std::vector<double>& u, std::size_t q) const {
        double s = bcon_[q] - cp_[q] * u[q];
        for (int k = 0; k < 4; ++k)
            if (nb_[q][k] >= 0) s += c_[q][k] * u[static_cast<std::size_t>(nb_[q][k])];
        return s;
    }

    // Red–black SOR for (D - C) δ = F, D = cp + b f'(u) > 0. Returns sweeps used.
    long sor(const std::vector<double>& diag, const std::vector<double>& F,
             std::vector<double>& delta, double omega, double tol, long max_sweeps) const {
        const std::size_t n = size();
        long sweeps = 0;
        for (; sweeps < max_sweeps;) {
            for (std::uint8_t colour = 0; colour < 2; ++colour) {
                for (std::size_t q = 0; q < n; ++q) {
                    if (color_[q] != colour) continue;
                    double s = F[q];
                    for (int k = 0; k < 4; ++k)
                        if (nb_[q][k] >= 0) s += c_[q][k] * delta[static_cast<std::size_t>(nb_[q][k])];
                    delta[q] += omega * (s / diag[q] - delta[q]);
                }
            }
            ++sweeps;
            if (sweeps % 8 == 0 && scaled_linear_residual(diag, F, delta) <= tol) break;
        }
        return sweeps;
    }

    double scaled_linear_residual(const std::vector<double>& diag, const std::vector<double>& F,
                                  const std::vector<double>& delta) const {
        double m = 0.0;
        for (std::size_t q = 0; q < size(); ++q) {
            double s = F[q] - diag[q] * delta[q];
            for (int k = 0; k < 4; ++k)
                if (nb_[q][k] >= 0) s += c_[q][k] * delta[static_cast<std::size_t>(nb_[q][k])];
            m = std::max(m, std::abs(s) / diag[q]);
        }
        return m;
    }

private:
    std::vector<std::size_t> node_;
    std::vector<std::uint8_t> color_;
    std::vector<std::array<long, 4>> nb_;
    std::vector<std::array<double, 4>> c_;
    std::vector<double> cp_, bcon_;
    double bmin_ = std::numeric_limits<double>::infinity();
    double bmax_ = -std::numeric_limits<double>::infinity();
};

}  // namespace detail

/// Damped Newton for Δ_h u = b f(u) with inner red–black SOR. The residual is
/// measured row-wise divided by the Newton diagonal cp + b f'(u), so `tol`
/// bounds the size of the next correction rather than a raw residual that
/// scales like b f(u). Starts from grid.values where finite, else from the
/// boundary maximum (a supersolution).
inline Field2D solve_dirichlet(const Nonlinearity& f, const SourceWeight& bw,
                               const BoundaryData& g, const Field2D& grid, double tol = 1e-10,
                               SolveStats* stats = nullptr) {
    if (!(tol > 0.0)) throw ParameterError("dirichlet: tol must be positive");
    const detail::ShortleyWeller sw(grid, g);
    const std::size_t n = sw.size();
    if (n == 0) throw ParameterError("dirichlet: grid has no unknowns");

    std::vector<double> u(n), bval(n);
    for (std::size_t q = 0; q < n; ++q) {
        const std::size_t p = sw.node(q);
        const double v = grid.values[p];
        u[q] = std::isfinite(v) ? v : sw.boundary_max();
        const int i = static_cast<int>(p % grid.nx()) - grid.I;
        const int j = static_cast<int>(p / grid.nx()) - grid.J;
        bval[q] = bw(grid.x(i), grid.y(j), grid.dist[p]);
    }

    const double L = grid.domain.diameter();
    const double omega = 2.0 / (1.0 + std::sin(std::numbers::pi * grid.h / L));
    std::vector<double> F(n), D(n), delta(n), trial(n), Ft(n);
    auto residual = [&](const std::vector<double>& v, std::vector<double>& out) {
        double m = 0.0;
        for (std::size_t q = 0; q < n; ++q) {
            out[q] = sw.laplacian(v, q) - bval[q] * f.value(v[q]);
            m = std::max(m, std::abs(out[q]) / (sw.diagonal(q) + bval[q] * f.derivative(v[q])));
        }
        return std::isfinite(m) ? m : std::numeric_limits<double>::infinity();
    };

    SolveStats st;
    double norm = residual(u, F);
    st.residual_history.push_back(norm);
    for (int it = 0; it < 100 && norm > tol; ++it) {
        for (std::size_t q = 0; q < n; ++q) D[q] = sw.diagonal(q) + bval[q] * f.derivative(u[q]);
        std::fill(delta.begin(), delta.end(), 0.0);
        st.sor_sweeps += sw.sor(D, F, delta, omega, tol / 10.0, 200000);
        double lambda = 1.0, tnorm = 0.0;
        for (;;) {
            for (std::size_t q = 0; q < n; ++q) trial[q] = u[q] + lambda * delta[q];
            tnorm = residual(trial, Ft);
            if (tnorm < norm || lambda <= std::ldexp(1.0, -30)) break;
            lambda *= 0.5;
        }
        ++st.newton_iterations;
        if (!(tnorm < norm)) break;
        u.swap(trial);
        F.swap(Ft);
        norm = tnorm;
        st.residual_history.push_back(norm);
    }
    st.residual = norm;
    if (stats) *stats = st;
    if (!(norm <= tol)) {
        std::ostringstream msg;
        msg << "dirichlet: Newton stalled at scaled residual " << norm << " (tol " << tol << ")";
        throw SolveFailure(msg.str(), st.residual_history);
    }

    // Discrete maximum principle: Δu ≥ 0 bounds u by the boundary maximum from
    // above; Δu ≤ max(b f) bounds it from below by the paraboloid of radius a.
    double src = 0.0;
    for (std::size_t q = 0; q < n; ++q) src = std::max(src, bval[q] * f.value(u[q]));
    const double a = grid.domain.a();
    const double lower = sw.boundary_min() - src * a * a / 4.0;
    for (std::size_t q = 0; q < n; ++q) {
        if (u[q] > sw.boundary_max() + 1e-8 || u[q] < lower - 1e-8)
            throw SolveFailure("dirichlet: discrete maximum principle violated", st.residual_history);
    }

    Field2D out = grid;
    for (std::size_t q = 0; q < n; ++q) out.values[sw.node(q)] = u[q];
    return out;
}

struct ExhaustDiagnostics {
    std::vector<double> j;
    std::vector<double> center;          // u_j at the node nearest the centre
    std::vector<double> min_increment;   // min over nodes of u_j - u_{j-1}
    std::vector<double> interior_increment;  // max |u_j - u_{j-1}| where d ≥ 0.2 diam
    std::vector<double> cauchy_ratio;    // successive interior increments
    std::vector<SolveStats> solves;
    bool monotone = true;
};

struct ExhaustResult {
    Field2D limit;
    std::vector<Field2D> iterates;
    ExhaustDiagnostics diagnostics;
};

inline ExhaustResult exhaust(const Nonlinearity& f, const SourceWeight& bw, const Field2D& grid,
                             const std::vector<double>& j_schedule, double tol = 1e-10) {
    if (j_schedule.size() < 3) throw ParameterError("exhaust: schedule needs at least 3 entries");
    for (std::size_t i = 1; i < j_schedule.size(); ++i)
        if (!(j_schedule[i] > j_schedule[i - 1]))
            throw ParameterError("exhaust: schedule must be strictly increasing");

    ExhaustResult res;
    auto& dg = res.diagnostics;
    const double inner = 0.2 * grid.domain.diameter();
    const std::size_t centre = grid.index(0, 0);
    Field2D current = grid;
    double prev_j = 0.0;
    for (std::size_t m = 0; m < j_schedule.size(); ++m) {
        const double j = j_schedule[m];
        if (m > 0)
            for (std::size_t p = 0; p < current.values.size(); ++p)
                if (current.is_unknown(p)) current.values[p] += j - prev_j;
        SolveStats st;
        current = solve_dirichlet(f, bw, j, current, tol, &st);
        dg.solves.push_back(st);
        dg.j.push_back(j);
        dg.center.push_back(current.values[centre]);
        if (m > 0) {
            const Field2D& before = res.iterates.back();
            double mn = std::numeric_limits<double>::infinity(), inc = 0.0;
            for (std::size_t p = 0; p < current.values.size(); ++p) {
                if (!current.is_unknown(p)) continue;
                const double d = current.values[p] - before.values[p];
                mn = std::min(mn, d);
                if (current.dist[p] >= inner) inc = std::max(inc, std::abs(d));
            }
            dg.min_increment.push_back(mn);
            dg.interior_increment.push_back(inc);
            if (mn < -1e-8) dg.monotone = false;
            const std::size_t c = dg.interior_increment.size();
            if (c >= 2)
                dg.cauchy_ratio.push_back(dg.interior_increment[c - 1] /
                                          dg.interior_increment[c - 2]);
        }
        res.iterates.push_back(current);
        prev_j = j;
    }
    res.limit = res.iterates.back();
    return res;
}

/// Collar nodes binned by d into [d_lo 2^i, d_lo 2^{i+1}), i = 0..bins-1. Each
/// row reports the median, minimum and maximum of u / φ(ξ M(d)) over its bin.
/// With a `previous` field (smaller j) a bin is flagged when its median still
/// moves by more than 1%.
inline AsymptoticsReport asymptotics_report_2d(const Field2D& field, const ProfileFns& p, double xi,
                                               const Field2D* previous = nullptr,
                                               double d_lo = 0.01, int bins = 5) {
    if (!(xi > 0.0) || !(d_lo > 0.0) || bins < 1)
        throw ParameterError("asymptotics report 2d: bad parameters");
    AsymptoticsReport rep;
    rep.xi = xi;
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t m = v.size() / 2;
        return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    };
    std::vector<double> empty;
    for (int b = 0; b < bins; ++b) {
        const double lo = d_lo * std::ldexp(1.0, b), hi = 2.0 * lo;
        std::vector<double> ratios, us, prev_ratios;
        for (std::size_t q = 0; q < field.values.size(); ++q) {
            if (!field.is_unknown(q)) continue;
            const double d = field.dist[q];
            if (d < lo || d >= hi || !(d < p.weight.weight.delta0())) continue;
            const double pred = predicted_profile(p, xi, d);
            ratios.push_back(field.values[q] / pred);
            us.push_back(field.values[q]);
            if (previous) prev_ratios.push_back(previous->values[q] / pred);
        }
        if (ratios.empty()) {
            empty.push_back(lo);
            continue;
        }
        AsymptoticsRow row;
        row.d = std::sqrt(lo * hi);
        row.u = median(us);
        row.predicted = predicted_profile(p, xi, row.d);
        row.ratio = median(ratios);
        row.ratio_min = *std::min_element(ratios.begin(), ratios.end());
        row.ratio_max = *std::max_element(ratios.begin(), ratios.end());
        row.count = ratios.size();
        if (previous) row.flagged = std::abs(row.ratio - median(prev_ratios)) > 0.01 * row.ratio;
        rep.rows.push_back(row);
    }
    if (!empty.empty())
        throw ReportTruncated("asymptotics report 2d: empty collar bin starting at d = " +
                                  std::to_string(empty.front()),
                              rep);
    return rep;
}

inline void write_csv(std::ostream& os, const Field2D& f) {
    os << "x,y,d,u\n";
    os.precision(17);
    for (int j = -f.J; j <= f.J; ++j)
        for (int i = -f.I; i <= f.I; ++i) {
            const std::size_t p = f.index(i, j);
            if (f.is_unknown(p))
                os << f.x(i) << ',' << f.y(j) << ',' << f.dist[p] << ',' << f.values[p] << '\n';
        }
}

inline nlohmann::json to_json(const ExhaustDiagnostics& d) {
    nlohmann::json j;
    j["j"] = d.j;
    j["center"] = d.center;
    j["min_increment"] = d.min_increment;
    j["interior_increment"] = d.interior_increment;
    j["cauchy_ratio"] = d.cauchy_ratio;
    j["monotone"] = d.monotone;
    nlohmann::json solves = nlohmann::json::array();
    for (const auto& s : d.solves)
        solves.push_back({{"newton_iterations", s.newton_iterations},
                          {"sor_sweeps", s.sor_sweeps},
                          {"residual", s.residual}});
    j["solves"] = solves;
    return j;
}

}  // namespace khess
