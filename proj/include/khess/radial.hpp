#pragma once

// Radial problems S_k(D²u) = b(|x|) f(u) on balls B_R ⊂ ℝⁿ.
//
// With v = u′ the equation reads
//   C(n-1,k-1) (v/r)^{k-1} v′ + C(n-1,k) (v/r)^k = b f(u),
// equivalently C(n-1,k-1)/(k r^{n-1}) · (r^{n-k} v^k)′ = b f(u).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "khess/errors.hpp"
#include "khess/hessian.hpp"
#include "khess/nonlinearity.hpp"
#include "khess/numerics.hpp"
#include "khess/profile.hpp"

namespace khess {

struct RadialProblem {
    int n = 2;
    int k = 1;
    double R = 1.0;
    Nonlinearity f = Nonlinearity::exponential(2.0);
    std::function<double(double)> b = [](double) { return 1.0; };

    void validate() const {
        if (n < 2) throw ParameterError("radial problem: dimension n must be >= 2");
        if (k < 1 || k > n) throw ParameterError("radial problem: k must lie in 1..n");
        if (!(R > 0.0)) throw ParameterError("radial problem: radius must be positive");
        if (!b) throw ParameterError("radial problem: b is required");
    }

    /// b(r) = b̲ · m(R - r)^{k+1}, the normal form of a weight (d clamped at 0).
    static RadialProblem with_weight(int n, int k, double R, Nonlinearity f, const Weight& w) {
        RadialProblem p{n, k, R, std::move(f), {}};
        p.b = [w, R, k](double r) {
            return w.b_lower() * std::pow(w.m(std::max(R - r, 0.0)), k + 1.0);
        };
        return p;
    }
};

struct RadialStats {
    int steps = 0;
    int newton_iterations = 0;
    double tol = 0.0;
    double boundary_value = std::numeric_limits<double>::quiet_NaN();
    std::string terminated_by;
    std::vector<double> threshold_radii;
};

/// Samples of a radial solution. `u2` is filled when the second derivative is
/// known at the nodes, which upgrades interpolation from cubic to quintic.
struct RadialSolution {
    std::vector<double> r, u, u1, u2;
    double Rstar = std::numeric_limits<double>::quiet_NaN();
    RadialStats meta;

    double r_max() const { return r.back(); }

    double u_at(double x) const {
        if (x < r.front() || x > r.back())
            throw ParameterError("radial solution: r = " + std::to_string(x) +
                                 " outside the sampled range");
        const std::size_t i = numerics::segment_index(r, x);
        if (!u2.empty())
            return numerics::QuinticHermiteSegment{r[i],  r[i + 1],  u[i],  u[i + 1],
                                                   u1[i], u1[i + 1], u2[i], u2[i + 1]}(x);
        return numerics::HermiteSegment{r[i], r[i + 1], u[i], u[i + 1], u1[i], u1[i + 1]}(x);
    }
};

namespace detail {

inline double radial_acceleration(const RadialProblem& p, double r, double u, double v) {
    const double q = v / r;
    const double rhs = p.b(r) * p.f.value(u);
    return (rhs - binomial(p.n - 1, p.k) * std::pow(q, p.k)) /
           (binomial(p.n - 1, p.k - 1) * std::pow(q, p.k - 1));
}

// c with C(n,k) c^k = b(0) f(u0): the Hessian c·I balances the equation at the origin.
inline double origin_curvature(const RadialProblem& p, double u0) {
    const double rhs = p.b(0.0) * p.f.value(u0);
    if (!(rhs > 0.0) || !std::isfinite(rhs))
        throw ParameterError("radial problem: b(0) f(u0) must be positive and finite");
    return std::pow(rhs / binomial(p.n, p.k), 1.0 / p.k);
}

}  // namespace detail

/// Forward integration from the origin until u or u′ exceeds `threshold`.
/// Rstar is the Aitken extrapolation of the radii where the terminating
/// variable crosses threshold/100, threshold/10 and threshold.
inline RadialSolution integrate_blowup_ivp(const RadialProblem& prob, double u0,
                                           double tol = 1e-10, double threshold = 1e12) {
    namespace ode = boost::numeric::odeint;
    using State = std::array<double, 2>;
    prob.validate();
    if (!(u0 > 0.0)) throw ParameterError("radial ivp: u0 must be positive");
    if (!(tol > 0.0)) throw ParameterError("radial ivp: tol must be positive");

    const double r0 = 1e-8 * prob.R;
    const double c = detail::origin_curvature(prob, u0);
    State x{u0 + 0.5 * c * r0 * r0, c * r0};

    // Trial states outside the admissible set get a huge slope so the step is rejected.
    auto sys = [&](const State& s, State& ds, double r) {
        ds[0] = s[1];
        double a = s[1] > 0.0 && s[0] > 0.0 ? detail::radial_acceleration(prob, r, s[0], s[1])
                                            : 1e200;
        if (!std::isfinite(a)) a = 1e200;
        ds[1] = a;
    };

    RadialSolution sol;
    sol.meta.tol = tol;
    auto push = [&](double r, const State& s) {
        sol.r.push_back(r);
        sol.u.push_back(s[0]);
        sol.u1.push_back(s[1]);
        sol.u2.push_back(detail::radial_acceleration(prob, r, s[0], s[1]));
    };
    push(r0, x);

    const std::array<double, 3> levels{threshold / 100.0, threshold / 10.0, threshold};
    std::array<std::array<double, 3>, 2> crossing;
    for (auto& row : crossing) row.fill(std::numeric_limits<double>::quiet_NaN());

    auto stepper = ode::make_dense_output(tol, tol, ode::runge_kutta_dopri5<State>());
    stepper.initialize(x, r0, r0);
    const double r_limit = 1e6 * prob.R;
    State prev = x;
    for (;;) {
        const auto [ra, rb] = stepper.do_step(sys);
        const State s = stepper.current_state();
        if (!std::isfinite(s[0]) || !std::isfinite(s[1]))
            throw IntegrationFailure("radial ivp: non-finite state", ra, prev[0], prev[1]);
        const double a = detail::radial_acceleration(prob, rb, s[0], s[1]);
        if (!std::isfinite(a))
            throw IntegrationFailure("radial ivp: f evaluation failed", ra, prev[0], prev[1]);
        if (!cone_membership(radial_eigenvalues(s[1], a, rb, prob.n), prob.k).admissible)
            throw IntegrationFailure("radial ivp: admissibility lost", ra, prev[0], prev[1]);
        push(rb, s);
        ++sol.meta.steps;

        for (int var = 0; var < 2; ++var) {
            for (int l = 0; l < 3; ++l) {
                if (!(prev[var] < levels[l] && s[var] >= levels[l])) continue;
                double lo = ra, hi = rb;
                State mid;
                for (int it = 0; it < 80; ++it) {
                    const double m = 0.5 * (lo + hi);
                    stepper.calc_state(m, mid);
                    (mid[var] < levels[l] ? lo : hi) = m;
                }
                crossing[var][l] = 0.5 * (lo + hi);
            }
        }
        prev = s;
        if (s[0] > threshold || s[1] > threshold) {
            const int var = s[1] > threshold ? 1 : 0;
            sol.meta.terminated_by = var == 1 ? "u1" : "u";
            const auto& cr = crossing[var];
            sol.meta.threshold_radii.assign(cr.begin(), cr.end());
            double rs = rb;
            if (std::isfinite(cr[0]) && std::isfinite(cr[1]) && std::isfinite(cr[2])) {
                const double acc = numerics::aitken(cr[0], cr[1], cr[2]);
                rs = acc >= cr[2] && acc - cr[2] <= 10.0 * (cr[2] - cr[0]) ? acc : cr[2];
            }
            sol.Rstar = std::max(rs, rb);
            return sol;
        }
        if (rb > r_limit)
            throw IntegrationFailure("radial ivp: no blowup before r = " + std::to_string(r_limit),
                                     rb, s[0], s[1]);
        if (sol.meta.steps > 2000000)
            throw IntegrationFailure("radial ivp: step budget exhausted", rb, s[0], s[1]);
    }
}

/// u0 > 0 whose blowup radius equals `target`, by bisection on ln u0.
inline double shoot_to_radius(const RadialProblem& prob, double target, double tol = 1e-10,
                              double threshold = 1e12) {
    if (!(target > 0.0)) throw ParameterError("shooting: target radius must be positive");
    auto rstar = [&](double lu) { return integrate_blowup_ivp(prob, std::exp(lu), tol, threshold).Rstar; };
    double lo = 0.0, hi = 0.0;
    if (rstar(0.0) > target) {
        while (rstar(hi) > target) {
            lo = hi;
            hi += 1.0;
            if (hi > 700.0) throw ParameterError("shooting: target radius not reachable");
        }
    } else {
        while (rstar(lo) <= target) {
            hi = lo;
            lo -= 1.0;
            if (lo < -700.0) throw ParameterError("shooting: target radius not reachable");
        }
    }
    // Rstar is decreasing in u0.
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (rstar(mid) > target ? lo : hi) = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

/// The solution of S_k(D²w) = b in B_R with w = 0 on the boundary, from
///   r^{n-k} (w′)^k = k/C(n-1,k-1) · ∫₀^r s^{n-1} b(s) ds,   w(r) = -∫_r^R w′.
class TorsionProfile {
public:
    explicit TorsionProfile(RadialProblem prob, int cells = 1024)
        : prob_(std::move(prob)), cells_(cells) {
        prob_.validate();
        if (cells < 8) throw ParameterError("torsion profile: need at least 8 cells");
        h_ = prob_.R / cells_;
        G_.assign(static_cast<std::size_t>(cells_) + 1, 0.0);
        for (int i = 0; i < cells_; ++i)
            G_[i + 1] = G_[i] + numerics::integrate_panel(
                                    [this](double s) { return moment(s); }, i * h_, (i + 1) * h_);
        W_.assign(G_.size(), 0.0);
        for (int i = cells_ - 1; i >= 0; --i)
            W_[i] = W_[i + 1] - numerics::integrate_panel([this](double s) { return dw(s); },
                                                          i * h_, (i + 1) * h_);
    }

    const RadialProblem& problem() const noexcept { return prob_; }

    double w(double r) const {
        check(r);
        const std::size_t i = cell(r);
        return W_[i] + numerics::integrate_panel([this](double s) { return dw(s); }, i * h_, r);
    }

    double dw(double r) const {
        check(r);
        if (r == 0.0) return 0.0;
        const double g = G(r);
        return std::pow(prob_.k / binomial(prob_.n - 1, prob_.k - 1) *
                            std::pow(r, prob_.k - prob_.n) * g,
                        1.0 / prob_.k);
    }

    /// w″ from the equation itself; at the origin the balance C(n,k) c^k = b(0).
    double d2w(double r) const {
        check(r);
        if (r == 0.0) return std::pow(prob_.b(0.0) / binomial(prob_.n, prob_.k), 1.0 / prob_.k);
        const double q = dw(r) / r;
        return (prob_.b(r) - binomial(prob_.n - 1, prob_.k) * std::pow(q, prob_.k)) /
               (binomial(prob_.n - 1, prob_.k - 1) * std::pow(q, prob_.k - 1));
    }

    RadialSolution samples(int nodes = 513) const {
        RadialSolution s;
        for (int i = 0; i < nodes; ++i) {
            const double r = prob_.R * i / (nodes - 1);
            s.r.push_back(r);
            s.u.push_back(w(r));
            s.u1.push_back(dw(r));
            s.u2.push_back(d2w(r));
        }
        s.u.back() = 0.0;
        s.Rstar = prob_.R;
        return s;
    }

private:
    double moment(double s) const { return std::pow(s, prob_.n - 1) * prob_.b(s); }

    double G(double r) const {
        const std::size_t i = cell(r);
        return G_[i] + numerics::integrate_panel([this](double s) { return moment(s); }, i * h_, r);
    }

    std::size_t cell(double r) const {
        return static_cast<std::size_t>(std::min(cells_ - 1, static_cast<int>(r / h_)));
    }

    void check(double r) const {
        if (!(r >= 0.0) || r > prob_.R * (1.0 + 1e-12))
            throw ParameterError("torsion profile: r outside [0, R]");
    }

    RadialProblem prob_;
    int cells_;
    double h_ = 0.0;
    std::vector<double> G_, W_;
};

inline TorsionProfile solve_w(const RadialProblem& prob, int cells = 1024) {
    return TorsionProfile(prob, cells);
}

/// h̲ = ψ(-w) and the radii r_j of its sublevel sets {h̲ < j}.
class SubsolutionH {
public:
    SubsolutionH(std::shared_ptr<const TorsionProfile> w, std::shared_ptr<const PsiProfile> psi)
        : w_(std::move(w)), psi_(std::move(psi)) {
        if (!w_ || !psi_) throw ParameterError("subsolution: torsion profile and psi are required");
        if (-w_->w(0.0) >= psi_->Psi_at_zero())
            throw ParameterError("subsolution: -w(0) exceeds the range of Psi");
    }

    double operator()(double r) const {
        const double R = w_->problem().R;
        if (!(r >= 0.0) || !(r < R)) throw ParameterError("subsolution: r outside [0, R)");
        const double t = -w_->w(r);
        if (!(t > 0.0)) throw ParameterError("subsolution: r too close to the boundary");
        return psi_->psi(t);
    }

    /// r_j with h̲(r_j) = j; 0 when h̲(0) ≥ j (empty sublevel set).
    double radius_for_level(double j) const {
        if (!(j > 0.0)) throw ParameterError("subsolution: level must be positive");
        if ((*this)(0.0) >= j) return 0.0;
        const double target = -psi_->Psi(j);  // w(r_j) = -Ψ(j)
        double lo = 0.0, hi = w_->problem().R;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (w_->w(mid) < target ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

private:
    std::shared_ptr<const TorsionProfile> w_;
    std::shared_ptr<const PsiProfile> psi_;
};

inline SubsolutionH build_subsolution_h(const RadialProblem& prob, const PsiProfile& psi,
                                        int cells = 1024) {
    return SubsolutionH(std::make_shared<const TorsionProfile>(prob, cells),
                        std::make_shared<const PsiProfile>(psi));
}

namespace detail {

// Conservative finite-volume discretisation on r_i = i h, i = 0..N, with u_N fixed:
//   C(n-1,k-1)/k · (Fl_{i+1/2} - Fl_{i-1/2}) = V_i b_i f(u_i),
//   Fl_{i+1/2} = r_{i+1/2}^{n-k} q|q|^{k-1},  q = (u_{i+1} - u_i)/h,  Fl_{-1/2} = 0.
class RadialBvp {
public:
    RadialBvp(const RadialProblem& p, double h) : p_(p) {
        N_ = std::max(4, static_cast<int>(std::lround(p.R / h)));
        h_ = p.R / N_;
        coef_ = binomial(p.n - 1, p.k - 1) / p.k;
        rp_.resize(N_);
        V_.resize(N_);
        b_.resize(N_);
        for (int i = 0; i < N_; ++i) {
            const double rr = (i + 0.5) * h_;
            const double rl = i == 0 ? 0.0 : (i - 0.5) * h_;
            rp_[i] = std::pow(rr, p.n - p.k);
            V_[i] = (std::pow(rr, p.n) - std::pow(rl, p.n)) / p.n;
            b_[i] = p.b(i * h_);
        }
    }

    int N() const { return N_; }
    double h() const { return h_; }

    // Residual rows scaled by V_i (1 + b_i f(u_i)); returns the max norm.
    double residual(const std::vector<double>& u, double j, std::vector<double>& res) const {
        res.assign(N_, 0.0);
        double norm = 0.0;
        double left = 0.0;
        for (int i = 0; i < N_; ++i) {
            const double next = i + 1 < N_ ? u[i + 1] : j;
            const double right = flux(i, (next - u[i]) / h_);
            const double src = b_[i] * p_.f.value(u[i]);
            res[i] = coef_ * (right - left) - V_[i] * src;
            norm = std::max(norm, std::abs(res[i]) / (V_[i] * (1.0 + src)));
            left = right;
        }
        return std::isfinite(norm) ? norm : std::numeric_limits<double>::infinity();
    }

    // Newton step: solves J δ = -res with the tridiagonal Thomas algorithm.
    std::vector<double> newton_direction(const std::vector<double>& u, double j,
                                         const std::vector<double>& res) const {
        std::vector<double> lower(N_, 0.0), diag(N_, 0.0), upper(N_, 0.0), rhs(N_);
        double dprev = 0.0;
        for (int i = 0; i < N_; ++i) {
            const double next = i + 1 < N_ ? u[i + 1] : j;
            const double q = (next - u[i]) / h_;
            const double D = rp_[i] * p_.k * std::pow(std::abs(q), p_.k - 1) / h_;
            diag[i] = -coef_ * (D + dprev) - V_[i] * b_[i] * p_.f.derivative(u[i]);
            if (i + 1 < N_) upper[i] = coef_ * D;
            if (i > 0) lower[i] = coef_ * dprev;
            rhs[i] = -res[i];
            dprev = D;
        }
        for (int i = 1; i < N_; ++i) {
            const double m = lower[i] / diag[i - 1];
            diag[i] -= m * upper[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        std::vector<double> x(N_);
        x[N_ - 1] = rhs[N_ - 1] / diag[N_ - 1];
        for (int i = N_ - 2; i >= 0; --i) x[i] = (rhs[i] - upper[i] * x[i + 1]) / diag[i];
        return x;
    }

    // Damped Newton from `u`; returns the number of iterations or throws SolveFailure.
    int solve(std::vector<double>& u, double j, double tol) const {
        std::vector<double> res, trial(N_), history;
        double norm = residual(u, j, res);
        history.push_back(norm);
        for (int it = 0; it < 100; ++it) {
            if (norm <= tol) return it;
            const auto dir = newton_direction(u, j, res);
            double lambda = 1.0, tnorm = 0.0;
            std::vector<double> tres;
            for (;;) {
                for (int i = 0; i < N_; ++i) trial[i] = u[i] + lambda * dir[i];
                tnorm = residual(trial, j, tres);
                if (tnorm < norm || lambda <= std::ldexp(1.0, -30)) break;
                lambda *= 0.5;
            }
            double step = 0.0, scale = 1.0;
            for (int i = 0; i < N_; ++i) {
                step = std::max(step, std::abs(lambda * dir[i]));
                scale = std::max(scale, std::abs(u[i]));
            }
            if (!(tnorm < norm)) {
                // No decrease even at the damping floor: stagnation at round-off is convergence.
                if (step <= 1e-13 * scale) return it;
                history.push_back(tnorm);
                throw SolveFailure("radial bvp: damping floor reached without decrease", history);
            }
            u = trial;
            res = tres;
            norm = tnorm;
            history.push_back(norm);
            if (step <= 1e-14 * scale) return it + 1;
        }
        if (norm <= tol) return 100;
        throw SolveFailure("radial bvp: Newton did not converge in 100 damped steps", history);
    }

    double flux(int i, double q) const {
        return rp_[i] * q * std::pow(std::abs(q), p_.k - 1);
    }

private:
    const RadialProblem& p_;
    int N_ = 0;
    double h_ = 0.0, coef_ = 0.0;
    std::vector<double> rp_, V_, b_;
};

}  // namespace detail

/// Solves the Dirichlet problems u(R) = j for each j of an increasing schedule,
/// by damped Newton with continuation. The first guess is the subsolution
/// j + f(j)^{1/k} w; each later guess is the previous solution shifted by the
/// increment of j, which is a supersolution.
inline std::vector<RadialSolution> solve_exhaustion_bvp(const RadialProblem& prob,
                                                        const std::vector<double>& j_schedule,
                                                        double grid_h, double tol = 1e-10) {
    prob.validate();
    if (j_schedule.empty()) throw ParameterError("exhaustion: empty schedule");
    for (std::size_t i = 1; i < j_schedule.size(); ++i)
        if (!(j_schedule[i] > j_schedule[i - 1]))
            throw ParameterError("exhaustion: schedule must be strictly increasing");
    if (!(grid_h > 0.0) || grid_h > prob.R / 4)
        throw ParameterError("exhaustion: grid spacing must be in (0, R/4]");

    const detail::RadialBvp bvp(prob, grid_h);
    const int N = bvp.N();
    const double h = bvp.h();
    const TorsionProfile w(prob);

    std::vector<double> u(N);
    {
        const double j0 = j_schedule.front();
        const double scale = std::pow(prob.f.value(j0), 1.0 / prob.k);
        for (int i = 0; i < N; ++i) u[i] = j0 + scale * w.w(i * h);
    }

    std::vector<RadialSolution> out;
    double j_prev = j_schedule.front();
    for (double j : j_schedule) {
        int iterations = 0;
        // Continuation with substeps when a full increment fails.
        std::function<void(double, double, int)> advance = [&](double from, double to, int depth) {
            std::vector<double> guess = u;
            for (double& x : guess) x += to - from;
            try {
                iterations += bvp.solve(guess, to, tol);
                u = std::move(guess);
            } catch (const SolveFailure&) {
                if (depth >= 8 || to == from) throw;
                const double mid = 0.5 * (from + to);
                advance(from, mid, depth + 1);
                advance(mid, to, depth + 1);
            }
        };
        if (out.empty())
            iterations += bvp.solve(u, j, tol);
        else
            advance(j_prev, j, 0);

        RadialSolution s;
        s.r.resize(N + 1);
        s.u.resize(N + 1);
        s.u1.resize(N + 1);
        for (int i = 0; i <= N; ++i) {
            s.r[i] = i * h;
            s.u[i] = i < N ? u[i] : j;
        }
        s.u1[0] = 0.0;
        for (int i = 1; i < N; ++i) s.u1[i] = (s.u[i + 1] - s.u[i - 1]) / (2 * h);
        s.u1[N] = (3 * s.u[N] - 4 * s.u[N - 1] + s.u[N - 2]) / (2 * h);
        s.meta.newton_iterations = iterations;
        s.meta.tol = tol;
        s.meta.boundary_value = j;
        s.Rstar = std::numeric_limits<double>::quiet_NaN();
        out.push_back(std::move(s));
        j_prev = j;
    }
    return out;
}

}  // namespace khess
