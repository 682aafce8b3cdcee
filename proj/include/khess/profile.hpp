#pragma once

// Keller–Osserman profile machinery.
//
//   F(τ) = ∫₀^τ f,   H = ((k+1)F)^{1/(k+1)},   Φ(s) = ∫_s^∞ dτ/H,   φ = Φ⁻¹
//   Ψ(s) = ∫_s^∞ f^{-1/k},   ψ = Ψ⁻¹
//
// Both improper integrals share one engine (TailIntegral): a cumulative
// Gauss–Kronrod table on a geometric grid with 64 nodes per decade, quintic
// Hermite interpolation of ln I against ln s using the exact first and second
// derivatives, and a
// direct path (log-substituted quadrature plus an analytic power tail) for
// arguments outside the table.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "khess/errors.hpp"
#include "khess/nonlinearity.hpp"
#include "khess/numerics.hpp"

namespace khess {

namespace detail {

/// I(s) = ∫_s^∞ g for a positive integrand with a power-or-faster tail.
class TailIntegral {
public:
    struct Integrand {
        std::function<double(double)> log_g;     // ln g(τ)
        std::function<double(double)> exponent;  // -d ln g / d ln τ
        std::string name;
    };

    static constexpr int kNodesPerDecade = 64;

    explicit TailIntegral(Integrand g, std::optional<double> exponent_hint = {})
        : g_(std::move(g)), hint_(exponent_hint) {
        build();
    }

    /// I(s) from the table when s lies inside it.
    double value(double s) const {
        if (!(s > 0.0)) throw ParameterError(g_.name + ": argument must be positive");
        const double y = std::log(s);
        if (y < y_.front() || y > y_.back()) return direct(s);
        const std::size_t i = numerics::segment_index(y_, y);
        return std::exp(segment(i)(y));
    }

    /// I(s) by quadrature, independent of the table.
    double direct(double s) const {
        if (!(s > 0.0)) throw ParameterError(g_.name + ": argument must be positive");
        double sum = 0.0;
        double y = std::log(s);
        double p = g_.exponent(s);
        for (int panel = 0; panel < kMaxPanels; ++panel) {
            const double tau = std::exp(y);
            p = g_.exponent(tau);
            // A locally flat exponent below 1 may just be the behaviour near 0,
            // so only a flat convergent exponent ends the walk early.
            if (p > 1.0 + 1e-9 && exponent_is_flat(tau, p)) return sum + analytic_tail(tau, p);
            const double part = numerics::integrate(
                [&](double yy) { return std::exp(yy + g_.log_g(std::exp(yy))); }, y, y + 1.0,
                1e-14, 12);
            sum += part;
            y += 1.0;
            const double tau_end = std::exp(y);
            const double p_end = g_.exponent(tau_end);
            if (p_end > 1.0 + 1e-9) {
                const double rest = analytic_tail(tau_end, p_end);
                if (rest <= 1e-17 * sum || (sum == 0.0 && rest == 0.0)) return sum + rest;
            }
        }
        const double tau = std::exp(y);
        p = hint_ ? *hint_ : g_.exponent(tau);
        if (p <= 1.0 + 1e-9)
            throw KellerOssermanViolation(
                g_.name + ": integrand decays like tau^-" + std::to_string(p) +
                    ", the improper integral diverges",
                p);
        return sum + analytic_tail(tau, p);
    }

    /// s with I(s) = t, from the table (bisection on the Hermite segment).
    double inverse(double t) const {
        if (!(t > 0.0)) throw ParameterError(g_.name + ": inverse needs a positive argument");
        if (t >= sup_) throw ParameterError(g_.name + ": argument " + std::to_string(t) +
                                            " exceeds the range sup = " + std::to_string(sup_));
        const double z = std::log(t);
        if (z > z_.front() || z < z_.back()) return inverse_bisect(t);
        // z_ is decreasing along the grid; i is the last node with z_[i] >= z.
        auto it = std::upper_bound(z_.begin(), z_.end(), z, std::greater<>());
        std::size_t i = it == z_.begin() ? 0 : static_cast<std::size_t>(it - z_.begin()) - 1;
        i = std::min(i, y_.size() - 2);
        const auto seg = segment(i);
        double lo = y_[i], hi = y_[i + 1];
        for (int it2 = 0; it2 < 60; ++it2) {
            const double mid = 0.5 * (lo + hi);
            if (seg(mid) > z)
                lo = mid;
            else
                hi = mid;
        }
        return std::exp(0.5 * (lo + hi));
    }

    /// s with I(s) = t by bisection on the direct quadrature, to 1e-12 relative.
    double inverse_bisect(double t) const {
        if (!(t > 0.0)) throw ParameterError(g_.name + ": inverse needs a positive argument");
        if (t >= sup_) throw ParameterError(g_.name + ": argument exceeds the range");
        double lo = y_.front(), hi = y_.back();
        while (direct(std::exp(lo)) < t) {
            lo -= 10.0;
            if (lo < -700.0) throw ParameterError(g_.name + ": inverse lower bracket failed");
        }
        while (direct(std::exp(hi)) > t) {
            hi += 10.0;
            if (hi > 700.0) throw ParameterError(g_.name + ": inverse upper bracket failed");
        }
        for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (direct(std::exp(mid)) > t)
                lo = mid;
            else
                hi = mid;
        }
        return std::exp(0.5 * (lo + hi));
    }

    /// lim_{s→0⁺} I(s); +∞ when the integrand is not integrable at 0.
    double sup() const noexcept { return sup_; }

    /// Local decay exponent of the integrand far out in the tail.
    double tail_exponent() const noexcept { return tail_exponent_; }

    double table_min() const { return std::exp(y_.front()); }
    double table_max() const { return std::exp(y_.back()); }
    double g(double s) const { return std::exp(g_.log_g(s)); }

private:
    static constexpr int kMaxPanels = 400;

    bool exponent_is_flat(double tau, double p) const {
        const double p1 = g_.exponent(tau * 10.0);
        const double p2 = g_.exponent(tau * 100.0);
        const double tol = 1e-10 * std::max(std::abs(p), 1.0);
        return std::abs(p1 - p) <= tol && std::abs(p2 - p) <= tol;
    }

    double analytic_tail(double tau, double p) const {
        return std::exp(std::log(tau) + g_.log_g(tau)) / (p - 1.0);
    }

    numerics::QuinticHermiteSegment segment(std::size_t i) const {
        return {y_[i],     y_[i + 1],     z_[i],    z_[i + 1],
                slope_[i], slope_[i + 1], curv_[i], curv_[i + 1]};
    }

    void build() {
        const double decade = std::log(10.0);
        // Upper end: where I drops below 1e-60 or at s = 1e250.
        double yhi = 0.0;
        double Ihi = direct(1.0);
        while (Ihi > 1e-60 && yhi < 250.0 * decade) {
            const double Inext = direct(std::exp(yhi + decade));
            if (!(Inext > 0.0)) break;
            yhi += decade;
            Ihi = Inext;
        }
        tail_exponent_ = g_.exponent(std::exp(yhi));
        // Lower end: where I exceeds 1e12 or at s = 1e-30.
        double ylo = 0.0;
        while (ylo > -30.0 * decade) {
            if (direct(std::exp(ylo)) > 1e12) break;
            ylo -= decade;
        }
        const int n = static_cast<int>(std::lround((yhi - ylo) / decade)) * kNodesPerDecade;
        const double h = (yhi - ylo) / n;
        y_.resize(static_cast<std::size_t>(n) + 1);
        z_.resize(y_.size());
        slope_.resize(y_.size());
        curv_.resize(y_.size());
        for (int i = 0; i <= n; ++i) y_[i] = ylo + i * h;
        y_.back() = yhi;

        auto integrand = [&](double yy) { return std::exp(yy + g_.log_g(std::exp(yy))); };
        double I = Ihi;
        std::vector<double> vals(y_.size());
        vals.back() = I;
        for (int i = n - 1; i >= 0; --i) {
            I += numerics::integrate_panel(integrand, y_[i], y_[i + 1]);
            vals[i] = I;
        }
        for (std::size_t i = 0; i < y_.size(); ++i) {
            z_[i] = std::log(vals[i]);
            // d ln I / d ln s = -s g(s) / I(s)
            slope_[i] = -std::exp(y_[i] + g_.log_g(std::exp(y_[i]))) / vals[i];
            // d slope / d ln s = slope (1 - p - slope)
            curv_[i] = slope_[i] * (1.0 - g_.exponent(std::exp(y_[i])) - slope_[i]);
        }
        const double s0 = std::exp(y_.front());
        const double p0 = g_.exponent(s0);
        sup_ = p0 < 1.0 - 1e-6
                   ? vals.front() + std::exp(y_.front() + g_.log_g(s0)) / (1.0 - p0)
                   : std::numeric_limits<double>::infinity();
    }

    Integrand g_;
    std::optional<double> hint_;
    std::vector<double> y_, z_, slope_, curv_;
    double sup_ = std::numeric_limits<double>::infinity();
    double tail_exponent_ = 0.0;
};

}  // namespace detail

/// φ together with its first two derivatives at one argument.
struct ProfileJet {
    double value;
    double d1;
    double d2;
};

/// F, H, Φ and φ for a nonlinearity at order k. Immutable once built; the
/// constructor throws KellerOssermanViolation when Φ diverges.
class Profile {
public:
    Profile(Nonlinearity f, int k) : f_(std::move(f)), k_(k) {
        if (k < 1) throw ParameterError("profile: order k must be >= 1");
        if (f_.kind() == Nonlinearity::Kind::custom) f_.check_positive_nondecreasing();
        const double kp1 = k_ + 1.0;
        std::optional<double> hint;
        if (auto h = f_.tail_exponent_hint()) hint = (*h + 1.0) / kp1;
        const Nonlinearity fc = f_;
        detail::TailIntegral::Integrand g{
            [fc, kp1](double s) { return -(std::log(kp1) + fc.log_primitive(s)) / kp1; },
            [fc, kp1](double s) { return fc.primitive_log_slope(s) / kp1; },
            "Phi",
        };
        phi_table_ = std::make_shared<detail::TailIntegral>(std::move(g), hint);
    }

    int k() const noexcept { return k_; }
    const Nonlinearity& nonlinearity() const noexcept { return f_; }

    double F(double s) const { return f_.primitive(s); }
    double log_H(double s) const {
        return (std::log(k_ + 1.0) + f_.log_primitive(s)) / (k_ + 1.0);
    }
    double H(double s) const { return std::exp(log_H(s)); }
    /// H'(s) = ((k+1)F)^{-k/(k+1)} f(s).
    double dH(double s) const { return std::exp(f_.log_value(s) - k_ * log_H(s)); }

    double Phi(double s) const { return phi_table_->value(s); }
    double Phi_direct(double s) const { return phi_table_->direct(s); }
    double phi(double t) const { return phi_table_->inverse(t); }
    double phi_bisect(double t) const { return phi_table_->inverse_bisect(t); }
    /// φ'(t) = -H(φ(t)).
    double dphi(double t) const { return -H(phi(t)); }
    /// φ''(t) = H(φ)^{1-k} f(φ).
    double d2phi(double t) const {
        const double s = phi(t);
        return std::exp((1.0 - k_) * log_H(s) + f_.log_value(s));
    }
    ProfileJet phi_jet(double t) const {
        const double s = phi(t);
        const double lh = log_H(s);
        return {s, -std::exp(lh), std::exp((1.0 - k_) * lh + f_.log_value(s))};
    }

    /// Φ(0⁺): φ is defined on (0, Φ(0⁺)).
    double Phi_at_zero() const noexcept { return phi_table_->sup(); }
    double tail_exponent() const noexcept { return phi_table_->tail_exponent(); }
    bool ko_ok() const noexcept { return true; }

private:
    Nonlinearity f_;
    int k_;
    std::shared_ptr<const detail::TailIntegral> phi_table_;
};

/// Ψ(s) = ∫_s^∞ f^{-1/k} and its inverse ψ.
class PsiProfile {
public:
    PsiProfile(Nonlinearity f, int k) : f_(std::move(f)), k_(k) {
        if (k < 1) throw ParameterError("psi profile: order k must be >= 1");
        std::optional<double> hint;
        if (auto h = f_.tail_exponent_hint()) hint = *h / k;
        const Nonlinearity fc = f_;
        const double kd = k;
        detail::TailIntegral::Integrand g{
            [fc, kd](double s) { return -fc.log_value(s) / kd; },
            [fc, kd](double s) { return fc.log_slope(s) / kd; },
            "Psi",
        };
        table_ = std::make_shared<detail::TailIntegral>(std::move(g), hint);
        self_check();
    }

    int k() const noexcept { return k_; }
    double Psi(double s) const { return table_->value(s); }
    double Psi_direct(double s) const { return table_->direct(s); }
    double psi(double t) const { return table_->inverse(t); }
    /// ψ'(t) = -f(ψ)^{1/k}.
    double dpsi(double t) const { return -std::exp(f_.log_value(psi(t)) / k_); }
    /// ψ''(t) = f(ψ)^{(2-k)/k} f'(ψ) / k.
    double d2psi(double t) const {
        const double s = psi(t);
        return std::exp((2.0 - k_) / k_ * f_.log_value(s)) * f_.derivative(s) / k_;
    }
    double Psi_at_zero() const noexcept { return table_->sup(); }

private:
    // Central differences of ψ (table-free bisection) against -f(ψ)^{1/k} at five points.
    void self_check() const {
        const double top = std::isfinite(Psi_at_zero()) ? 0.5 * Psi_at_zero() : 1.0;
        for (int i = 0; i < 5; ++i) {
            const double t = top * std::pow(10.0, -i);
            const double h = 1e-5 * t;
            const double fd =
                (table_->inverse_bisect(t + h) - table_->inverse_bisect(t - h)) / (2.0 * h);
            const double exact = dpsi(t);
            if (std::abs(fd - exact) > 1e-6 * std::abs(exact))
                throw Error("psi profile: derivative self-check failed at t = " +
                            std::to_string(t));
        }
    }

    Nonlinearity f_;
    int k_;
    std::shared_ptr<const detail::TailIntegral> table_;
};

/// The weight m, its primitive M and the limit C_m = lim (M/m)'.
struct WeightProfile {
    Weight weight;
    double C_m = 0.0;

    double m(double t) const { return weight.m(t); }
    double dm(double t) const { return weight.dm(t); }
    double M(double t) const { return weight.M(t); }
};

/// Everything the asymptotic statements need about (f, k, m).
struct ProfileFns {
    std::shared_ptr<const Profile> profile;
    WeightProfile weight;
    double C_f = 0.0;
    double C_m = 0.0;
    bool ko_ok = false;
    bool condition15_ok = false;

    int k() const { return profile->k(); }
    double phi(double t) const { return profile->phi(t); }
    double M(double t) const { return weight.M(t); }
};

/// Builds the weight-independent profile; throws KellerOssermanViolation when Φ diverges.
inline Profile build_profile(const Nonlinearity& f, int k) { return Profile(f, k); }

/// C_f = lim_{s→∞} H'(s) Φ(s), by Aitken extrapolation on s = s₀ 2^i.
inline double compute_Cf(const Profile& p, double s0 = 1.0) {
    auto term = [&](int i) {
        const double s = s0 * std::ldexp(1.0, i);
        const double Phi = p.Phi(s);
        if (!(Phi > 1e-280)) return std::numeric_limits<double>::quiet_NaN();
        return std::exp(std::log(p.dH(s)) + std::log(Phi));
    };
    auto ex = numerics::extrapolate_limit(term, 40, 1e-10);
    if (!ex.converged && numerics::tail_oscillation(ex) > 1e-3)
        throw LimitNotDetected("C_f: H' Phi did not settle", ex.raw);
    return ex.value;
}

/// C_m = lim_{t→0⁺} (M/m)', from central differences at t = t₀ 2^{-i}.
inline WeightProfile build_weight(const Weight& w) {
    auto ratio = [&](double t) { return w.M(t) / w.m(t); };
    const double t0 = 0.5 * w.delta0();
    auto term = [&](int i) {
        const double t = t0 * std::ldexp(1.0, -i);
        const double h = 1e-3 * t;
        return (ratio(t + h) - ratio(t - h)) / (2.0 * h);
    };
    auto ex = numerics::extrapolate_limit(term, 40, 1e-10);
    if (!ex.converged && numerics::tail_oscillation(ex) > 1e-3)
        throw LimitNotDetected("C_m: (M/m)' did not settle", ex.raw);
    double cm = ex.value;
    // Exact kinds: snap round-off (the difference quotient of a linear M/m is exact).
    if (w.kind() == Weight::Kind::constant) cm = 1.0;
    if (w.kind() == Weight::Kind::power) cm = 1.0 / (w.parameter() + 1.0);
    return WeightProfile{w, cm};
}

/// Assembles a ProfileFns bundle and records the (1.5) feasibility flag.
inline ProfileFns make_profile_fns(const Nonlinearity& f, int k, const Weight& w) {
    auto profile = std::make_shared<const Profile>(f, k);
    const double cf = compute_Cf(*profile);
    WeightProfile wp = build_weight(w);
    const double cm = wp.C_m;
    return ProfileFns{std::move(profile), std::move(wp), cf, cm, true, cf > 1.0 - cm};
}

/// Asymptotic amplitudes ξ̲ (with L₀, b̲) and ξ̄ (with l₀, b̄).
struct XiBounds {
    double lower;
    double upper;
};

inline XiBounds xi_bounds(double b_lower, double b_upper, double L0, double l0, double C_f,
                          double C_m, int k) {
    if (!(C_f > 1.0 - C_m))
        throw ConditionViolation("(1.5)", "C_f > 1 - C_m fails (C_f = " + std::to_string(C_f) +
                                              ", C_m = " + std::to_string(C_m) + ")");
    if (!(l0 > 0.0) || !(L0 >= l0))
        throw ParameterError("xi_bounds: need 0 < l0 <= L0");
    if (k < 1) throw ParameterError("xi_bounds: k must be >= 1");
    const double gap = 1.0 - (1.0 - C_m) / C_f;
    const double e = 1.0 / (k + 1.0);
    return {std::pow(b_lower / (L0 * gap), e), std::pow(b_upper / (l0 * gap), e)};
}

inline XiBounds xi_bounds(const Weight& w, double L0, double l0, double C_f, double C_m, int k) {
    return xi_bounds(w.b_lower(), w.b_upper(), L0, l0, C_f, C_m, k);
}

/// Ψ/ψ pair used by the exhaustion subsolution.
inline PsiProfile build_psi(const Nonlinearity& f, int k) { return PsiProfile(f, k); }

/// Probe of F^{k/(k+1)}/f along s = 2^i, i = 5..30; tends to 0 under (f2).
struct LimitProbe {
    std::vector<double> s;
    std::vector<double> ratio;
    double sup = 0.0;
    double last = 0.0;
};

inline LimitProbe check_limit_Ff(const Nonlinearity& f, int k) {
    LimitProbe probe;
    const double e = k / (k + 1.0);
    for (int i = 5; i <= 30; ++i) {
        const double s = std::ldexp(1.0, i);
        const double r = std::exp(e * f.log_primitive(s) - f.log_value(s));
        probe.s.push_back(s);
        probe.ratio.push_back(r);
    }
    probe.sup = *std::max_element(probe.ratio.begin(), probe.ratio.end());
    probe.last = probe.ratio.back();
    return probe;
}

/// Explicit boundary profiles for f = s^γ: u ~ coeff · d^{exponent}.
struct ClosedFormAsymptotics {
    double exponent;
    double coeff_lower;  // uses l₀, the liminf side
    double coeff_upper;  // uses L₀, the limsup side
};

enum class RemarkCase { constant_weight, power_weight };

inline ClosedFormAsymptotics remark_case_closed_forms(RemarkCase which, int k, double gamma,
                                                      double alpha, double L0, double l0) {
    if (k < 1) throw ParameterError("closed forms: k must be >= 1");
    if (!(gamma > k)) throw ConditionViolation("(f2)", "closed forms need gamma > k");
    if (!(l0 > 0.0) || !(L0 >= l0)) throw ParameterError("closed forms: need 0 < l0 <= L0");
    const double gk = gamma - k;
    const double kp1 = k + 1.0;
    if (which == RemarkCase::constant_weight) {
        const double base = std::pow(kp1, k) * (gamma + 1.0) / std::pow(gk, kp1);
        return {-kp1 / gk, std::pow(l0 * base, 1.0 / gk), std::pow(L0 * base, 1.0 / gk)};
    }
    if (!(alpha > 0.0)) throw ParameterError("closed forms: alpha must be positive");
    const double base = (gamma + alpha * k + alpha + 1.0) * std::pow(kp1, k) *
                        std::pow(alpha + 1.0, k) / std::pow(gk, kp1);
    return {-kp1 * (alpha + 1.0) / gk, std::pow(l0 * base, 1.0 / gk),
            std::pow(L0 * base, 1.0 / gk)};
}

/// φ(ξ M(d)) for 0 < d < δ₀.
inline double predicted_profile(const ProfileFns& p, double xi, double d) {
    if (!(d > 0.0) || !(d < p.weight.weight.delta0()))
        throw ParameterError("predicted_profile: d = " + std::to_string(d) +
                             " outside (0, delta0)");
    return p.profile->phi(xi * p.weight.M(d));
}

}  // namespace khess
