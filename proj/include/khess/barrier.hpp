#pragma once

// Shifted boundary barriers φ(ξ M(d ∓ σ)) on collars of a ball or an ellipse,
// the Hessian spectrum of g∘d in principal coordinates, and numerical
// certification of the super/subsolution inequalities on quasi-random samples.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "khess/errors.hpp"
#include "khess/hessian.hpp"
#include "khess/numerics.hpp"
#include "khess/profile.hpp"
#include "khess/radial.hpp"

namespace khess {

/// Principal curvatures along ∂Ω, parametrised by t ∈ [t_lo, t_hi].
struct CollarGeometry {
    int n = 2;
    std::function<std::vector<double>(double)> rho;
    double t_lo = 0.0, t_hi = 0.0;
    double t_rho_min = 0.0, t_rho_max = 0.0;  // where σ_j(ρ) is extremal for every j
    double focal_radius = 0.0;                // 1 / max ρ_i
    std::string description;

    /// L₀ = max over ∂Ω of σ_{k-1}(ρ).
    double L0(int k) const { return sigma(k - 1, rho(t_rho_max)); }
    /// l₀ = min over ∂Ω of σ_{k-1}(ρ).
    double l0(int k) const { return sigma(k - 1, rho(t_rho_min)); }

    static CollarGeometry ball(int n, double R) {
        if (n < 2) throw ParameterError("ball collar: n must be >= 2");
        if (!(R > 0.0)) throw ParameterError("ball collar: radius must be positive");
        CollarGeometry g;
        g.n = n;
        g.rho = [n, R](double) { return std::vector<double>(static_cast<std::size_t>(n) - 1, 1.0 / R); };
        g.focal_radius = R;
        g.description = "ball(n=" + std::to_string(n) + ", R=" + std::to_string(R) + ")";
        return g;
    }

    /// Ellipse x²/a² + y²/b² < 1, curvature at (a cos t, b sin t).
    static CollarGeometry ellipse(double a, double b) {
        if (!(b > 0.0) || !(a >= b)) throw ParameterError("ellipse collar: need a >= b > 0");
        CollarGeometry g;
        g.n = 2;
        g.rho = [a, b](double t) {
            const double s = std::sin(t), c = std::cos(t);
            return std::vector<double>{a * b / std::pow(a * a * s * s + b * b * c * c, 1.5)};
        };
        g.t_lo = 0.0;
        g.t_hi = 2.0 * std::numbers::pi;
        g.t_rho_max = 0.0;
        g.t_rho_min = std::numbers::pi / 2;
        g.focal_radius = b * b / a;
        g.description = "ellipse(a=" + std::to_string(a) + ", b=" + std::to_string(b) + ")";
        return g;
    }

    /// κ_i = ρ_i / (1 - d ρ_i), the curvatures of the parallel surface at depth d.
    std::vector<double> parallel_curvatures(double d, double t) const {
        auto r = rho(t);
        for (double& x : r) {
            const double q = 1.0 - d * x;
            if (!(q > 0.0))
                throw GeometryError("collar point d = " + std::to_string(d) +
                                    " lies beyond the focal radius");
            x /= q;
        }
        return r;
    }
};

/// Spectrum of D²(g∘d) at depth d: the normal value g″ first, then the
/// tangential values -g′ρ_i/(1 - dρ_i).
inline EigenSpectrum composite_eigs(double g1, double g2, double d, const std::vector<double>& rho) {
    std::vector<double> v;
    v.reserve(rho.size() + 1);
    v.push_back(g2);
    for (double r : rho) {
        const double q = 1.0 - d * r;
        if (!(q > 0.0))
            throw GeometryError("composite_eigs: 1 - d*rho = " + std::to_string(q) + " <= 0");
        v.push_back(-g1 * r / q);
    }
    return EigenSpectrum(std::move(v));
}

/// ε, σ, δ_ε and the shifted amplitudes ξ̲_ε (with L₀, b̲ - 2ε) and ξ̄_ε (with l₀, b̄ + 2ε).
struct BarrierParams {
    double eps = 0.0;
    double sigma_shift = 0.0;
    double delta_eps = 0.0;
    double xi_eps_lower = 0.0;
    double xi_eps_upper = 0.0;
    double L0 = 0.0, l0 = 0.0;

    double d1(double d) const { return d - sigma_shift; }
    double d2(double d) const { return d + sigma_shift; }
};

inline BarrierParams make_barrier_params(const ProfileFns& p, const CollarGeometry& geom,
                                         double eps, double delta_eps, double sigma_shift) {
    const int k = p.k();
    if (k > geom.n) throw ParameterError("barrier params: k exceeds the dimension");
    const double bl = p.weight.weight.b_lower(), bu = p.weight.weight.b_upper();
    if (!(eps > 0.0) || !(eps < bl / 2.0) || !(eps < 1.0))
        throw ParameterError("barrier params: need 0 < eps < min(b_lower/2, 1)");
    if (!(delta_eps > 0.0)) throw ParameterError("barrier params: delta_eps must be positive");
    // σ = 0 gives the unshifted barriers, kept for closed-form checks.
    if (!(sigma_shift >= 0.0) || !(sigma_shift < delta_eps))
        throw ParameterError("barrier params: need 0 <= sigma < delta_eps");
    if (!(2.0 * delta_eps < geom.focal_radius))
        throw GeometryError("barrier params: collar 2*delta_eps reaches the focal radius");
    if (!(p.C_f > 1.0 - p.C_m))
        throw ConditionViolation("(1.5)", "C_f > 1 - C_m fails (C_f = " + std::to_string(p.C_f) +
                                              ", C_m = " + std::to_string(p.C_m) + ")");
    BarrierParams bp;
    bp.eps = eps;
    bp.sigma_shift = sigma_shift;
    bp.delta_eps = delta_eps;
    bp.L0 = geom.L0(k);
    bp.l0 = geom.l0(k);
    if (!(bp.l0 > 0.0))
        throw ConditionViolation("(1.4)", "sigma_{k-1} of the boundary curvatures must be positive");
    const double gap = 1.0 - (1.0 - p.C_m) / p.C_f;
    const double e = 1.0 / (k + 1.0);
    bp.xi_eps_lower = std::pow((bl - 2.0 * eps) / ((1.0 + eps) * bp.L0 * gap), e);
    bp.xi_eps_upper = std::pow((bu + 2.0 * eps) / ((1.0 - eps) * bp.l0 * gap), e);
    return bp;
}

/// d ↦ φ(ξ M(d + shift)) with analytic first and second d-derivatives, on (lo, hi).
class Barrier {
public:
    enum class Kind { upper, lower };

    Barrier(std::shared_ptr<const ProfileFns> p, Kind kind, double xi, double shift, double lo,
            double hi)
        : p_(std::move(p)), kind_(kind), xi_(xi), shift_(shift), lo_(lo), hi_(hi) {}

    Kind kind() const noexcept { return kind_; }
    double xi() const noexcept { return xi_; }
    double shift() const noexcept { return shift_; }
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    const ProfileFns& profile() const noexcept { return *p_; }

    /// Value and d-derivatives: g′ = ξ φ′ m, g″ = ξ² φ″ m² + ξ φ′ m′, at the shifted depth.
    ProfileJet jet(double d) const {
        if (!(d > lo_) || !(d < hi_))
            throw ParameterError("barrier: d = " + std::to_string(d) + " outside (" +
                                 std::to_string(lo_) + ", " + std::to_string(hi_) + ")");
        const double ds = d + shift_;
        const double t = xi_ * p_->weight.M(ds);
        if (!(t < p_->profile->Phi_at_zero()))
            throw ParameterError("barrier: xi*M(d) leaves the range of Phi");
        const auto ph = p_->profile->phi_jet(t);
        const double m = p_->weight.m(ds), dm = p_->weight.dm(ds);
        return {ph.value, xi_ * ph.d1 * m, xi_ * xi_ * ph.d2 * m * m + xi_ * ph.d1 * dm};
    }

    double operator()(double d) const { return jet(d).value; }

private:
    std::shared_ptr<const ProfileFns> p_;
    Kind kind_;
    double xi_, shift_, lo_, hi_;
};

struct BarrierPair {
    Barrier upper;  // φ(ξ̲_ε M(d - σ)) on σ < d < 2δ_ε
    Barrier lower;  // φ(ξ̄_ε M(d + σ)) on 0 < d < 2δ_ε - σ
};

inline BarrierPair build_barriers(const ProfileFns& p, const CollarGeometry& geom,
                                  const BarrierParams& bp) {
    if (!(bp.sigma_shift >= 0.0) || !(bp.sigma_shift < bp.delta_eps))
        throw ParameterError("build_barriers: need 0 <= sigma < delta_eps");
    if (!(2.0 * bp.delta_eps < geom.focal_radius))
        throw GeometryError("build_barriers: collar reaches the focal radius");
    if (!(2.0 * bp.delta_eps < p.weight.weight.delta0()))
        throw ParameterError("build_barriers: collar exceeds the weight's range delta0");
    auto shared = std::make_shared<const ProfileFns>(p);
    const double s = bp.sigma_shift, top = 2.0 * bp.delta_eps;
    return {Barrier(shared, Barrier::Kind::upper, bp.xi_eps_lower, -s, s, top),
            Barrier(shared, Barrier::Kind::lower, bp.xi_eps_upper, s, 0.0, top - s)};
}

/// b at a collar point (depth d, boundary parameter t).
using CollarSource = std::function<double(double d, double t)>;

/// b = b̲ m(d)^{k+1}, the normal form of a weight.
inline CollarSource collar_source(const ProfileFns& p) {
    const Weight w = p.weight.weight;
    const int k = p.k();
    return [w, k](double d, double) { return w.b_lower() * std::pow(w.m(d), k + 1.0); };
}

struct CollarSample {
    double d;
    double t;
};

/// `count` quasi-random samples, log-uniform over four decades in the depth
/// variable that vanishes at the singular edge (d - σ for the upper barrier,
/// d for the lower), Halton-distributed in t.
inline std::vector<CollarSample> collar_samples(const Barrier& u, const CollarGeometry& geom,
                                                int count = 200, std::uint64_t seed = 0) {
    if (count < 1) throw ParameterError("collar samples: count must be positive");
    const double offset = u.kind() == Barrier::Kind::upper ? u.lo() : 0.0;
    const double width = u.hi() - offset;
    const double lo = std::log(1e-4 * width), hi = std::log(width);
    std::vector<CollarSample> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const std::uint64_t idx = seed * static_cast<std::uint64_t>(count) + i + 1;
        const double a = numerics::radical_inverse(idx, 2);  // in (0, 1) for idx >= 1
        const double t = geom.t_lo + numerics::radical_inverse(idx, 3) * (geom.t_hi - geom.t_lo);
        out.push_back({offset + std::exp(lo + a * (hi - lo)), t});
    }
    return out;
}

/// Per-sample intermediates of the margin computation.
struct MarginSample {
    double d = 0.0, t = 0.0;
    double u = 0.0;
    double scale = 0.0;    // b f(u)
    double margin = 0.0;   // b f(u) - σ_k(λ) for the upper barrier, reversed for the lower
    std::vector<double> sigmas;  // σ_1..σ_k of the composite spectrum
    bool admissible = false;
    double ratio_vanishing = 0.0;  // (M/m) H^k / (ξ M f): tends to 0 at the boundary
    double ratio_gap = 0.0;        // 1 - (M m′/m²) H^k / (ξ M f): tends to 1 - (1 - C_m)/C_f
    double sigma_km1_kappa = 0.0;  // σ_{k-1}(κ), κ the parallel curvatures
    double sigma_k_kappa = 0.0;
    double bracket_error = 0.0;  // max_j relative gap between σ_j(λ) and its expansion
};

struct MarginReport {
    std::string kind;  // "supersolution" or "subsolution"
    bool pass = false;
    double eps = 0.0, delta_eps = 0.0, sigma_shift = 0.0, xi = 0.0;
    double worst_relative_margin = std::numeric_limits<double>::infinity();
    double sup_sigma_k_kappa = 0.0;  // observed bound for σ_k(κ) on the collar
    double max_bracket_error = 0.0;
    std::vector<MarginSample> samples;
};

inline constexpr double kMarginTolerance = 1e-9;

namespace detail {

inline MarginReport verify_barrier(const Barrier& u, const CollarGeometry& geom,
                                   const BarrierParams& bp, const CollarSource& b,
                                   const std::vector<CollarSample>& samples) {
    const ProfileFns& p = u.profile();
    const Profile& prof = *p.profile;
    const Nonlinearity& f = prof.nonlinearity();
    const int k = p.k();
    if (k > geom.n) throw ParameterError("verify: k exceeds the dimension");
    const bool upper = u.kind() == Barrier::Kind::upper;
    MarginReport rep;
    rep.kind = upper ? "supersolution" : "subsolution";
    rep.eps = bp.eps;
    rep.delta_eps = bp.delta_eps;
    rep.sigma_shift = bp.sigma_shift;
    rep.xi = u.xi();
    rep.pass = !samples.empty();
    for (const auto& smp : samples) {
        if (!(smp.d > u.lo()) || !(smp.d < u.hi()))
            throw ParameterError("verify: sample d = " + std::to_string(smp.d) +
                                 " outside the collar (" + std::to_string(u.lo()) + ", " +
                                 std::to_string(u.hi()) + ")");
        MarginSample ms;
        ms.d = smp.d;
        ms.t = smp.t;
        const auto jet = u.jet(smp.d);
        const auto kappa = geom.parallel_curvatures(smp.d, smp.t);
        const auto lam = composite_eigs(jet.d1, jet.d2, smp.d, geom.rho(smp.t));
        const auto cone = cone_membership(lam, k);
        ms.u = jet.value;
        ms.sigmas = cone.sigmas;
        ms.admissible = cone.admissible;
        ms.scale = b(smp.d, smp.t) * f.value(jet.value);
        const double sk = cone.sigmas.back();
        ms.margin = upper ? ms.scale - sk : sk - ms.scale;

        // Factored form σ_j(λ) = P_j [ratio_gap σ_{j-1}(κ) + ratio_vanishing σ_j(κ)].
        const double ds = smp.d + u.shift();
        const double M = p.weight.M(ds), m = p.weight.m(ds), dm = p.weight.dm(ds);
        const double lh = prof.log_H(jet.value);
        const double fu = f.value(jet.value);
        const double q = std::exp(k * lh) / (u.xi() * M * fu);
        ms.ratio_vanishing = (M / m) * q;
        ms.ratio_gap = 1.0 - (M * dm / (m * m)) * q;
        ms.sigma_km1_kappa = sigma(k - 1, kappa);
        ms.sigma_k_kappa = sigma(k, kappa);
        for (int j = 1; j <= k; ++j) {
            const double pj = std::pow(u.xi(), j + 1) * std::pow(m, j + 1) * fu *
                              std::exp((j - k) * lh);
            const double expanded =
                pj * (ms.ratio_gap * sigma(j - 1, kappa) + ms.ratio_vanishing * sigma(j, kappa));
            const double err = std::abs(expanded - ms.sigmas[j - 1]) /
                               std::max(std::abs(ms.sigmas[j - 1]), 1e-300);
            ms.bracket_error = std::max(ms.bracket_error, err);
        }

        const double rel = ms.margin / ms.scale;
        const bool ok = std::isfinite(rel) && ms.margin >= -kMarginTolerance * ms.scale &&
                        ms.admissible;
        rep.pass = rep.pass && ok;
        rep.worst_relative_margin = std::min(rep.worst_relative_margin,
                                             std::isfinite(rel) ? rel : -std::numeric_limits<double>::infinity());
        rep.sup_sigma_k_kappa = std::max(rep.sup_sigma_k_kappa, ms.sigma_k_kappa);
        rep.max_bracket_error = std::max(rep.max_bracket_error, ms.bracket_error);
        rep.samples.push_back(std::move(ms));
    }
    return rep;
}

}  // namespace detail

/// Checks S_k(D²ū) ≤ b f(ū) and ū k-admissible at every sample.
inline MarginReport verify_supersolution(const Barrier& u_upper, const CollarGeometry& geom,
                                         const BarrierParams& bp, const CollarSource& b,
                                         const std::vector<CollarSample>& samples) {
    if (u_upper.kind() != Barrier::Kind::upper)
        throw ParameterError("verify_supersolution: expects the upper barrier");
    return detail::verify_barrier(u_upper, geom, bp, b, samples);
}

/// Checks S_k(D²u̲) ≥ b f(u̲) and u̲ k-admissible at every sample.
inline MarginReport verify_subsolution(const Barrier& u_lower, const CollarGeometry& geom,
                                       const BarrierParams& bp, const CollarSource& b,
                                       const std::vector<CollarSample>& samples) {
    if (u_lower.kind() != Barrier::Kind::lower)
        throw ParameterError("verify_subsolution: expects the lower barrier");
    return detail::verify_barrier(u_lower, geom, bp, b, samples);
}

/// Outcome of the δ_ε search: both barriers certified on the same collar.
struct CollarCertificate {
    BarrierParams params;
    MarginReport super;
    MarginReport sub;
    int halvings = 0;
};

struct CollarSearchOptions {
    double initial_fraction = 0.2;  // δ_ε starts at this fraction of the focal radius
    double sigma_fraction = 0.1;    // σ = sigma_fraction · δ_ε
    int max_halvings = 30;
    int samples = 200;
    std::uint64_t seed = 0;
};

/// Halves δ_ε from initial_fraction·focal radius until both inequalities hold.
inline CollarCertificate certify_collar(const ProfileFns& p, const CollarGeometry& geom, double eps,
                                        const CollarSource& b, const CollarSearchOptions& opt = {}) {
    double delta = opt.initial_fraction * geom.focal_radius;
    delta = std::min(delta, 0.49 * p.weight.weight.delta0());
    double worst = -std::numeric_limits<double>::infinity();
    for (int h = 0; h <= opt.max_halvings; ++h, delta *= 0.5) {
        const auto bp = make_barrier_params(p, geom, eps, delta, opt.sigma_fraction * delta);
        const auto bars = build_barriers(p, geom, bp);
        MarginReport sup, sub;
        try {
            sup = verify_supersolution(bars.upper, geom, bp, b,
                                       collar_samples(bars.upper, geom, opt.samples, opt.seed));
            sub = verify_subsolution(bars.lower, geom, bp, b,
                                     collar_samples(bars.lower, geom, opt.samples, opt.seed));
        } catch (const ParameterError&) {
            continue;  // collar leaves the range of Φ; shrink
        }
        worst = std::max(worst, std::min(sup.worst_relative_margin, sub.worst_relative_margin));
        if (sup.pass && sub.pass) return {bp, std::move(sup), std::move(sub), h};
    }
    throw CertificationFailure("certify_collar: no delta_eps on the halving ladder certified", worst);
}

/// Lemma-type supersolution h̄ = φ(-ε w) on a ball, w the torsion profile.
struct Lemma23Result {
    double eps = 0.0;
    MarginReport report;
    LimitProbe limit;
    std::vector<std::pair<double, double>> attempts;  // (ε, worst relative margin)
};

inline MarginReport check_torsion_barrier(const ProfileFns& p, const TorsionProfile& w, double eps,
                                          int radii = 100) {
    const RadialProblem& prob = w.problem();
    const Profile& prof = *p.profile;
    const Nonlinearity& f = prof.nonlinearity();
    const int k = p.k();
    if (k != prob.k) throw ParameterError("lemma check: profile and torsion orders differ");
    MarginReport rep;
    rep.kind = "torsion-supersolution";
    rep.eps = eps;
    rep.xi = eps;
    rep.pass = true;
    for (int i = 1; i <= radii; ++i) {
        const double r = prob.R * i / (radii + 1.0);
        MarginSample ms;
        ms.d = prob.R - r;
        const double t = -eps * w.w(r);
        bool ok = t > 0.0 && t < prof.Phi_at_zero();
        if (ok) {
            const auto ph = prof.phi_jet(t);
            const double dw = w.dw(r), d2w = w.d2w(r);
            const double h1 = -eps * ph.d1 * dw;
            const double h2 = eps * eps * ph.d2 * dw * dw - eps * ph.d1 * d2w;
            const auto cone = cone_membership(radial_eigenvalues(h1, h2, r, prob.n), k);
            ms.u = ph.value;
            ms.sigmas = cone.sigmas;
            ms.admissible = cone.admissible;
            ms.scale = prob.b(r) * f.value(ph.value);
            ms.margin = ms.scale - cone.sigmas.back();
            ok = std::isfinite(ms.margin) && ms.margin >= -kMarginTolerance * ms.scale &&
                 ms.admissible;
            const double rel = ms.margin / ms.scale;
            rep.worst_relative_margin =
                std::min(rep.worst_relative_margin,
                         std::isfinite(rel) ? rel : -std::numeric_limits<double>::infinity());
        } else {
            rep.worst_relative_margin = -std::numeric_limits<double>::infinity();
        }
        rep.pass = rep.pass && ok;
        rep.samples.push_back(std::move(ms));
    }
    return rep;
}

/// Descends ε = 2^{-i}, i = 0..max_power, returning the first (largest) ε that certifies.
inline Lemma23Result verify_lemma23(const ProfileFns& p, const TorsionProfile& w,
                                    int max_power = 20, int radii = 100) {
    Lemma23Result res;
    res.limit = check_limit_Ff(p.profile->nonlinearity(), p.k());
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= max_power; ++i) {
        const double eps = std::ldexp(1.0, -i);
        auto rep = check_torsion_barrier(p, w, eps, radii);
        res.attempts.emplace_back(eps, rep.worst_relative_margin);
        worst = std::max(worst, rep.worst_relative_margin);
        if (rep.pass) {
            res.eps = eps;
            res.report = std::move(rep);
            return res;
        }
    }
    throw CertificationFailure("verify_lemma23: epsilon ladder exhausted", worst);
}

inline nlohmann::json to_json(const MarginReport& rep) {
    nlohmann::json j;
    j["kind"] = rep.kind;
    j["pass"] = rep.pass;
    j["eps"] = rep.eps;
    j["delta_eps"] = rep.delta_eps;
    j["sigma_shift"] = rep.sigma_shift;
    j["xi"] = rep.xi;
    j["worst_relative_margin"] = rep.worst_relative_margin;
    j["sup_sigma_k_kappa"] = rep.sup_sigma_k_kappa;
    j["max_bracket_error"] = rep.max_bracket_error;
    j["samples"] = nlohmann::json::array();
    for (const auto& s : rep.samples)
        j["samples"].push_back({{"d", s.d},
                                {"t", s.t},
                                {"u", s.u},
                                {"scale", s.scale},
                                {"margin", s.margin},
                                {"sigmas", s.sigmas},
                                {"admissible", s.admissible},
                                {"ratio_vanishing", s.ratio_vanishing},
                                {"ratio_gap", s.ratio_gap}});
    return j;
}

}  // namespace khess
