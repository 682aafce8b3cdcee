#pragma once

// Right-hand-side data of S_k(D²u) = b(x) f(u): the nonlinearity f and the
// boundary weight m with b ≈ m(d)^{k+1} near the boundary.

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "khess/errors.hpp"
#include "khess/numerics.hpp"

namespace khess {

/// The nonlinearity f on (0, ∞) together with its primitive F(s) = ∫₀ˢ f.
///
/// Built-in kinds use exact antiderivatives and log-space formulas so that
/// F, f and their logarithms stay finite far into the tail. The custom kind
/// tabulates F once, on a geometric grid, starting from 1e-12 with a local
/// power fit for the piece [0, 1e-12].
class Nonlinearity {
public:
    enum class Kind { power, exponential, custom };

    using Fn = std::function<double(double)>;

    static Nonlinearity power(double gamma) {
        if (!(gamma >= 0.0) || !std::isfinite(gamma))
            throw ParameterError("power nonlinearity: exponent must be finite and >= 0");
        Nonlinearity n;
        n.kind_ = Kind::power;
        n.param_ = gamma;
        return n;
    }

    static Nonlinearity exponential(double a) {
        if (!(a > 0.0) || !std::isfinite(a))
            throw ParameterError("exponential nonlinearity: rate must be positive");
        Nonlinearity n;
        n.kind_ = Kind::exponential;
        n.param_ = a;
        return n;
    }

    static Nonlinearity custom(Fn f, Fn df, std::optional<double> tail_exponent_hint = {}) {
        if (!f || !df) throw ParameterError("custom nonlinearity: f and f' are required");
        Nonlinearity n;
        n.kind_ = Kind::custom;
        n.custom_ = std::make_shared<CustomData>(std::move(f), std::move(df), tail_exponent_hint);
        return n;
    }

    Kind kind() const noexcept { return kind_; }
    /// γ for the power kind, a for the exponential kind, NaN otherwise.
    double parameter() const noexcept {
        return kind_ == Kind::custom ? std::numeric_limits<double>::quiet_NaN() : param_;
    }
    std::optional<double> tail_exponent_hint() const {
        return custom_ ? custom_->hint : std::optional<double>{};
    }

    /// f(s). Built-in kinds are extended continuously to s ≤ 0 (power: by
    /// max(s,0)^γ) so that Newton trial states never see a NaN.
    double value(double s) const {
        switch (kind_) {
            case Kind::power:
                return param_ == 0.0 ? 1.0 : std::pow(std::max(s, 0.0), param_);
            case Kind::exponential:
                return std::exp(param_ * s);
            case Kind::custom:
                return custom_->f(s);
        }
        return 0.0;
    }

    double derivative(double s) const {
        switch (kind_) {
            case Kind::power:
                if (param_ == 0.0 || s <= 0.0) return 0.0;
                return param_ * std::pow(s, param_ - 1.0);
            case Kind::exponential:
                return param_ * std::exp(param_ * s);
            case Kind::custom:
                return custom_->df(s);
        }
        return 0.0;
    }

    /// ln f(s) for s > 0.
    double log_value(double s) const {
        switch (kind_) {
            case Kind::power:
                return param_ * std::log(s);
            case Kind::exponential:
                return param_ * s;
            case Kind::custom:
                return std::log(custom_->f(s));
        }
        return 0.0;
    }

    /// F(s) = ∫₀ˢ f.
    double primitive(double s) const { return std::exp(log_primitive(s)); }

    /// ln F(s) for s > 0.
    double log_primitive(double s) const {
        switch (kind_) {
            case Kind::power:
                return (param_ + 1.0) * std::log(s) - std::log(param_ + 1.0);
            case Kind::exponential: {
                const double x = param_ * s;
                // F = expm1(x)/a, written to avoid overflow for large x.
                const double lg = x > 30.0 ? x + std::log1p(-std::exp(-x)) : std::log(std::expm1(x));
                return lg - std::log(param_);
            }
            case Kind::custom:
                return custom_->log_primitive(s);
        }
        return 0.0;
    }

    /// s f'(s) / f(s).
    double log_slope(double s) const {
        switch (kind_) {
            case Kind::power:
                return param_;
            case Kind::exponential:
                return param_ * s;
            case Kind::custom:
                return s * custom_->df(s) / custom_->f(s);
        }
        return 0.0;
    }

    /// s f(s) / F(s), the local growth exponent of F minus one.
    double primitive_log_slope(double s) const {
        switch (kind_) {
            case Kind::power:
                return param_ + 1.0;
            case Kind::exponential: {
                const double x = param_ * s;
                return x < 1e-8 ? 1.0 + 0.5 * x : x / (-std::expm1(-x));
            }
            case Kind::custom:
                return s * std::exp(log_value(s) - log_primitive(s));
        }
        return 0.0;
    }

    /// Samples f on a geometric grid and throws unless it is positive and nondecreasing.
    void check_positive_nondecreasing(double lo = 1e-6, double hi = 1e6) const {
        double prev = -std::numeric_limits<double>::infinity();
        for (double s = lo; s <= hi * 1.0000001; s *= std::pow(10.0, 1.0 / 16.0)) {
            const double v = value(s);
            if (!(v > 0.0))
                throw ConditionViolation("(f1)", "f must be positive, f(" + std::to_string(s) +
                                                     ") = " + std::to_string(v));
            if (v < prev * (1.0 - 1e-12))
                throw ConditionViolation("(f1)", "f must be nondecreasing near s = " +
                                                     std::to_string(s));
            prev = v;
        }
    }

    std::string describe() const {
        std::ostringstream os;
        switch (kind_) {
            case Kind::power:
                os << "power(gamma=" << param_ << ")";
                break;
            case Kind::exponential:
                os << "exponential(a=" << param_ << ")";
                break;
            case Kind::custom:
                os << "custom";
                break;
        }
        return os.str();
    }

private:
    struct CustomData {
        Fn f, df;
        std::optional<double> hint;
        // ln F on s_i = eps0 * 10^{i/64}
        double eps0 = 1e-12;
        double step = std::log(10.0) / 64.0;
        std::vector<double> log_F;
        double low_exponent = 0.0;  // local power of f at eps0

        CustomData(Fn f_, Fn df_, std::optional<double> h)
            : f(std::move(f_)), df(std::move(df_)), hint(h) {
            const double f0 = f(eps0);
            if (!(f0 > 0.0) || !std::isfinite(f0))
                throw ConditionViolation("(f1)", "custom f must be positive near 0");
            low_exponent = std::max(0.0, eps0 * df(eps0) / f0);
            double F = eps0 * f0 / (low_exponent + 1.0);
            log_F.push_back(std::log(F));
            const int nodes = 64 * 72;  // up to 1e60
            for (int i = 0; i < nodes; ++i) {
                const double y0 = std::log(eps0) + i * step;
                const double piece = numerics::integrate_panel(
                    [&](double y) {
                        const double s = std::exp(y);
                        return s * f(s);
                    },
                    y0, y0 + step);
                if (!std::isfinite(piece) || !std::isfinite(F + piece)) break;
                F += piece;
                log_F.push_back(std::log(F));
            }
        }

        double log_primitive(double s) const {
            if (!(s > 0.0)) throw ParameterError("custom nonlinearity: F needs s > 0");
            const double y = std::log(s);
            const double y0 = std::log(eps0);
            if (y <= y0) return log_F[0] + (low_exponent + 1.0) * (y - y0);
            const double pos = (y - y0) / step;
            const std::size_t i = static_cast<std::size_t>(pos);
            if (i + 1 >= log_F.size()) {
                // Local power extrapolation past the last finite node.
                const double ylast = y0 + (log_F.size() - 1) * step;
                const double slast = std::exp(ylast);
                const double q = slast * f(slast) / std::exp(log_F.back());
                return log_F.back() + q * (y - ylast);
            }
            const double yi = y0 + i * step;
            const double piece = numerics::integrate_panel(
                [&](double yy) {
                    const double t = std::exp(yy);
                    return t * f(t);
                },
                yi, y);
            return std::log(std::exp(log_F[i]) + piece);
        }
    };

    Kind kind_ = Kind::power;
    double param_ = 0.0;
    std::shared_ptr<const CustomData> custom_;
};

/// Boundary weight m on (0, δ₀) with b̲ ≤ b/m^{k+1} ≤ b̄ near the boundary,
/// and its primitive M(t) = ∫₀ᵗ m.
class Weight {
public:
    enum class Kind { constant, power, custom };
    using Fn = std::function<double(double)>;

    static Weight constant(double c = 1.0, double delta0 = 1.0, double b_lower = 1.0,
                           double b_upper = 1.0) {
        if (!(c > 0.0)) throw ParameterError("constant weight must be positive");
        Weight w(Kind::constant, c, delta0, b_lower, b_upper);
        return w;
    }

    static Weight power(double alpha, double delta0 = 1.0, double b_lower = 1.0,
                        double b_upper = 1.0) {
        if (!(alpha > 0.0)) throw ParameterError("power weight needs alpha > 0");
        return Weight(Kind::power, alpha, delta0, b_lower, b_upper);
    }

    static Weight custom(Fn m, Fn dm, double delta0, double b_lower, double b_upper) {
        if (!m || !dm) throw ParameterError("custom weight: m and m' are required");
        Weight w(Kind::custom, 0.0, delta0, b_lower, b_upper);
        w.m_ = std::move(m);
        w.dm_ = std::move(dm);
        w.check_positive_nondecreasing();
        return w;
    }

    Kind kind() const noexcept { return kind_; }
    double parameter() const noexcept { return param_; }
    double delta0() const noexcept { return delta0_; }
    double b_lower() const noexcept { return b_lower_; }
    double b_upper() const noexcept { return b_upper_; }

    double m(double t) const {
        switch (kind_) {
            case Kind::constant:
                return param_;
            case Kind::power:
                return std::pow(t, param_);
            case Kind::custom:
                return m_(t);
        }
        return 0.0;
    }

    double dm(double t) const {
        switch (kind_) {
            case Kind::constant:
                return 0.0;
            case Kind::power:
                return param_ * std::pow(t, param_ - 1.0);
            case Kind::custom:
                return dm_(t);
        }
        return 0.0;
    }

    double M(double t) const {
        switch (kind_) {
            case Kind::constant:
                return param_ * t;
            case Kind::power:
                return std::pow(t, param_ + 1.0) / (param_ + 1.0);
            case Kind::custom:
                return numerics::integrate(m_, 0.0, t, 1e-13);
        }
        return 0.0;
    }

    void check_positive_nondecreasing() const {
        double prev = 0.0;
        for (int i = 1; i <= 200; ++i) {
            const double t = delta0_ * std::pow(10.0, -6.0 + 6.0 * i / 200.0) * (1.0 - 1e-9);
            const double v = m(t);
            if (!(v > 0.0)) throw ConditionViolation("(b2)", "m must be positive on (0, delta0)");
            if (v < prev * (1.0 - 1e-12))
                throw ConditionViolation("(b2)", "m must be nondecreasing on (0, delta0)");
            prev = v;
        }
    }

    std::string describe() const {
        std::ostringstream os;
        switch (kind_) {
            case Kind::constant:
                os << "constant(c=" << param_ << ")";
                break;
            case Kind::power:
                os << "power(alpha=" << param_ << ")";
                break;
            case Kind::custom:
                os << "custom";
                break;
        }
        return os.str();
    }

private:
    Weight(Kind kind, double param, double delta0, double b_lower, double b_upper)
        : kind_(kind), param_(param), delta0_(delta0), b_lower_(b_lower), b_upper_(b_upper) {
        if (!(delta0 > 0.0)) throw ParameterError("weight: delta0 must be positive");
        if (!(b_lower > 0.0)) throw ConditionViolation("(b2)", "b_lower must be positive");
        if (!(b_upper >= b_lower))
            throw ConditionViolation("(b2)", "b_lower must not exceed b_upper");
    }

    Kind kind_;
    double param_;
    double delta0_, b_lower_, b_upper_;
    Fn m_, dm_;
};

}  // namespace khess
