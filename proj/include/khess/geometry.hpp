#pragma once

// Disks and ellipses x²/a² + y²/b² < 1 (a ≥ b > 0): membership, distance to the
// boundary, nearest boundary parameter and boundary curvature.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "khess/errors.hpp"

namespace khess {

struct NearestPoint {
    double distance;  // |x - x̄|, positive inside
    double t;         // x̄ = (a cos t, b sin t)
};

class DomainSpec2D {
public:
    enum class Kind { disk, ellipse };

    static DomainSpec2D disk(double R) {
        if (!(R > 0.0)) throw ParameterError("disk: radius must be positive");
        return DomainSpec2D(Kind::disk, R, R);
    }

    static DomainSpec2D ellipse(double a, double b) {
        if (!(b > 0.0) || !(a >= b)) throw ParameterError("ellipse: need a >= b > 0");
        return DomainSpec2D(Kind::ellipse, a, b);
    }

    Kind kind() const noexcept { return kind_; }
    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    double diameter() const noexcept { return 2.0 * a_; }

    bool inside(double x, double y) const {
        return (x / a_) * (x / a_) + (y / b_) * (y / b_) < 1.0;
    }

    /// Boundary abscissa on the horizontal line through y, on the side `sign`.
    double boundary_x(double y, double sign) const {
        const double s = 1.0 - (y / b_) * (y / b_);
        return sign * a_ * std::sqrt(std::max(s, 0.0));
    }

    double boundary_y(double x, double sign) const {
        const double s = 1.0 - (x / a_) * (x / a_);
        return sign * b_ * std::sqrt(std::max(s, 0.0));
    }

    /// Nearest boundary point of an interior point. Closed form for the disk;
    /// for the ellipse, Newton on the stationarity condition
    ///   g(t) = (b² - a²) sin t cos t + a x sin t - b y cos t = 0
    /// in the first quadrant (by symmetry) from four guarded starts.
    NearestPoint nearest(double x, double y) const {
        if (kind_ == Kind::disk) {
            const double r = std::hypot(x, y);
            return {a_ - r, r > 0.0 ? std::atan2(y, x) : std::numbers::pi / 2};
        }
        const double X = std::abs(x), Y = std::abs(y);
        const double half_pi = std::numbers::pi / 2;
        auto g = [&](double t) {
            return (b_ * b_ - a_ * a_) * std::sin(t) * std::cos(t) + a_ * X * std::sin(t) -
                   b_ * Y * std::cos(t);
        };
        auto dg = [&](double t) {
            return (b_ * b_ - a_ * a_) * std::cos(2.0 * t) + a_ * X * std::cos(t) +
                   b_ * Y * std::sin(t);
        };
        auto dist2 = [&](double t) {
            const double dx = a_ * std::cos(t) - X, dy = b_ * std::sin(t) - Y;
            return dx * dx + dy * dy;
        };
        double best_t = 0.0, best = dist2(0.0);
        if (dist2(half_pi) < best) {
            best = dist2(half_pi);
            best_t = half_pi;
        }
        for (double t0 : {0.0, half_pi / 3, 2 * half_pi / 3, half_pi}) {
            double t = t0;
            for (int it = 0; it < 100; ++it) {
                const double d = dg(t);
                double step = d != 0.0 ? g(t) / d : 0.0;
                double tn = t - step;
                if (!(tn >= 0.0 && tn <= half_pi)) tn = std::clamp(tn, 0.0, half_pi);
                if (std::abs(tn - t) <= 1e-15) {
                    t = tn;
                    break;
                }
                t = tn;
            }
            if (dist2(t) < best) {
                best = dist2(t);
                best_t = t;
            }
        }
        double t = best_t;
        if (x < 0.0) t = std::numbers::pi - t;
        if (y < 0.0) t = -t;
        return {std::sqrt(best), t};
    }

    double distance(double x, double y) const { return nearest(x, y).distance; }

    /// Curvature of the boundary at parameter t.
    double curvature(double t) const {
        const double s = std::sin(t), c = std::cos(t);
        return a_ * b_ / std::pow(a_ * a_ * s * s + b_ * b_ * c * c, 1.5);
    }

    double min_curvature() const { return b_ / (a_ * a_); }
    double max_curvature() const { return a_ / (b_ * b_); }

    std::string describe() const {
        std::ostringstream os;
        if (kind_ == Kind::disk)
            os << "disk(R=" << a_ << ")";
        else
            os << "ellipse(a=" << a_ << ", b=" << b_ << ")";
        return os.str();
    }

private:
    DomainSpec2D(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}
    Kind kind_;
    double a_, b_;
};

}  // namespace khess
