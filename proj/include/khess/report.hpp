#pragma once

// Boundary-asymptotics reports: u against the predicted profile φ(ξ M(d)).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "khess/errors.hpp"
#include "khess/profile.hpp"
#include "khess/radial.hpp"

namespace khess {

/// One row at distance d. Radial rows have a single sample; binned 2D rows
/// carry the spread of the ratio over their bin, with `ratio` the median.
struct AsymptoticsRow {
    double d = 0.0;
    double u = 0.0;
    double predicted = 0.0;
    double ratio = 0.0;
    double ratio_min = 0.0;
    double ratio_max = 0.0;
    std::size_t count = 1;
    bool flagged = false;  // truncation diagnostic: still moving with j
};

struct AsymptoticsReport {
    double xi = 0.0;
    std::vector<AsymptoticsRow> rows;

    const AsymptoticsRow& nearest(double d) const {
        if (rows.empty()) throw ParameterError("asymptotics report: no rows");
        return *std::min_element(rows.begin(), rows.end(), [d](const auto& a, const auto& b) {
            return std::abs(std::log(a.d / d)) < std::abs(std::log(b.d / d));
        });
    }
};

/// Requested rows that could not be produced; `available()` holds the rest.
class ReportTruncated : public Error {
public:
    ReportTruncated(const std::string& what, AsymptoticsReport available)
        : Error(what), available_(std::move(available)) {}
    const AsymptoticsReport& available() const noexcept { return available_; }

private:
    AsymptoticsReport available_;
};

/// d_i = d_max · 10^{-i/per_decade}, i = 0..decades·per_decade.
inline std::vector<double> geometric_ladder(double d_max, int decades, int per_decade = 4) {
    if (!(d_max > 0.0) || decades < 1 || per_decade < 1)
        throw ParameterError("geometric ladder: need d_max > 0 and positive counts");
    std::vector<double> d;
    for (int i = 0; i <= decades * per_decade; ++i)
        d.push_back(d_max * std::pow(10.0, -static_cast<double>(i) / per_decade));
    return d;
}

/// Rows at the requested distances d = Rstar - r.
inline AsymptoticsReport asymptotics_report(const RadialSolution& sol, const ProfileFns& p,
                                            double xi, const std::vector<double>& distances) {
    if (!std::isfinite(sol.Rstar)) throw ParameterError("asymptotics report: solution has no Rstar");
    if (!(xi > 0.0)) throw ParameterError("asymptotics report: xi must be positive");
    AsymptoticsReport rep;
    rep.xi = xi;
    std::vector<double> missing;
    for (double d : distances) {
        const double r = sol.Rstar - d;
        if (!(d > 0.0) || !(d < sol.Rstar) || r < sol.r.front() || r > sol.r_max() ||
            !(d < p.weight.weight.delta0())) {
            missing.push_back(d);
            continue;
        }
        AsymptoticsRow row;
        row.d = d;
        row.u = sol.u_at(r);
        row.predicted = predicted_profile(p, xi, d);
        row.ratio = row.ratio_min = row.ratio_max = row.u / row.predicted;
        rep.rows.push_back(row);
    }
    if (!missing.empty()) {
        std::string list;
        for (double d : missing) list += (list.empty() ? "" : ", ") + std::to_string(d);
        throw ReportTruncated("asymptotics report: no resolved sample at d = " + list, rep);
    }
    return rep;
}

/// Default ladder: from 0.1·Rstar down over `decades` decades.
inline AsymptoticsReport asymptotics_report(const RadialSolution& sol, const ProfileFns& p,
                                            double xi, int decades = 3) {
    return asymptotics_report(sol, p, xi, geometric_ladder(0.1 * sol.Rstar, decades));
}

inline void write_csv(std::ostream& os, const AsymptoticsReport& rep) {
    os << "d,u,predicted,ratio,ratio_min,ratio_max,count,flagged\n";
    os.precision(17);
    for (const auto& r : rep.rows)
        os << r.d << ',' << r.u << ',' << r.predicted << ',' << r.ratio << ',' << r.ratio_min << ','
           << r.ratio_max << ',' << r.count << ',' << (r.flagged ? 1 : 0) << '\n';
}

inline nlohmann::json to_json(const AsymptoticsReport& rep) {
    nlohmann::json j;
    j["xi"] = rep.xi;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rep.rows)
        j["rows"].push_back({{"d", r.d},
                             {"u", r.u},
                             {"predicted", r.predicted},
                             {"ratio", r.ratio},
                             {"ratio_min", r.ratio_min},
                             {"ratio_max", r.ratio_max},
                             {"count", r.count},
                             {"flagged", r.flagged}});
    return j;
}

inline void write_csv(std::ostream& os, const RadialSolution& sol) {
    os << "r,u,u1\n";
    os.precision(17);
    for (std::size_t i = 0; i < sol.r.size(); ++i)
        os << sol.r[i] << ',' << sol.u[i] << ',' << sol.u1[i] << '\n';
}

inline nlohmann::json to_json(const RadialSolution& sol) {
    nlohmann::json j;
    j["Rstar"] = std::isfinite(sol.Rstar) ? nlohmann::json(sol.Rstar) : nlohmann::json(nullptr);
    j["nodes"] = sol.r.size();
    j["steps"] = sol.meta.steps;
    j["newton_iterations"] = sol.meta.newton_iterations;
    j["tol"] = sol.meta.tol;
    if (std::isfinite(sol.meta.boundary_value)) j["boundary_value"] = sol.meta.boundary_value;
    if (!sol.meta.terminated_by.empty()) j["terminated_by"] = sol.meta.terminated_by;
    if (!sol.meta.threshold_radii.empty()) j["threshold_radii"] = sol.meta.threshold_radii;
    return j;
}

/// Profile table rows (t, φ, φ′, M, φ(ξ M(t))) on a geometric grid of t.
struct ProfileTableRow {
    double t, phi, phi_prime, M, predicted;
};

inline std::vector<ProfileTableRow> profile_table(const ProfileFns& p, double xi,
                                                  const std::vector<double>& ts) {
    std::vector<ProfileTableRow> rows;
    for (double t : ts) {
        if (!(t > 0.0) || !(t < p.profile->Phi_at_zero()))
            throw ParameterError("profile table: t = " + std::to_string(t) + " outside the range of Phi");
        ProfileTableRow row{t, p.phi(t), p.profile->dphi(t), p.M(t),
                            std::numeric_limits<double>::quiet_NaN()};
        if (t < p.weight.weight.delta0() && xi * p.M(t) < p.profile->Phi_at_zero())
            row.predicted = p.phi(xi * p.M(t));
        rows.push_back(row);
    }
    return rows;
}

inline void write_csv(std::ostream& os, const std::vector<ProfileTableRow>& rows) {
    os << "t,phi,phi_prime,M,predicted\n";
    os.precision(17);
    for (const auto& r : rows) {
        os << r.t << ',' << r.phi << ',' << r.phi_prime << ',' << r.M << ',';
        if (std::isfinite(r.predicted)) os << r.predicted;
        os << '\n';
    }
}

inline nlohmann::json profile_header(const ProfileFns& p, const Nonlinearity& f) {
    nlohmann::json j;
    j["k"] = p.k();
    j["nonlinearity"] = f.describe();
    if (f.kind() != Nonlinearity::Kind::custom) j["nonlinearity_parameter"] = f.parameter();
    j["weight"] = p.weight.weight.describe();
    j["C_f"] = p.C_f;
    j["C_m"] = p.C_m;
    j["ko_ok"] = p.ko_ok;
    j["condition15_ok"] = p.condition15_ok;
    return j;
}

}  // namespace khess
