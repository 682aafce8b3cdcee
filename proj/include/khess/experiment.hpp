#pragma once

// Flat key = value experiment configs and the pipelines they drive. Report
// bodies are a pure function of the config and seed; wall-clock data goes to
// a separate run_meta.json.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "khess/barrier.hpp"
#include "khess/errors.hpp"
#include "khess/fd2d.hpp"
#include "khess/geometry.hpp"
#include "khess/nonlinearity.hpp"
#include "khess/profile.hpp"
#include "khess/radial.hpp"
#include "khess/report.hpp"

namespace khess {

enum class ExitStatus : int { ok = 0, failure = 1, invalid = 2 };

inline const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys{
        "command", "n", "k", "domain", "radius", "a", "b",
        "nonlinearity", "gamma", "rate",
        "weight", "alpha", "weight_c", "delta0", "b_lower", "b_upper",
        "C_f", "C_m", "tol",
        "xi", "t_min", "t_max", "per_decade",
        "u0", "threshold",
        "j_schedule", "grid_h", "h",
        "eps", "samples", "seed", "initial_fraction", "sigma_fraction", "lemma23", "max_power",
        "d_min", "d_max", "ratio_band"};
    return keys;
}

inline const std::set<std::string>& known_commands() {
    static const std::set<std::string> cmds{"profile",      "radial-ivp",    "radial-exhaust",
                                            "fd-exhaust",   "check-barrier", "verify-asymptotics"};
    return cmds;
}

/// Parsed config: string values keyed by name, typed on access.
class ExperimentConfig {
public:
    static ExperimentConfig parse(std::istream& in) {
        ExperimentConfig c;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ParameterError("config line " + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
            if (!known_config_keys().count(key))
                throw ParameterError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
            if (value.empty())
                throw ParameterError("config line " + std::to_string(lineno) + ": empty value for '" + key + "'");
            if (!c.values_.emplace(key, value).second)
                throw ParameterError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
        return c;
    }

    static ExperimentConfig parse_string(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    static ExperimentConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ParameterError("cannot open config '" + path.string() + "'");
        return parse(in);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    void set(const std::string& key, const std::string& value) {
        if (!known_config_keys().count(key)) throw ParameterError("unknown key '" + key + "'");
        values_[key] = value;
    }

    std::string str(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::string str(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ParameterError("config: missing required key '" + key + "'");
        return it->second;
    }

    double num(const std::string& key, double fallback) const {
        return has(key) ? num(key) : fallback;
    }

    double num(const std::string& key) const {
        const std::string v = str(key);
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != v.size() || !std::isfinite(x))
            throw ParameterError("config: '" + key + "' is not a finite number: " + v);
        return x;
    }

    long integer(const std::string& key, long fallback) const {
        if (!has(key)) return fallback;
        const double x = num(key);
        if (x != std::floor(x)) throw ParameterError("config: '" + key + "' must be an integer");
        return static_cast<long>(x);
    }

    bool flag(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const std::string v = str(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ParameterError("config: '" + key + "' must be true or false");
    }

    std::vector<double> list(const std::string& key) const {
        std::vector<double> out;
        std::stringstream ss(str(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            std::size_t used = 0;
            double x = 0.0;
            try {
                x = std::stod(item, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (item.empty() || used != item.size() || !std::isfinite(x))
                throw ParameterError("config: '" + key + "' has a bad entry '" + item + "'");
            out.push_back(x);
        }
        return out;
    }

    std::vector<double> list(const std::string& key, std::vector<double> fallback) const {
        return has(key) ? list(key) : fallback;
    }

    const std::map<std::string, std::string>& values() const noexcept { return values_; }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, std::string> values_;
};

/// The problem data a config describes, validated before any computation.
struct Experiment {
    std::string command;
    int n = 2, k = 1;
    std::string domain = "ball";
    double radius = 1.0, a = 1.0, b = 1.0;
    Nonlinearity f = Nonlinearity::power(3.0);
    Weight w = Weight::constant();
    std::optional<double> C_f, C_m;
    double tol = 1e-10;
    std::uint64_t seed = 0;
    ExperimentConfig cfg;

    static Experiment from_config(const ExperimentConfig& cfg) {
        Experiment e;
        e.cfg = cfg;
        e.command = cfg.str("command");
        if (!known_commands().count(e.command))
            throw ParameterError("config: unknown command '" + e.command + "'");
        e.n = static_cast<int>(cfg.integer("n", 2));
        e.k = static_cast<int>(cfg.integer("k", 1));
        if (e.n < 2) throw ParameterError("config: dimension n must be >= 2");
        if (e.k < 1 || e.k > e.n) throw ParameterError("config: need 1 <= k <= n");

        e.domain = cfg.str("domain", "ball");
        e.radius = cfg.num("radius", 1.0);
        if (e.domain == "ball") {
            if (!(e.radius > 0.0)) throw ParameterError("config: radius must be positive");
            e.a = e.b = e.radius;
        } else if (e.domain == "ellipse") {
            if (e.n != 2) throw ParameterError("config: ellipse domains need n = 2");
            e.a = cfg.num("a");
            e.b = cfg.num("b");
            if (!(e.b > 0.0) || !(e.a >= e.b)) throw ParameterError("config: ellipse needs a >= b > 0");
        } else {
            throw ParameterError("config: domain must be ball or ellipse");
        }

        const std::string fk = cfg.str("nonlinearity", "power");
        if (fk == "power") {
            const double g = cfg.num("gamma");
            if (!(g > e.k))
                throw ConditionViolation("(f2)", "power nonlinearity needs gamma > k (gamma = " +
                                                     cfg.str("gamma") + ", k = " + std::to_string(e.k) + ")");
            e.f = Nonlinearity::power(g);
        } else if (fk == "exponential") {
            const double r = cfg.num("rate", 1.0);
            if (!(r > 0.0)) throw ConditionViolation("(f1)", "exponential rate must be positive");
            e.f = Nonlinearity::exponential(r);
        } else {
            throw ParameterError("config: nonlinearity must be power or exponential");
        }

        const double delta0 = cfg.num("delta0", 1.0);
        const double bl = cfg.num("b_lower", 1.0), bu = cfg.num("b_upper", bl);
        if (!(delta0 > 0.0)) throw ParameterError("config: delta0 must be positive");
        if (!(bl > 0.0) || !(bu >= bl)) throw ConditionViolation("(b2)", "need 0 < b_lower <= b_upper");
        const std::string wk = cfg.str("weight", "constant");
        if (wk == "constant") {
            const double c = cfg.num("weight_c", 1.0);
            if (!(c > 0.0)) throw ConditionViolation("(b2)", "constant weight must be positive");
            e.w = Weight::constant(c, delta0, bl, bu);
        } else if (wk == "power") {
            const double al = cfg.num("alpha");
            if (!(al > 0.0)) throw ConditionViolation("(b2)", "power weight needs alpha > 0");
            e.w = Weight::power(al, delta0, bl, bu);
        } else {
            throw ParameterError("config: weight must be constant or power");
        }

        if (cfg.has("C_f")) e.C_f = cfg.num("C_f");
        if (cfg.has("C_m")) e.C_m = cfg.num("C_m");
        if (e.C_f && e.C_m && !(*e.C_f > 1.0 - *e.C_m))
            throw ConditionViolation("(1.5)", "C_f > 1 - C_m fails (C_f = " + cfg.str("C_f") +
                                                  ", C_m = " + cfg.str("C_m") + ")");

        e.tol = cfg.num("tol", 1e-10);
        if (!(e.tol > 0.0)) throw ParameterError("config: tol must be positive");
        const long seed = cfg.integer("seed", 0);
        if (seed < 0) throw ParameterError("config: seed must be non-negative");
        e.seed = static_cast<std::uint64_t>(seed);

        if (cfg.has("eps")) {
            const double eps = cfg.num("eps");
            if (!(eps > 0.0) || !(eps < bl / 2.0))
                throw ParameterError("config: eps must satisfy 0 < eps < b_lower/2");
        }
        if (cfg.has("j_schedule")) {
            const auto js = cfg.list("j_schedule");
            if (js.empty()) throw ParameterError("config: j_schedule is empty");
            for (std::size_t i = 1; i < js.size(); ++i)
                if (!(js[i] > js[i - 1]))
                    throw ParameterError("config: j_schedule must be strictly increasing");
        }
        const bool radial = e.command == "radial-ivp" || e.command == "radial-exhaust" ||
                            e.command == "verify-asymptotics";
        if (radial && e.domain != "ball") throw ParameterError("config: " + e.command + " needs a ball");
        if (e.command == "fd-exhaust" && e.n != 2) throw ParameterError("config: fd-exhaust needs n = 2");
        if (e.command == "fd-exhaust" && e.k != 1)
            throw ParameterError("config: fd-exhaust solves k = 1 only");
        return e;
    }

    /// Profile bundle with any configured overrides of the limit constants.
    ProfileFns profile_fns() const {
        ProfileFns p = make_profile_fns(f, k, w);
        if (C_f) p.C_f = *C_f;
        if (C_m) p.C_m = *C_m;
        p.condition15_ok = p.C_f > 1.0 - p.C_m;
        return p;
    }

    RadialProblem radial_problem() const { return RadialProblem::with_weight(n, k, radius, f, w); }

    CollarGeometry collar() const {
        return domain == "ellipse" ? CollarGeometry::ellipse(a, b) : CollarGeometry::ball(n, radius);
    }
};

/// Files produced by a run and the verdict of its checks.
struct RunResult {
    ExitStatus status = ExitStatus::ok;
    std::string summary;
    std::vector<std::filesystem::path> files;
    bool error = false;  // rejected or crashed, as opposed to a check that ran and failed
};

struct RunOptions {
    std::filesystem::path out_dir = ".";
    std::optional<std::uint64_t> seed;
};

namespace detail {

class ReportWriter {
public:
    ReportWriter(std::filesystem::path dir, std::string stem)
        : dir_(std::move(dir)), stem_(std::move(stem)) {
        std::filesystem::create_directories(dir_);
    }

    std::filesystem::path write(const std::string& suffix, const std::string& body) {
        const auto path = dir_ / (stem_ + suffix);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write '" + path.string() + "'");
        out << body;
        files_.push_back(path);
        return path;
    }

    std::filesystem::path json(const nlohmann::json& j) { return write(".json", j.dump(2) + "\n"); }

    const std::vector<std::filesystem::path>& files() const noexcept { return files_; }

private:
    std::filesystem::path dir_;
    std::string stem_;
    std::vector<std::filesystem::path> files_;
};

inline nlohmann::json problem_json(const Experiment& e) {
    nlohmann::json j;
    j["command"] = e.command;
    j["config"] = e.cfg.values();
    j["seed"] = e.seed;
    return j;
}

inline std::vector<double> geometric_points(double lo, double hi, int per_decade) {
    if (!(lo > 0.0) || !(hi > lo) || per_decade < 1)
        throw ParameterError("config: need 0 < lower < upper and per_decade >= 1");
    std::vector<double> t;
    const int steps = static_cast<int>(std::ceil(std::log10(hi / lo) * per_decade - 1e-9));
    for (int i = 0; i <= steps; ++i) t.push_back(hi * std::pow(10.0, -static_cast<double>(i) / per_decade));
    t.back() = lo;
    std::reverse(t.begin(), t.end());
    return t;
}

inline RunResult run_profile(const Experiment& e, ReportWriter& out) {
    const auto p = e.profile_fns();
    const double xi = e.cfg.num("xi", 1.0);
    const auto ts = geometric_points(e.cfg.num("t_min", 1e-3), e.cfg.num("t_max", 1.0),
                                     static_cast<int>(e.cfg.integer("per_decade", 4)));
    const auto rows = profile_table(p, xi, ts);
    std::ostringstream csv;
    write_csv(csv, rows);
    out.write(".csv", csv.str());
    auto j = problem_json(e);
    j["profile"] = profile_header(p, e.f);
    j["xi"] = xi;
    j["rows"] = rows.size();
    out.json(j);
    return {ExitStatus::ok, "profile: " + std::to_string(rows.size()) + " rows", {}};
}

inline RunResult run_radial_ivp(const Experiment& e, ReportWriter& out) {
    const auto prob = e.radial_problem();
    const double threshold = e.cfg.num("threshold", 1e12);
    const double u0 = e.cfg.has("u0") ? e.cfg.num("u0") : shoot_to_radius(prob, e.radius, e.tol, threshold);
    const auto sol = integrate_blowup_ivp(prob, u0, e.tol, threshold);
    std::ostringstream csv;
    write_csv(csv, sol);
    out.write(".csv", csv.str());
    auto j = problem_json(e);
    j["u0"] = u0;
    j["solution"] = to_json(sol);
    out.json(j);
    std::ostringstream s;
    s << std::setprecision(10) << "radial-ivp: u0 = " << u0 << ", Rstar = " << sol.Rstar;
    return {ExitStatus::ok, s.str(), {}};
}

inline RunResult run_radial_exhaust(const Experiment& e, ReportWriter& out) {
    const auto prob = e.radial_problem();
    const auto js = e.cfg.list("j_schedule", {2.0, 4.0, 6.0, 8.0});
    const auto sols = solve_exhaustion_bvp(prob, js, e.cfg.num("grid_h", 0.01), e.tol);
    std::ostringstream csv;
    csv << "r";
    for (double jv : js) csv << ",u_j" << jv;
    csv << '\n';
    csv.precision(17);
    for (std::size_t i = 0; i < sols.front().r.size(); ++i) {
        csv << sols.front().r[i];
        for (const auto& s : sols) csv << ',' << s.u[i];
        csv << '\n';
    }
    out.write(".csv", csv.str());

    std::vector<double> min_inc, centre_inc;
    bool monotone = true;
    for (std::size_t m = 1; m < sols.size(); ++m) {
        double mn = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < sols[m].u.size(); ++i) mn = std::min(mn, sols[m].u[i] - sols[m - 1].u[i]);
        min_inc.push_back(mn);
        monotone = monotone && mn >= -1e-8;
        centre_inc.push_back(sols[m].u.front() - sols[m - 1].u.front());
    }
    bool contracting = true;
    for (std::size_t m = 1; m < centre_inc.size(); ++m) contracting = contracting && centre_inc[m] < centre_inc[m - 1];
    const bool pass = monotone && contracting;
    auto j = problem_json(e);
    j["j"] = js;
    j["centre"] = nlohmann::json::array();
    for (const auto& s : sols) j["centre"].push_back(s.u.front());
    j["min_increment"] = min_inc;
    j["centre_increment"] = centre_inc;
    j["monotone"] = monotone;
    j["contracting"] = contracting;
    j["pass"] = pass;
    out.json(j);
    return {pass ? ExitStatus::ok : ExitStatus::failure,
            std::string(pass ? "PASS" : "FAIL") + " radial-exhaust: monotone=" + (monotone ? "yes" : "no") +
                " contracting=" + (contracting ? "yes" : "no"),
            {}};
}

inline RunResult run_fd_exhaust(const Experiment& e, ReportWriter& out) {
    const auto dom = e.domain == "ellipse" ? DomainSpec2D::ellipse(e.a, e.b) : DomainSpec2D::disk(e.radius);
    const auto grid = build_grid(dom, e.cfg.num("h", 1.0 / 32));
    const auto js = e.cfg.list("j_schedule", {2.0, 4.0, 6.0, 8.0});
    const auto res = exhaust(e.f, SourceWeight{e.w, {}}, grid, js, e.tol);
    std::ostringstream csv;
    write_csv(csv, res.limit);
    out.write(".csv", csv.str());
    const auto& dg = res.diagnostics;
    std::vector<double> centre_inc;
    for (std::size_t m = 1; m < dg.center.size(); ++m) centre_inc.push_back(dg.center[m] - dg.center[m - 1]);
    bool contracting = true;
    for (std::size_t m = 1; m < centre_inc.size(); ++m) contracting = contracting && centre_inc[m] < centre_inc[m - 1];
    const bool pass = dg.monotone && contracting;
    auto j = problem_json(e);
    j["domain"] = dom.describe();
    j["unknowns"] = grid.unknown_count();
    j["diagnostics"] = to_json(dg);
    j["centre_increment"] = centre_inc;
    j["contracting"] = contracting;
    j["pass"] = pass;
    out.json(j);
    return {pass ? ExitStatus::ok : ExitStatus::failure,
            std::string(pass ? "PASS" : "FAIL") + " fd-exhaust: monotone=" + (dg.monotone ? "yes" : "no") +
                " contracting=" + (contracting ? "yes" : "no"),
            {}};
}

inline RunResult run_check_barrier(const Experiment& e, ReportWriter& out) {
    const auto p = e.profile_fns();
    if (!p.condition15_ok)
        throw ConditionViolation("(1.5)", "C_f > 1 - C_m fails (C_f = " + std::to_string(p.C_f) +
                                              ", C_m = " + std::to_string(p.C_m) + ")");
    const auto geom = e.collar();
    CollarSearchOptions opt;
    opt.initial_fraction = e.cfg.num("initial_fraction", opt.initial_fraction);
    opt.sigma_fraction = e.cfg.num("sigma_fraction", opt.sigma_fraction);
    opt.samples = static_cast<int>(e.cfg.integer("samples", opt.samples));
    opt.seed = e.seed;
    const double eps = e.cfg.num("eps", 0.1);
    const auto cert = certify_collar(p, geom, eps, collar_source(p), opt);

    std::ostringstream csv;
    csv << "kind,d,t,u,scale,margin,admissible\n";
    csv.precision(17);
    for (const auto* rep : {&cert.super, &cert.sub})
        for (const auto& s : rep->samples)
            csv << rep->kind << ',' << s.d << ',' << s.t << ',' << s.u << ',' << s.scale << ',' << s.margin
                << ',' << (s.admissible ? 1 : 0) << '\n';
    out.write(".csv", csv.str());

    bool pass = cert.super.pass && cert.sub.pass;
    auto j = problem_json(e);
    j["geometry"] = geom.description;
    j["C_f"] = p.C_f;
    j["C_m"] = p.C_m;
    j["L0"] = cert.params.L0;
    j["l0"] = cert.params.l0;
    j["eps"] = eps;
    j["delta_eps"] = cert.params.delta_eps;
    j["sigma_shift"] = cert.params.sigma_shift;
    j["xi_eps_lower"] = cert.params.xi_eps_lower;
    j["xi_eps_upper"] = cert.params.xi_eps_upper;
    j["halvings"] = cert.halvings;
    j["supersolution"] = to_json(cert.super);
    j["subsolution"] = to_json(cert.sub);
    std::string extra;
    if (e.cfg.flag("lemma23", false)) {
        if (e.domain != "ball") throw ParameterError("config: lemma23 needs a ball");
        const auto w = solve_w(e.radial_problem());
        try {
            const auto lem = verify_lemma23(p, w, static_cast<int>(e.cfg.integer("max_power", 20)));
            j["lemma23"] = {{"eps", lem.eps}, {"pass", true}, {"report", to_json(lem.report)}};
            extra = " lemma23_eps=" + std::to_string(lem.eps);
        } catch (const CertificationFailure& cf) {
            j["lemma23"] = {{"pass", false}, {"worst_margin", cf.worst_margin()}};
            pass = false;
            extra = " lemma23=FAIL";
        }
    }
    j["pass"] = pass;
    out.json(j);
    std::ostringstream s;
    s << (pass ? "PASS" : "FAIL") << " check-barrier: delta_eps=" << cert.params.delta_eps
      << " worst_super=" << cert.super.worst_relative_margin << " worst_sub=" << cert.sub.worst_relative_margin
      << extra;
    return {pass ? ExitStatus::ok : ExitStatus::failure, s.str(), {}};
}

inline RunResult run_verify_asymptotics(const Experiment& e, ReportWriter& out) {
    const auto p = e.profile_fns();
    const auto prob = e.radial_problem();
    const auto geom = e.collar();
    const double xi = e.cfg.has("xi") ? e.cfg.num("xi")
                                      : xi_bounds(e.w, geom.L0(e.k), geom.l0(e.k), p.C_f, p.C_m, e.k).lower;
    const double u0 = shoot_to_radius(prob, e.radius, e.tol);
    const auto sol = integrate_blowup_ivp(prob, u0, e.tol);
    const auto ds = geometric_points(e.cfg.num("d_min", 1e-4), e.cfg.num("d_max", 1e-2),
                                     static_cast<int>(e.cfg.integer("per_decade", 4)));
    const auto rep = asymptotics_report(sol, p, xi, ds);
    const double band = e.cfg.num("ratio_band", 0.1);
    bool in_band = true;
    for (const auto& r : rep.rows) in_band = in_band && std::abs(r.ratio - 1.0) <= band;
    const double near = std::abs(rep.rows.front().ratio - 1.0), far = std::abs(rep.rows.back().ratio - 1.0);
    const bool trend = near <= far;
    const bool pass = in_band && trend;
    std::ostringstream csv;
    write_csv(csv, rep);
    out.write(".csv", csv.str());
    auto j = problem_json(e);
    j["u0"] = u0;
    j["Rstar"] = sol.Rstar;
    j["report"] = to_json(rep);
    j["in_band"] = in_band;
    j["trend"] = trend;
    j["pass"] = pass;
    out.json(j);
    std::ostringstream s;
    s << (pass ? "PASS" : "FAIL") << " verify-asymptotics: xi=" << xi << " ratio(d_min)=" << rep.rows.front().ratio
      << " ratio(d_max)=" << rep.rows.back().ratio;
    return {pass ? ExitStatus::ok : ExitStatus::failure, s.str(), {}};
}

inline nlohmann::json error_json(const std::exception& ex) {
    nlohmann::json j;
    j["message"] = ex.what();
    if (auto* c = dynamic_cast<const ConditionViolation*>(&ex)) j["condition"] = c->label();
    if (auto* s = dynamic_cast<const SolveFailure*>(&ex)) j["residual_history"] = s->residual_history();
    if (auto* i = dynamic_cast<const IntegrationFailure*>(&ex)) j["state"] = {{"r", i->r()}, {"u", i->u()}, {"du", i->du()}};
    if (auto* c = dynamic_cast<const CertificationFailure*>(&ex)) j["worst_margin"] = c->worst_margin();
    if (auto* l = dynamic_cast<const LimitNotDetected*>(&ex)) j["sequence"] = l->sequence();
    if (auto* k = dynamic_cast<const KellerOssermanViolation*>(&ex)) j["tail_exponent"] = k->tail_exponent();
    return j;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

}  // namespace detail

/// Validates and runs one experiment. Status 2 means the config was rejected
/// before computing; status 1 means a computation failed (diagnostic.json) or
/// a verification check did not pass.
inline RunResult run(ExperimentConfig cfg, const RunOptions& opt) {
    const auto started = std::chrono::steady_clock::now();
    RunResult result;
    std::optional<Experiment> exp;
    try {
        if (opt.seed) cfg.set("seed", std::to_string(*opt.seed));
        exp = Experiment::from_config(cfg);
    } catch (const ParameterError& ex) {
        return {ExitStatus::invalid, std::string("invalid config: ") + ex.what(), {}, true};
    } catch (const ConditionViolation& ex) {
        return {ExitStatus::invalid, std::string("invalid config: ") + ex.what(), {}, true};
    }

    detail::ReportWriter out(opt.out_dir, exp->command);
    try {
        const auto& c = exp->command;
        if (c == "profile") result = detail::run_profile(*exp, out);
        else if (c == "radial-ivp") result = detail::run_radial_ivp(*exp, out);
        else if (c == "radial-exhaust") result = detail::run_radial_exhaust(*exp, out);
        else if (c == "fd-exhaust") result = detail::run_fd_exhaust(*exp, out);
        else if (c == "check-barrier") result = detail::run_check_barrier(*exp, out);
        else result = detail::run_verify_asymptotics(*exp, out);
    } catch (const ConditionViolation& ex) {
        result = {ExitStatus::invalid, std::string("invalid problem: ") + ex.what(), {}, true};
    } catch (const KellerOssermanViolation& ex) {
        result = {ExitStatus::invalid, std::string("invalid problem: (f2): ") + ex.what(), {}, true};
    } catch (const ParameterError& ex) {
        result = {ExitStatus::invalid, std::string("invalid problem: ") + ex.what(), {}, true};
    } catch (const std::exception& ex) {
        auto j = detail::error_json(ex);
        j["command"] = exp->command;
        detail::ReportWriter diag(opt.out_dir, "diagnostic");
        diag.json(j);
        result = {ExitStatus::failure, std::string("computation failed: ") + ex.what(), diag.files(), true};
    }
    for (const auto& f : out.files()) result.files.push_back(f);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    detail::ReportWriter meta(opt.out_dir, "run_meta");
    meta.json({{"command", exp->command},
               {"timestamp", detail::utc_timestamp()},
               {"wall_seconds", wall},
               {"status", static_cast<int>(result.status)}});
    result.files.push_back(meta.files().front());
    return result;
}

}  // namespace khess
