#pragma once

// Command-line driver. run() parses argv-style arguments, writes the report
// to out (or --output) and returns the exit code:
//   0 ok, 1 a requested check failed, 2 usage, parse or domain error,
//   3 numerical error (a structured error JSON is written instead).

#include <floatlab/convexfn.hpp>
#include <floatlab/epigraph.hpp>
#include <floatlab/errors.hpp>
#include <floatlab/experiments.hpp>
#include <floatlab/floating.hpp>
#include <floatlab/function_spec.hpp>
#include <floatlab/parallel.hpp>
#include <floatlab/surface.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace floatlab::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_check_failed = 1,
    exit_usage = 2,
    exit_numerical = 3,
};

/// Bad flags, values or config files.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        parts.push_back(trim(item));
    if (!s.empty() && s.back() == sep)
        parts.emplace_back();
    return parts;
}

inline double to_double(const std::string& s, const std::string& what)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw UsageError(what + ": '" + s + "' is not a number");
    }
    if (used != s.size())
        throw UsageError(what + ": '" + s + "' is not a number");
    return v;
}

inline int to_int(const std::string& s, const std::string& what)
{
    const double v = to_double(s, what);
    if (v != std::floor(v) || std::abs(v) > 1e9)
        throw UsageError(what + ": '" + s + "' is not an integer");
    return static_cast<int>(v);
}

inline std::vector<double> to_list(const std::string& s, const std::string& what)
{
    std::vector<double> v;
    for (const auto& p : split(s, ','))
        v.push_back(to_double(p, what));
    if (v.empty())
        throw UsageError(what + ": empty list");
    return v;
}

inline Vec to_vec(const std::string& s, const std::string& what)
{
    const auto v = to_list(s, what);
    if (v.size() > 2)
        throw UsageError(what + ": expected 1 or 2 components");
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// lo:hi:count[,lo:hi:count]
inline Grid to_grid(const std::string& s)
{
    Grid g;
    for (const auto& axis : split(s, ',')) {
        const auto f = split(axis, ':');
        if (f.size() != 3)
            throw UsageError("grid axis '" + axis + "' must read lo:hi:count");
        GridAxis a{to_double(f[0], "grid"), to_double(f[1], "grid"), to_int(f[2], "grid")};
        if (!(a.lo < a.hi) || a.count < 2)
            throw UsageError("grid axis '" + axis + "' needs lo < hi and count >= 2");
        g.axes.push_back(a);
    }
    if (g.axes.empty() || g.axes.size() > 2)
        throw UsageError("grid needs 1 or 2 axes");
    return g;
}

/// max:min:count
inline DeltaLadder to_ladder(const std::string& s)
{
    const auto f = split(s, ':');
    if (f.size() != 3)
        throw UsageError("ladder must read max:min:count");
    DeltaLadder l{to_double(f[0], "ladder"), to_double(f[1], "ladder"), to_int(f[2], "ladder")};
    try {
        l.validate();
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    return l;
}

inline ConvexFunction to_function(const std::string& text)
{
    try {
        return parse_function(text);
    } catch (const ParseError& e) {
        throw UsageError(std::string("function spec: ") + e.what());
    } catch (const ConstructionError& e) {
        throw UsageError(std::string("function spec: ") + e.what());
    }
}

inline nlohmann::json vec_json(const Vec& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

inline nlohmann::json quadrature_json(const QuadratureSpec& s)
{
    return {{"abs_tol", s.abs_tol},
            {"rel_tol", s.rel_tol},
            {"max_subdivisions", s.max_subdivisions},
            {"truncation_radius", s.truncation_radius},
            {"auto_truncation", s.auto_truncation}};
}

inline nlohmann::json float_params_json(const FloatParams& p)
{
    return {{"delta", p.delta},
            {"cut_volume_tol", p.cut_volume_tol},
            {"search", {{"coarse_count", p.search.coarse_count},
                        {"refinement_iterations", p.search.refinement_iterations},
                        {"half_width", p.search.half_width}}},
            {"polish_iterations", p.polish_iterations},
            {"quadrature", quadrature_json(p.quadrature)}};
}

inline nlohmann::json evaluation_json(const FloatingEvaluation& e)
{
    return {{"x", vec_json(e.x)},
            {"psi", e.psi},
            {"psi_delta", e.psi_delta},
            {"slope", vec_json(e.slope)},
            {"offset", e.offset},
            {"cut_volume", e.cut_volume},
            {"retried", e.retried}};
}

/// Flat key=value text; '#' starts a comment.
inline std::map<std::string, std::string> read_config(std::istream& in, const std::string& name)
{
    std::map<std::string, std::string> kv;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(name + ":" + std::to_string(number) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw UsageError(name + ":" + std::to_string(number) + ": empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

// Shared options of every subcommand.
struct Common {
    double rel_tol = QuadratureSpec{}.rel_tol;
    double abs_tol = QuadratureSpec{}.abs_tol;
    std::optional<double> truncation;
    std::string format = "json";
    std::string output;

    QuadratureSpec quadrature(int n) const
    {
        QuadratureSpec s;
        s.dimension = n;
        s.rel_tol = rel_tol;
        s.abs_tol = abs_tol;
        if (truncation) {
            s.truncation_radius = *truncation;
            s.auto_truncation = false;
        }
        try {
            s.validate();
        } catch (const DomainError& e) {
            throw UsageError(e.what());
        }
        return s;
    }
};

inline void add_common(CLI::App* sub, Common& c, bool csv)
{
    sub->add_option("--rel-tol", c.rel_tol, "quadrature relative tolerance");
    sub->add_option("--abs-tol", c.abs_tol, "quadrature absolute tolerance");
    sub->add_option("--truncation", c.truncation, "fixed truncation radius (default: from the coercive minorant)");
    if (csv)
        sub->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--output", c.output, "write the report here instead of stdout");
}

// Result of a subcommand: the document and its exit code.
struct Output {
    nlohmann::json json;
    std::string csv;
    int code = exit_ok;
};

inline Output json_output(nlohmann::json j, int code = exit_ok)
{
    return {std::move(j), {}, code};
}

// ---------------------------------------------------------------------------
// Subcommands

struct CapvolArgs {
    std::string fn, slope;
    double offset = 0.0;
};

inline Output run_capvol(const CapvolArgs& a, const Common& c)
{
    const auto psi = to_function(a.fn);
    const Vec slope = to_vec(a.slope, "--slope");
    if (slope.size() != psi.dimension())
        throw UsageError("--slope has the wrong number of components");
    const auto spec = c.quadrature(psi.dimension());
    const double v = cap_volume(psi, HyperplaneCut(slope, a.offset), spec);
    nlohmann::json config{{"subcommand", "capvol"},
                          {"fn", a.fn},
                          {"function", psi.description()},
                          {"slope", vec_json(slope)},
                          {"offset", a.offset},
                          {"quadrature", quadrature_json(spec)}};
    return {{{"volume", v}, {"config", config}}, "volume\n" + format_g9(v) + "\n", exit_ok};
}

struct FloatArgs {
    std::string fn, point, grid;
    double delta = 1e-3;
    std::optional<double> cut_tol;
};

inline Output run_float(const FloatArgs& a, const Common& c)
{
    const auto psi = to_function(a.fn);
    const int n = psi.dimension();
    FloatParams p = FloatParams::for_dimension(n, a.delta);
    p.quadrature = c.quadrature(n);
    if (a.cut_tol)
        p.cut_volume_tol = *a.cut_tol;
    try {
        p.validate();
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    nlohmann::json config{{"subcommand", "float"},
                          {"fn", a.fn},
                          {"function", psi.description()},
                          {"params", float_params_json(p)},
                          {"threads", static_cast<int>(worker_count())}};
    std::vector<Vec> pts;
    if (!a.point.empty()) {
        const Vec x = to_vec(a.point, "--point");
        if (x.size() != n)
            throw UsageError("--point has the wrong number of components");
        pts.push_back(x);
        config["point"] = vec_json(x);
    } else {
        const Grid g = to_grid(a.grid);
        if (g.dimension() != n)
            throw UsageError("--grid has the wrong number of axes");
        for (std::size_t k = 0; k < g.size(); ++k)
            pts.push_back(g.point(k));
        config["grid"] = grid_json(g);
    }
    const FloatingSolver solver(psi, p);
    const FloatingTable table = floating_grid(solver, pts);
    if (!a.point.empty() && !table.rows.front().value) {
        // a single point: report the error as the numerical failure it is
        throw RegionError(table.rows.front().error);
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows) {
        if (r.value)
            rows.push_back(evaluation_json(*r.value));
        else
            rows.push_back({{"x", vec_json(r.x)}, {"error", r.error}});
    }
    std::ostringstream csv;
    write_csv(csv, table);
    const int code = table.failures() > 0 ? exit_numerical : exit_ok;
    return {{{"rows", rows}, {"failures", table.failures()}, {"config", config}}, csv.str(), code};
}

struct AsaArgs {
    std::string fn;
    bool alt = false;
};

inline Output run_asa(const AsaArgs& a, const Common& c)
{
    const auto psi = to_function(a.fn);
    const auto spec = c.quadrature(psi.dimension());
    const SurfaceIntegral r = a.alt ? asa_alternative_integral(psi, spec) : asa_integral(psi, spec);
    nlohmann::json config{{"subcommand", "asa"},
                          {"fn", a.fn},
                          {"function", psi.description()},
                          {"variant", a.alt ? "alternative" : "hessian"},
                          {"quadrature", quadrature_json(spec)}};
    nlohmann::json j{{"asa", r.value}, {"error", r.error}, {"radius", r.radius}, {"skipped", r.skipped},
                     {"config", config}};
    return {j, "asa,error\n" + format_g9(r.value) + "," + format_g9(r.error) + "\n", exit_ok};
}

struct AspArgs {
    std::string body;
    double p = 2.0 / 3.0;
};

/// disk:r | ellipse:rx,ry[,rotation]
inline BodyBoundary2D to_body(const std::string& s)
{
    const auto colon = s.find(':');
    if (colon == std::string::npos)
        throw UsageError("--body must read disk:r or ellipse:rx,ry[,rotation]");
    const std::string kind = s.substr(0, colon);
    const auto v = to_list(s.substr(colon + 1), "--body");
    try {
        if (kind == "disk" && v.size() == 1)
            return BodyBoundary2D::disk(v[0]);
        if (kind == "ellipse" && (v.size() == 2 || v.size() == 3))
            return BodyBoundary2D::ellipse(v[0], v[1], v.size() == 3 ? v[2] : 0.0);
    } catch (const DomainError& e) {
        throw UsageError(std::string("--body: ") + e.what());
    }
    throw UsageError("--body must read disk:r or ellipse:rx,ry[,rotation]");
}

inline Output run_asp(const AspArgs& a)
{
    const BodyBoundary2D K = to_body(a.body);
    const double v = asp_body(K, a.p);
    nlohmann::json config{{"subcommand", "asp"}, {"body", a.body}, {"description", K.description()}, {"p", a.p}};
    return {{{"as_p", v}, {"config", config}}, "as_p\n" + format_g9(v) + "\n", exit_ok};
}

struct ConvergeArgs {
    std::string fn, mode = "theorem", ladder, grid;
};

inline Output run_converge(const ConvergeArgs& a, const Common& c)
{
    const auto psi = to_function(a.fn);
    const int n = psi.dimension();
    const DeltaLadder ladder = a.ladder.empty() ? DeltaLadder::defaults(n) : to_ladder(a.ladder);
    FloatParams base = FloatParams::for_dimension(n, ladder.delta_max);
    base.quadrature = c.quadrature(n);
    Grid grid;
    if (a.grid.empty()) {
        // default box: most of the truncation ball
        const double r = std::floor(0.75 * effective_radius(psi, base.quadrature));
        for (int i = 0; i < n; ++i)
            grid.axes.push_back(GridAxis{-r, r, n == 1 ? 161 : 41});
    } else {
        grid = to_grid(a.grid);
        if (grid.dimension() != n)
            throw UsageError("--grid has the wrong number of axes");
    }
    ConvergenceReport rep =
        a.mode == "theorem" ? theorem_ratio(psi, ladder, grid, base) : proposition_ratio(psi, ladder, grid, base);
    rep.config["subcommand"] = "converge";
    rep.config["fn"] = a.fn;
    rep.config["mode"] = a.mode;
    rep.config["params"] = float_params_json(base);
    rep.config["threads"] = static_cast<int>(worker_count());
    std::ostringstream csv;
    rep.write_csv(csv);
    return {rep.to_json(), csv.str(), exit_ok};
}

struct RollingArgs {
    std::string fn, point;
    double tol = 1e-6;
};

inline Output run_rolling(const RollingArgs& a)
{
    const auto psi = to_function(a.fn);
    const Vec x = to_vec(a.point, "--point");
    if (x.size() != psi.dimension())
        throw UsageError("--point has the wrong number of components");
    const double r = rolling_function(psi, x, a.tol);
    nlohmann::json config{
        {"subcommand", "rolling"}, {"fn", a.fn}, {"function", psi.description()}, {"point", vec_json(x)}, {"tol", a.tol}};
    return {{{"rolling_radius", r}, {"config", config}}, "rolling_radius\n" + format_g9(r) + "\n", exit_ok};
}

// ---------------------------------------------------------------------------
// check

inline const std::map<std::string, std::set<std::string>>& property_keys()
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"invariance", {"fn", "matrix", "shift", "trials", "seed", "tol"}},
        {"valuation", {"fn1", "fn2", "tol"}},
        {"isoperimetric", {"fn", "tol"}},
        {"gauge", {"a", "b", "rotation", "tol"}},
        {"capbounds", {"samples", "seed"}},
        {"uniformbound", {"fn", "grid", "delta", "r_floor"}},
        {"finiteness", {"fn", "alpha"}},
    };
    return keys;
}

class CheckConfig {
public:
    explicit CheckConfig(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

    bool has(const std::string& k) const { return kv_.count(k) > 0; }

    const std::string& text(const std::string& k) const
    {
        const auto it = kv_.find(k);
        if (it == kv_.end())
            throw UsageError("check: missing config key '" + k + "'");
        return it->second;
    }

    double number(const std::string& k, double fallback) const
    {
        return has(k) ? to_double(text(k), k) : fallback;
    }

    int integer(const std::string& k, int fallback) const { return has(k) ? to_int(text(k), k) : fallback; }

    const std::map<std::string, std::string>& all() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

inline CheckReport run_property(const std::string& property, const CheckConfig& cfg, const Common& c)
{
    if (property == "invariance") {
        if (!cfg.has("matrix"))
            return invariance_suite(cfg.integer("trials", 20), static_cast<unsigned>(cfg.integer("seed", 2024)),
                                    c.quadrature(1), cfg.number("tol", 5e-3));
        const auto psi = to_function(cfg.text("fn"));
        const int n = psi.dimension();
        const auto m = to_list(cfg.text("matrix"), "matrix");
        if (m.size() != static_cast<std::size_t>(n * n))
            throw UsageError("matrix needs " + std::to_string(n * n) + " entries");
        Mat A(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                A(i, j) = m[static_cast<std::size_t>(i * n + j)];
        const Vec t = cfg.has("shift") ? to_vec(cfg.text("shift"), "shift") : zero_vec(n);
        if (t.size() != n)
            throw UsageError("shift has the wrong number of components");
        return check_affine_invariance(psi, A, t, c.quadrature(n), cfg.number("tol", 5e-3));
    }
    if (property == "valuation") {
        const auto f1 = to_function(cfg.text("fn1"));
        const auto f2 = to_function(cfg.text("fn2"));
        return check_valuation(f1, f2, c.quadrature(f1.dimension()), cfg.number("tol", 1e-6));
    }
    if (property == "isoperimetric") {
        const auto psi = to_function(cfg.text("fn"));
        return check_isoperimetric(psi, c.quadrature(psi.dimension()), cfg.number("tol", 2e-3));
    }
    if (property == "gauge")
        return check_gauge_relation(cfg.number("a", 1.0), cfg.number("b", 1.0), cfg.number("rotation", 0.0),
                                    c.quadrature(2), cfg.number("tol", 1e-2));
    if (property == "capbounds")
        return cap_sandwich_suite(cfg.integer("samples", 200), static_cast<unsigned>(cfg.integer("seed", 8080)));
    if (property == "uniformbound") {
        const auto psi = to_function(cfg.text("fn"));
        const int n = psi.dimension();
        const Grid g = to_grid(cfg.has("grid") ? cfg.text("grid") : (n == 1 ? "-2:2:81" : "-2:2:21,-2:2:21"));
        if (g.dimension() != n)
            throw UsageError("grid has the wrong number of axes");
        std::vector<Vec> pts;
        for (std::size_t k = 0; k < g.size(); ++k)
            pts.push_back(g.point(k));
        const double delta = cfg.number("delta", 1e-4);
        FloatParams p = FloatParams::for_dimension(n, delta > 0.0 ? delta : 1e-4);
        p.quadrature = c.quadrature(n);
        return uniform_bound_check(psi, pts, delta, p, cfg.number("r_floor", 1e-4));
    }
    if (property == "finiteness") {
        const auto psi = to_function(cfg.text("fn"));
        return finiteness_suite(psi, c.quadrature(psi.dimension()), cfg.number("alpha", -1.0));
    }
    throw UsageError("unknown property '" + property + "'");
}

struct CheckArgs {
    std::vector<std::string> properties;
    std::string config_file;
    std::vector<std::string> sets;
};

inline Output run_check(const CheckArgs& a, const Common& c)
{
    std::map<std::string, std::string> kv;
    if (!a.config_file.empty()) {
        std::ifstream in(a.config_file);
        if (!in)
            throw UsageError("cannot read config file '" + a.config_file + "'");
        kv = read_config(in, a.config_file);
    }
    for (const auto& s : a.sets) {
        std::istringstream line(s);
        for (auto& [k, v] : read_config(line, "--set"))
            kv[k] = v;
    }
    std::set<std::string> allowed;
    for (const auto& prop : a.properties)
        allowed.insert(property_keys().at(prop).begin(), property_keys().at(prop).end());
    for (const auto& [k, v] : kv)
        if (!allowed.count(k))
            throw UsageError("check: config key '" + k + "' is not used by the requested properties");
    const CheckConfig cfg(kv);

    nlohmann::json reports = nlohmann::json::array();
    bool all_pass = true;
    std::ostringstream csv;
    csv << "property,lhs,rhs,abs_gap,rel_gap,tol,pass\n";
    for (const auto& prop : a.properties) {
        const CheckReport r = run_property(prop, cfg, c);
        all_pass = all_pass && r.pass;
        reports.push_back(r.to_json());
        csv << r.property << ',' << format_g9(r.lhs) << ',' << format_g9(r.rhs) << ',' << format_g9(r.abs_gap) << ','
            << format_g9(r.rel_gap) << ',' << format_g9(r.tol) << ',' << (r.pass ? "true" : "false") << '\n';
    }
    nlohmann::json config{{"subcommand", "check"},
                          {"properties", a.properties},
                          {"keys", kv},
                          {"quadrature", quadrature_json(c.quadrature(1))}};
    return {{{"reports", reports}, {"pass", all_pass}, {"config", config}}, csv.str(),
            all_pass ? exit_ok : exit_check_failed};
}

inline nlohmann::json error_json(const std::string& kind, const std::string& message)
{
    return {{"error", {{"kind", kind}, {"message", message}}}};
}

} // namespace detail

/// Runs one command line (without the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    using namespace detail;
    CLI::App app{"floatlab: floating functions and affine surface areas of log-concave functions", "floatlab"};
    app.require_subcommand(1);
    Common common;

    CapvolArgs capvol;
    auto* s_capvol = app.add_subcommand("capvol", "volume between the graph and a hyperplane above it");
    s_capvol->add_option("--fn", capvol.fn, "function spec")->required();
    s_capvol->add_option("--slope", capvol.slope, "a[,a2]")->required();
    s_capvol->add_option("--offset", capvol.offset, "b")->required();
    add_common(s_capvol, common, true);

    FloatArgs flt;
    auto* s_float = app.add_subcommand("float", "floating function values");
    s_float->add_option("--fn", flt.fn, "function spec")->required();
    s_float->add_option("--delta", flt.delta, "cut volume")->check(CLI::PositiveNumber);
    auto* o_point = s_float->add_option("--point", flt.point, "x[,y]");
    auto* o_grid = s_float->add_option("--grid", flt.grid, "lo:hi:count[,lo:hi:count]");
    o_point->excludes(o_grid);
    s_float->add_option("--cut-tol", flt.cut_tol, "relative tolerance on the cut volume");
    add_common(s_float, common, true);

    AsaArgs asa_args;
    auto* s_asa = app.add_subcommand("asa", "affine surface area of e^{-psi}");
    s_asa->add_option("--fn", asa_args.fn, "function spec")->required();
    s_asa->add_flag("--alt", asa_args.alt, "use the Hessian-free representation");
    add_common(s_asa, common, true);

    AspArgs asp_args;
    auto* s_asp = app.add_subcommand("asp", "L_p affine surface area of a planar body");
    s_asp->add_option("--body", asp_args.body, "disk:r | ellipse:rx,ry[,rotation]")->required();
    s_asp->add_option("--p", asp_args.p, "p (not -2)");
    add_common(s_asp, common, true);

    ConvergeArgs conv;
    auto* s_conv = app.add_subcommand("converge", "integrated floating gap against delta^{2/(n+2)}");
    s_conv->add_option("--fn", conv.fn, "function spec")->required();
    s_conv->add_option("--mode", conv.mode, "theorem | proposition")
        ->check(CLI::IsMember({"theorem", "proposition"}));
    s_conv->add_option("--ladder", conv.ladder, "max:min:count");
    s_conv->add_option("--grid", conv.grid, "lo:hi:count[,lo:hi:count]");
    add_common(s_conv, common, true);

    CheckArgs chk;
    auto* s_check = app.add_subcommand("check", "run property checks");
    std::vector<std::string> names;
    for (const auto& [k, v] : property_keys())
        names.push_back(k);
    s_check->add_option("--property", chk.properties, "property (repeatable)")
        ->required()
        ->check(CLI::IsMember(names));
    s_check->add_option("--config", chk.config_file, "key=value file");
    s_check->add_option("--set", chk.sets, "key=value override (repeatable)");
    add_common(s_check, common, true);

    RollingArgs roll;
    auto* s_roll = app.add_subcommand("rolling", "rolling radius of the epigraph at a point");
    s_roll->add_option("--fn", roll.fn, "function spec")->required();
    s_roll->add_option("--point", roll.point, "x[,y]")->required();
    s_roll->add_option("--tol", roll.tol, "bisection tolerance")->check(CLI::PositiveNumber);
    add_common(s_roll, common, true);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_usage;
    }

    Output result;
    try {
        if (s_float->parsed() && flt.point.empty() && flt.grid.empty())
            throw UsageError("float needs --point or --grid");
        if (s_capvol->parsed())
            result = run_capvol(capvol, common);
        else if (s_float->parsed())
            result = run_float(flt, common);
        else if (s_asa->parsed())
            result = run_asa(asa_args, common);
        else if (s_asp->parsed())
            result = run_asp(asp_args);
        else if (s_conv->parsed())
            result = run_converge(conv, common);
        else if (s_check->parsed())
            result = run_check(chk, common);
        else
            result = run_rolling(roll);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return exit_usage;
    } catch (const DomainError& e) {
        // arguments outside an operation's domain are usage errors
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const Error& e) {
        out << error_json(e.kind(), e.what()).dump(2) << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        out << error_json("internal", e.what()).dump(2) << "\n";
        return exit_numerical;
    }

    const std::string text = common.format == "csv" && !result.csv.empty() ? result.csv : result.json.dump(2) + "\n";
    if (common.output.empty()) {
        out << text;
    } else {
        std::ofstream file(common.output);
        if (!(file << text)) {
            err << "error: cannot write '" << common.output << "'\n";
            return exit_usage;
        }
    }
    return result.code;
}

} // namespace floatlab::cli
