#pragma once

// Convergence harness: integrated floating gaps D(delta) = int (f - f_delta)
// against delta^{2/(n+2)}, pointwise rates, the uniform gap bound and the
// finiteness integrals.

#include <floatlab/convexfn.hpp>
#include <floatlab/epigraph.hpp>
#include <floatlab/errors.hpp>
#include <floatlab/floating.hpp>
#include <floatlab/numerics.hpp>
#include <floatlab/parallel.hpp>
#include <floatlab/surface.hpp>

#include <math.h> // boost pchip calls isnan unqualified

#include <boost/math/interpolators/pchip.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <ostream>
#include <string>
#include <vector>

namespace floatlab {

/// c_{n+1} = (1/2) ((n+2) / vol_n(B))^{2/(n+2)}.
inline double constant_c(int n)
{
    if (n != 1 && n != 2)
        throw DomainError("constant_c: n must be 1 or 2");
    return 0.5 * std::pow((n + 2.0) / unit_ball_volume(n), 2.0 / (n + 2));
}

/// Exponent 2/(n+2) of the floating rate.
inline double rate_exponent(int n)
{
    return 2.0 / (n + 2);
}

/// Geometric ladder of count values from delta_max down to delta_min.
struct DeltaLadder {
    double delta_max = 1e-2;
    double delta_min = 1e-5;
    int count = 8;

    static DeltaLadder defaults(int n)
    {
        return n == 2 ? DeltaLadder{1e-2, 1e-4, 6} : DeltaLadder{1e-2, 1e-5, 8};
    }

    void validate() const
    {
        if (!(delta_min > 0.0) || !(delta_min < delta_max) || !std::isfinite(delta_max))
            throw DomainError("delta ladder needs 0 < delta_min < delta_max");
        if (count < 3)
            throw DomainError("delta ladder needs at least 3 points");
    }

    std::vector<double> values() const
    {
        validate();
        std::vector<double> v(count);
        const double q = std::log(delta_min / delta_max) / (count - 1);
        for (int i = 0; i < count; ++i)
            v[i] = delta_max * std::exp(q * i);
        v.back() = delta_min;
        return v;
    }

    nlohmann::json to_json() const { return {{"delta_max", delta_max}, {"delta_min", delta_min}, {"count", count}}; }
};

inline nlohmann::json grid_json(const Grid& g)
{
    nlohmann::json axes = nlohmann::json::array();
    for (const auto& a : g.axes)
        axes.push_back({{"lo", a.lo}, {"hi", a.hi}, {"count", a.count}});
    return axes;
}

/// Least-squares line y = intercept + slope x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw DomainError("fit_line: need at least two points");
    Eigen::MatrixXd A(x.size(), 2);
    Eigen::VectorXd b(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        A(i, 0) = 1.0;
        A(i, 1) = x[i];
        b(i) = y[i];
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    return {c(1), c(0)};
}

// ---------------------------------------------------------------------------
// Integrated gaps

enum class GapIntegrand {
    density,   // e^{-psi} - e^{-psi_delta}
    potential, // (psi_delta - psi) e^{-psi}
};

struct ConvergenceRow {
    double delta = 0.0;
    double difference = 0.0; // D(delta)
    double ratio = 0.0;      // D / delta^{2/(n+2)}
    double excluded = 0.0;   // measure of grid cells dropped for failed nodes
};

struct ConvergenceReport {
    std::string kind;
    int dimension = 1;
    std::vector<ConvergenceRow> rows;
    double slope = 0.0;      // log-log slope of D(delta)
    double limit = 0.0;      // intercept of R against delta^{2/(n+2)}
    double target = 0.0;     // c_{n+1} as(f)
    double deviation = 0.0;  // |limit - target| / target
    double outside_mass = 0.0; // int of e^{-psi} outside the grid box
    std::vector<std::string> notes;
    nlohmann::json config;

    bool differences_nonnegative() const
    {
        for (const auto& r : rows)
            if (r.difference < 0.0)
                return false;
        return true;
    }

    /// D nondecreasing in delta, up to rel_slack.
    bool differences_monotone(double rel_slack = 1e-9) const
    {
        for (const auto& a : rows)
            for (const auto& b : rows)
                if (a.delta < b.delta && a.difference > b.difference * (1.0 + rel_slack))
                    return false;
        return true;
    }

    nlohmann::json to_json() const
    {
        nlohmann::json rs = nlohmann::json::array();
        for (const auto& r : rows)
            rs.push_back({{"delta", r.delta}, {"difference", r.difference}, {"ratio", r.ratio}, {"excluded", r.excluded}});
        return {{"kind", kind},
                {"dimension", dimension},
                {"rows", rs},
                {"slope", slope},
                {"limit", limit},
                {"target", target},
                {"deviation", deviation},
                {"outside_mass", outside_mass},
                {"notes", notes},
                {"config", config}};
    }

    void write_csv(std::ostream& os) const
    {
        os << "delta,difference,ratio,excluded\n";
        for (const auto& r : rows)
            os << format_g9(r.delta) << ',' << format_g9(r.difference) << ',' << format_g9(r.ratio) << ','
               << format_g9(r.excluded) << '\n';
    }
};

namespace detail {

// Gap psi_delta - psi on the grid nodes; nan where the node failed.
inline std::vector<double> node_gaps(const FloatingTable& t)
{
    std::vector<double> g(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        g[i] = t.rows[i].value ? std::max(0.0, t.rows[i].value->psi_delta - t.rows[i].value->psi)
                               : std::numeric_limits<double>::quiet_NaN();
    return g;
}

inline double gap_weight(GapIntegrand kind, double psi, double gap)
{
    return kind == GapIntegrand::density ? std::exp(-psi) * -std::expm1(-gap) : gap * std::exp(-psi);
}

struct GapIntegral {
    double value = 0.0;
    double excluded = 0.0;
};

// 1D: monotone cubic interpolant of the gap, integrated cell by cell.
inline GapIntegral integrate_gap_1d(const ConvexFunction& psi, const Grid& grid, const std::vector<double>& gaps,
                                    GapIntegrand kind, const QuadratureSpec& spec)
{
    const GridAxis& ax = grid.axes[0];
    std::vector<double> xs, ys;
    GapIntegral out;
    for (int i = 0; i < ax.count; ++i)
        if (std::isfinite(gaps[i])) {
            xs.push_back(ax.at(i));
            ys.push_back(gaps[i]);
        }
    const double h = (ax.hi - ax.lo) / (ax.count - 1);
    for (int i = 0; i + 1 < ax.count; ++i)
        if (!std::isfinite(gaps[i]) || !std::isfinite(gaps[i + 1]))
            out.excluded += h;
    if (xs.size() < 4)
        throw RegionError("gap integral: fewer than 4 usable grid nodes");
    auto shape = [&] {
        auto xc = xs, yc = ys;
        return boost::math::interpolators::pchip<std::vector<double>>(std::move(xc), std::move(yc));
    }();
    QuadratureSpec cell = spec;
    cell.dimension = 1;
    for (int i = 0; i + 1 < ax.count; ++i) {
        if (!std::isfinite(gaps[i]) || !std::isfinite(gaps[i + 1]))
            continue;
        const double a = ax.at(i), b = ax.at(i + 1);
        auto g = [&](const Vec& x) { return gap_weight(kind, psi(x), std::max(0.0, shape(x[0]))); };
        out.value += integrate_adaptive(g, Region::interval(a, b), cell).value;
    }
    return out;
}

// 2D: bilinear interpolant on each grid cell.
inline GapIntegral integrate_gap_2d(const ConvexFunction& psi, const Grid& grid, const std::vector<double>& gaps,
                                    GapIntegrand kind, const QuadratureSpec& spec)
{
    const GridAxis& ax = grid.axes[0];
    const GridAxis& ay = grid.axes[1];
    const double hx = (ax.hi - ax.lo) / (ax.count - 1), hy = (ay.hi - ay.lo) / (ay.count - 1);
    auto at = [&](int i, int j) { return gaps[static_cast<std::size_t>(i) * ay.count + j]; };
    QuadratureSpec cell = spec;
    cell.dimension = 2;
    GapIntegral out;
    for (int i = 0; i + 1 < ax.count; ++i)
        for (int j = 0; j + 1 < ay.count; ++j) {
            const double g00 = at(i, j), g10 = at(i + 1, j), g01 = at(i, j + 1), g11 = at(i + 1, j + 1);
            if (!std::isfinite(g00) || !std::isfinite(g10) || !std::isfinite(g01) || !std::isfinite(g11)) {
                out.excluded += hx * hy;
                continue;
            }
            const double x0 = ax.at(i), y0 = ay.at(j);
            auto g = [&](const Vec& p) {
                const double s = (p[0] - x0) / hx, t = (p[1] - y0) / hy;
                const double gap = (1 - s) * (1 - t) * g00 + s * (1 - t) * g10 + (1 - s) * t * g01 + s * t * g11;
                return gap_weight(kind, psi(p), gap);
            };
            out.value += integrate_adaptive(g, Region::box(vec2(x0, y0), vec2(x0 + hx, y0 + hy)), cell).value;
        }
    return out;
}

inline double mass_outside_box(const ConvexFunction& psi, const Grid& grid, const QuadratureSpec& spec)
{
    const double total = integral_of_density(psi, spec).value;
    QuadratureSpec s = spec;
    double inside;
    if (grid.dimension() == 1) {
        s.dimension = 1;
        inside = integrate(
            [&](const Vec& x) { return std::exp(-psi(x)); }, Region::interval(grid.axes[0].lo, grid.axes[0].hi), s);
    } else {
        s.dimension = 2;
        inside = integrate([&](const Vec& x) { return std::exp(-psi(x)); },
                           Region::box(vec2(grid.axes[0].lo, grid.axes[1].lo), vec2(grid.axes[0].hi, grid.axes[1].hi)),
                           s);
    }
    return std::max(0.0, total - inside);
}

inline ConvergenceReport gap_ratio(const ConvexFunction& psi, const DeltaLadder& ladder, const Grid& grid,
                                   const FloatParams& base, GapIntegrand kind)
{
    const int n = psi.dimension();
    if (grid.dimension() != n)
        throw DomainError("grid dimension does not match the function");
    for (const auto& a : grid.axes)
        if (a.count < 4 || !(a.lo < a.hi))
            throw DomainError("convergence grid needs at least 4 nodes per axis on a proper interval");
    const std::vector<double> deltas = ladder.values();
    QuadratureSpec qs = base.quadrature;
    qs.dimension = n;

    ConvergenceReport rep;
    rep.kind = kind == GapIntegrand::density ? "theorem" : "proposition";
    rep.dimension = n;
    const double e = rate_exponent(n);
    std::vector<Vec> pts;
    for (std::size_t k = 0; k < grid.size(); ++k)
        pts.push_back(grid.point(k));
    for (double d : deltas) {
        FloatParams p = base;
        p.delta = d;
        p.quadrature.dimension = n;
        const FloatingSolver solver(psi, p);
        const FloatingTable table = floating_grid(solver, pts);
        const auto gaps = node_gaps(table);
        QuadratureSpec cell = qs;
        cell.abs_tol = 1e-14;
        const GapIntegral gi = n == 1 ? integrate_gap_1d(psi, grid, gaps, kind, cell)
                                      : integrate_gap_2d(psi, grid, gaps, kind, cell);
        rep.rows.push_back({d, gi.value, gi.value / std::pow(d, e), gi.excluded});
        if (table.failures() > 0)
            rep.notes.push_back("delta " + format_g9(d) + ": " + std::to_string(table.failures()) +
                                " grid nodes failed; cells touching them excluded (measure " + format_g9(gi.excluded) +
                                ")");
    }

    std::vector<double> lx, ly;
    for (const auto& r : rep.rows)
        if (r.difference > 0.0) {
            lx.push_back(std::log(r.delta));
            ly.push_back(std::log(r.difference));
        }
    if (lx.size() >= 2)
        rep.slope = fit_line(lx, ly).slope;
    else
        rep.notes.push_back("log-log slope undefined: fewer than two positive differences");

    // linear fit of R against delta^{2/(n+2)} over the 4 smallest deltas
    std::vector<ConvergenceRow> sorted = rep.rows;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.delta < b.delta; });
    std::vector<double> fx, fy;
    for (std::size_t i = 0; i < std::min<std::size_t>(4, sorted.size()); ++i) {
        fx.push_back(std::pow(sorted[i].delta, e));
        fy.push_back(sorted[i].ratio);
    }
    rep.limit = fit_line(fx, fy).intercept;
    rep.target = constant_c(n) * asa(psi, qs);
    rep.deviation = rep.target != 0.0 ? std::abs(rep.limit - rep.target) / std::abs(rep.target) : std::abs(rep.limit);
    rep.outside_mass = mass_outside_box(psi, grid, qs);
    if (rep.outside_mass > 1e-6 * integral_of_density(psi, qs).value)
        rep.notes.push_back("grid box leaves e^{-psi} mass " + format_g9(rep.outside_mass) + " outside");
    rep.config = {{"function", psi.description()},
                  {"dimension", n},
                  {"ladder", ladder.to_json()},
                  {"grid", grid_json(grid)},
                  {"cut_volume_tol", base.cut_volume_tol},
                  {"truncation_radius", base.quadrature.truncation_radius},
                  {"slope_coarse_count", base.search.coarse_count},
                  {"interpolation", n == 1 ? "pchip" : "bilinear"}};
    return rep;
}

} // namespace detail

/// D(delta) = int (e^{-psi} - e^{-psi_delta}) on the ladder, with the
/// extrapolated limit of D / delta^{2/(n+2)} and the target c_{n+1} as(f).
inline ConvergenceReport theorem_ratio(const ConvexFunction& psi, const DeltaLadder& ladder, const Grid& grid,
                                       const FloatParams& base)
{
    return detail::gap_ratio(psi, ladder, grid, base, GapIntegrand::density);
}

/// As theorem_ratio with D(delta) = int (psi_delta - psi) e^{-psi}.
inline ConvergenceReport proposition_ratio(const ConvexFunction& psi, const DeltaLadder& ladder, const Grid& grid,
                                           const FloatParams& base)
{
    return detail::gap_ratio(psi, ladder, grid, base, GapIntegrand::potential);
}

// ---------------------------------------------------------------------------
// Pointwise rate

struct PointwiseRow {
    double delta = 0.0;
    double gap = 0.0;   // psi_delta(x) - psi(x)
    double ratio = 0.0; // gap / delta^{2/(n+2)}
};

struct PointwiseReport {
    Vec x;
    double determinant = 0.0;
    bool degenerate = false;
    double expected = 0.0; // c_{n+1} det^{1/(n+2)}, 0 when degenerate
    std::vector<PointwiseRow> rows;
    double deviation = 0.0; // at the smallest delta: relative (or absolute when degenerate)
    bool pass = false;
    double tol = 0.0;
    std::vector<std::string> notes;

    nlohmann::json to_json() const
    {
        nlohmann::json rs = nlohmann::json::array();
        for (const auto& r : rows)
            rs.push_back({{"delta", r.delta}, {"gap", r.gap}, {"ratio", r.ratio}});
        std::vector<double> xs(x.data(), x.data() + x.size());
        return {{"x", xs},
                {"determinant", determinant},
                {"degenerate", degenerate},
                {"expected", expected},
                {"rows", rs},
                {"deviation", deviation},
                {"tol", tol},
                {"pass", pass},
                {"notes", notes}};
    }
};

/// (psi_delta(x) - psi(x)) / delta^{2/(n+2)} along the ladder. With a
/// positive definite Hessian at x it should approach c_{n+1} det^{1/(n+2)}
/// (tolerance relative); with det = 0 it should fall below tol.
inline PointwiseReport pointwise_rate(const ConvexFunction& psi, const Vec& x, const DeltaLadder& ladder,
                                      const FloatParams& base, double tol = 2e-2, double degenerate_tol = 5e-2)
{
    const int n = psi.dimension();
    PointwiseReport rep;
    rep.x = x;
    rep.determinant = hessian_determinant(psi, x);
    rep.degenerate = rep.determinant <= 1e-12;
    rep.expected = rep.degenerate ? 0.0 : constant_c(n) * std::pow(rep.determinant, 1.0 / (n + 2));
    rep.tol = rep.degenerate ? degenerate_tol : tol;
    const double e = rate_exponent(n);
    for (double d : ladder.values()) {
        FloatParams p = base;
        p.delta = d;
        p.quadrature.dimension = n;
        const auto ev = floating_value(psi, x, p);
        const double gap = ev.psi_delta - ev.psi;
        rep.rows.push_back({d, gap, gap / std::pow(d, e)});
    }
    const auto smallest = std::min_element(rep.rows.begin(), rep.rows.end(),
                                           [](const auto& a, const auto& b) { return a.delta < b.delta; });
    if (rep.degenerate) {
        rep.deviation = smallest->ratio;
        rep.pass = smallest->ratio <= degenerate_tol;
        rep.notes.push_back("Hessian determinant vanishes at x: the ratio should tend to 0");
    } else {
        rep.deviation = std::abs(smallest->ratio - rep.expected) / rep.expected;
        rep.pass = rep.deviation <= tol;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Uniform bound on the gap

/// 2^{(3n+4)/(n+2)} ((n+2)/vol_n(B))^{2/(n+2)}.
inline double uniform_bound_constant(int n)
{
    return std::pow(2.0, (3.0 * n + 4.0) / (n + 2)) * std::pow((n + 2.0) / unit_ball_volume(n), 2.0 / (n + 2));
}

/// Checks (psi_delta - psi)/delta^{2/(n+2)} <= C (1 + |grad psi|^2)^{1/2} /
/// r_psi^{n/(n+2)} at every point whose rolling radius is at least r_floor.
/// lhs = max over checked points of ratio / bound, rhs = 1.
inline CheckReport uniform_bound_check(const ConvexFunction& psi, const std::vector<Vec>& points, double delta,
                                       const FloatParams& base, double r_floor = 1e-4)
{
    const int n = psi.dimension();
    if (!(delta >= 0.0))
        throw DomainError("uniform bound: delta must be nonnegative");
    const double C = uniform_bound_constant(n);
    std::vector<double> radius(points.size());
    parallel_for(points.size(), [&](std::size_t i) { radius[i] = rolling_function(psi, points[i]); });
    double r_min = kInf;
    std::size_t excluded = 0;
    for (double r : radius) {
        if (r >= r_floor)
            r_min = std::min(r_min, r);
        else
            ++excluded;
    }
    const double delta0 = std::isfinite(r_min) ? 1e-3 * std::pow(r_min, 0.5 * (n + 2)) : 0.0;
    if (delta > delta0)
        throw PreconditionError("uniform bound: delta " + format_g9(delta) + " exceeds the heuristic delta0 = " +
                                format_g9(delta0) + " (1e-3 min r^{(n+2)/2})");

    std::vector<double> ratio(points.size(), 0.0), bound(points.size(), 0.0);
    std::optional<FloatingSolver> solver;
    if (delta > 0.0) {
        FloatParams p = base;
        p.delta = delta;
        p.quadrature.dimension = n;
        solver.emplace(psi, p);
    }
    parallel_for(points.size(), [&](std::size_t i) {
        if (radius[i] < r_floor)
            return;
        const double g2 = psi.gradient(points[i]).squaredNorm();
        bound[i] = C * std::sqrt(1.0 + g2) / std::pow(radius[i], static_cast<double>(n) / (n + 2));
        if (solver) {
            const auto ev = solver->at(points[i]);
            ratio[i] = (ev.psi_delta - ev.psi) / std::pow(delta, rate_exponent(n));
        }
    });
    double worst = 0.0;
    std::vector<std::string> violations;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (radius[i] < r_floor)
            continue;
        worst = std::max(worst, ratio[i] / bound[i]);
        if (ratio[i] > bound[i]) {
            std::string s = "violation at x = (";
            for (int k = 0; k < n; ++k)
                s += (k ? "," : "") + format_g9(points[i][k]);
            violations.push_back(s + ")");
        }
    }
    auto rep = CheckReport::make("uniform_bound", worst, 1.0, 0.0, Comparison::at_most);
    rep.pass = violations.empty();
    rep.notes.insert(rep.notes.end(), violations.begin(), violations.end());
    rep.notes.push_back("delta0 heuristic: " + format_g9(delta0) + "; a pass means no violation was found");
    if (excluded > 0)
        rep.notes.push_back(std::to_string(excluded) + " points excluded: rolling radius below " + format_g9(r_floor) +
                            " (kinks)");
    rep.values = {{"constant", C},
                  {"delta", delta},
                  {"delta0", delta0},
                  {"checked", static_cast<double>(points.size() - excluded)},
                  {"excluded", static_cast<double>(excluded)},
                  {"min_rolling_radius", std::isfinite(r_min) ? r_min : 0.0}};
    return rep;
}

// ---------------------------------------------------------------------------
// Finiteness integrals

/// int e^{-psi} (1 + |grad psi|^2)^{1/2} and its rolling-radius weighted
/// version at alpha (default n/(n+2)); passes when both are finite and the
/// quadratures converged.
inline CheckReport finiteness_suite(const ConvexFunction& psi, const QuadratureSpec& spec, double alpha = -1.0)
{
    const int n = psi.dimension();
    if (alpha < 0.0)
        alpha = static_cast<double>(n) / (n + 2);
    QuadratureSpec s = spec;
    s.dimension = n;
    const IntegralEstimate grad = gradient_weighted_integral(psi, s);
    const RollingIntegral roll = rolling_weighted_integral(psi, alpha, s);
    auto rep = CheckReport::make("finiteness", roll.value, grad.value, kInf, Comparison::absolute);
    rep.pass = std::isfinite(grad.value) && std::isfinite(roll.value) && grad.converged && roll.converged;
    rep.values = {{"alpha", alpha},
                  {"gradient_weighted", grad.value},
                  {"rolling_weighted", roll.value},
                  {"rolling_skipped_bound", roll.skipped_bound}};
    rep.notes.push_back(roll.value >= grad.value ? "rolling-weighted >= gradient-weighted (rolling radii mostly <= 1)"
                                                 : "rolling-weighted < gradient-weighted (rolling radii mostly > 1)");
    return rep;
}

// ---------------------------------------------------------------------------
// Randomized suites

/// Affine invariance of as(f) on random invertible maps applied to random
/// positive definite quadratics, alternating n = 1 and n = 2. Maps with
/// condition number above 10 are redrawn. lhs = worst relative gap.
inline CheckReport invariance_suite(int trials, unsigned seed, const QuadratureSpec& spec, double tol = 5e-3)
{
    if (trials < 1)
        throw DomainError("invariance suite: trials must be positive");
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.3, 2.0);
    double worst = 0.0;
    int failures = 0;
    std::vector<std::string> notes;
    for (int k = 0; k < trials;) {
        const int n = k % 2 ? 2 : 1;
        Mat A(n, n), Q(n, n);
        Vec t(n);
        for (int i = 0; i < n; ++i) {
            t[i] = u(rng);
            for (int j = 0; j < n; ++j)
                A(i, j) = u(rng) + (i == j ? 1.5 * (u(rng) > 0 ? 1 : -1) : 0.0);
        }
        const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues();
        if (sv(0) / sv(n - 1) > 10.0)
            continue;
        if (n == 1) {
            Q << pos(rng);
        } else {
            const double a = pos(rng), c = pos(rng), b = 0.5 * u(rng) * std::sqrt(a * c);
            Q << a, b, b, c;
        }
        QuadratureSpec s = spec;
        s.dimension = n;
        const auto r = check_affine_invariance(quadratic_form(Q), A, t, s, tol);
        worst = std::max(worst, r.rel_gap);
        if (!r.pass) {
            ++failures;
            notes.push_back("trial " + std::to_string(k) + " (n = " + std::to_string(n) +
                            ", det = " + format_g9(A.determinant()) + "): relative gap " + format_g9(r.rel_gap));
        }
        ++k;
    }
    auto rep = CheckReport::make("affine_invariance_suite", worst, tol, 0.0, Comparison::at_most);
    rep.pass = failures == 0;
    rep.notes = notes;
    rep.values = {{"trials", static_cast<double>(trials)}, {"failures", static_cast<double>(failures)},
                  {"seed", static_cast<double>(seed)}};
    return rep;
}

/// Exact ellipsoid cap volumes against the cap sandwich on random semi-axes
/// (dimension 1 to 4) and heights. lhs = number of failures.
inline CheckReport cap_sandwich_suite(int samples, unsigned seed, double rel_slack = 1e-12)
{
    if (samples < 1)
        throw DomainError("cap sandwich: samples must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ua(0.2, 3.0), uh(0.0, 1.0);
    std::uniform_int_distribution<int> um(1, 4);
    int failures = 0;
    double tightest = kInf;
    std::vector<std::string> notes;
    for (int k = 0; k < samples; ++k) {
        const int m = um(rng);
        std::vector<double> axes;
        for (int i = 0; i < m; ++i)
            axes.push_back(ua(rng));
        const EllipsoidSpec e(axes);
        const double h = uh(rng) * e.last();
        const double v = ellipsoid_cap_volume(e, h);
        const auto b = ellipsoid_cap_bounds(e, h);
        if (b.lower > v * (1.0 + rel_slack) || v > b.upper * (1.0 + rel_slack)) {
            ++failures;
            notes.push_back("sample " + std::to_string(k) + ": volume " + format_g9(v) + " outside [" +
                            format_g9(b.lower) + ", " + format_g9(b.upper) + "]");
        }
        if (v > 0.0)
            tightest = std::min(tightest, (b.upper - v) / v);
    }
    auto rep = CheckReport::make("cap_sandwich", failures, 0.0, 0.0, Comparison::at_most);
    rep.notes = notes;
    rep.values = {{"samples", static_cast<double>(samples)},
                  {"failures", static_cast<double>(failures)},
                  {"seed", static_cast<double>(seed)},
                  {"min_upper_slack", std::isfinite(tightest) ? tightest : 0.0}};
    return rep;
}

} // namespace floatlab
