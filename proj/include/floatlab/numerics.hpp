#pragma once

// Shared numerical kernels: adaptive Gauss-Kronrod quadrature on intervals,
// rectangles and balls, bracketed root finding, low-dimensional box
// maximization and central finite differences.

#include <floatlab/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace floatlab {

/// Point of R^n for n in {1, 2}. Stack storage, no heap traffic.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 2, 1>;
/// n x n matrix for n in {1, 2}.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 2, 2>;

inline Vec vec1(double x)
{
    Vec v(1);
    v << x;
    return v;
}

inline Vec vec2(double x, double y)
{
    Vec v(2);
    v << x, y;
    return v;
}

inline Vec zero_vec(int n) { return Vec::Zero(n); }

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kEps = std::numeric_limits<double>::epsilon();

/// Volume of the Euclidean unit ball in R^n.
inline double unit_ball_volume(int n)
{
    return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

struct QuadratureSpec {
    int dimension = 1;
    double abs_tol = 1e-10;
    double rel_tol = 1e-9;
    int max_subdivisions = 4000;
    double truncation_radius = 12.0;
    // integrals over R^n pick their radius from the coercive minorant
    bool auto_truncation = true;

    void validate() const
    {
        if (dimension != 1 && dimension != 2)
            throw DomainError("quadrature dimension must be 1 or 2");
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
            throw DomainError("quadrature tolerances must be positive");
        if (max_subdivisions <= 0)
            throw DomainError("max_subdivisions must be positive");
        if (!(truncation_radius > 0.0) || !std::isfinite(truncation_radius))
            throw DomainError("truncation radius must be finite and positive");
    }
};

struct SearchSpec {
    int coarse_count = 9;
    int refinement_iterations = 2;
    double half_width = 1.0;

    void validate() const
    {
        if (coarse_count < 3)
            throw DomainError("coarse grid count must be at least 3");
        if (refinement_iterations < 0)
            throw DomainError("refinement iterations must be nonnegative");
        if (!(half_width > 0.0) || !std::isfinite(half_width))
            throw DomainError("slope box half-width must be positive");
    }
};

/// Integration domain: an axis-aligned box, or a Euclidean ball (the
/// integrand is treated as zero outside the ball).
struct Region {
    Vec lo;
    Vec hi;
    bool is_ball = false;
    Vec center;
    double radius = 0.0;

    int dimension() const { return static_cast<int>(lo.size()); }

    static Region interval(double a, double b) { return box(vec1(a), vec1(b)); }

    static Region box(const Vec& lo, const Vec& hi)
    {
        if (lo.size() != hi.size() || lo.size() < 1 || lo.size() > 2)
            throw DomainError("region dimension must be 1 or 2");
        Region r;
        r.lo = lo;
        r.hi = hi;
        r.center = 0.5 * (lo + hi);
        return r;
    }

    static Region ball(const Vec& center, double radius)
    {
        if (!(radius > 0.0))
            throw DomainError("ball radius must be positive");
        Region r = box(center.array() - radius, center.array() + radius);
        r.is_ball = true;
        r.center = center;
        r.radius = radius;
        return r;
    }

    static Region ball(int n, double radius) { return ball(zero_vec(n), radius); }
};

template <std::size_t N>
struct QuadratureResultN {
    std::array<double, N> value{};
    std::array<double, N> error{};
    long evaluations = 0;
    int subdivisions = 0;
    bool converged = false;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    long evaluations = 0;
    int subdivisions = 0;
    bool converged = false;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
// Index 7 is the centre; Gauss nodes sit at odd indices.
inline constexpr std::array<double, 15> kKronrodNodes = {
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245,  0.405845151377397166906606412076961,
    0.586087235467691130294144845693013,  0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,  0.949107912342758524526189684047851,
    0.991455371120812639206854697526329};

inline constexpr std::array<double, 15> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970};

inline constexpr std::array<double, 15> kGaussWeights = {
    0.0, 0.129484966168869693270611432679082, 0.0, 0.279705391489276667901467771423780,
    0.0, 0.381830050505118944950369775488975, 0.0, 0.417959183673469387755102040816327,
    0.0, 0.381830050505118944950369775488975, 0.0, 0.279705391489276667901467771423780,
    0.0, 0.129484966168869693270611432679082, 0.0};

template <std::size_t N>
struct Panel {
    Vec lo;
    Vec hi;
    std::array<double, N> value{};
    std::array<double, N> error{};
    double priority = 0.0;
};

template <std::size_t N, class G>
std::array<double, N> call_integrand(G& g, const Vec& x)
{
    if constexpr (N == 1) {
        if constexpr (std::is_convertible_v<decltype(g(x)), double>)
            return {static_cast<double>(g(x))};
        else
            return g(x);
    } else {
        return g(x);
    }
}

template <std::size_t N, class G>
void kronrod_1d(G& g, Panel<N>& p, const Region& region, long& evals)
{
    const double a = p.lo[0];
    const double b = p.hi[0];
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    std::array<double, N> k{}, gs{}, abs_sum{};
    std::array<std::array<double, N>, 15> f{};
    Vec x(1);
    for (int i = 0; i < 15; ++i) {
        x[0] = mid + half * kKronrodNodes[i];
        if (region.is_ball && std::abs(x[0] - region.center[0]) > region.radius)
            f[i].fill(0.0);
        else
            f[i] = call_integrand<N>(g, x);
        for (std::size_t c = 0; c < N; ++c) {
            k[c] += kKronrodWeights[i] * f[i][c];
            gs[c] += kGaussWeights[i] * f[i][c];
            abs_sum[c] += kKronrodWeights[i] * std::abs(f[i][c]);
        }
    }
    evals += 15;
    for (std::size_t c = 0; c < N; ++c) {
        const double mean = 0.5 * k[c];
        double asc = 0.0;
        for (int i = 0; i < 15; ++i)
            asc += kKronrodWeights[i] * std::abs(f[i][c] - mean);
        asc *= std::abs(half);
        double err = std::abs((k[c] - gs[c]) * half);
        if (asc != 0.0 && err != 0.0)
            err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
        const double resabs = abs_sum[c] * std::abs(half);
        if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps))
            err = std::max(50.0 * kEps * resabs, err);
        p.value[c] = k[c] * half;
        p.error[c] = err;
    }
}

template <std::size_t N, class G>
void kronrod_2d(G& g, Panel<N>& p, const Region& region, long& evals)
{
    const double hx = 0.5 * (p.hi[0] - p.lo[0]);
    const double hy = 0.5 * (p.hi[1] - p.lo[1]);
    const double mx = 0.5 * (p.hi[0] + p.lo[0]);
    const double my = 0.5 * (p.hi[1] + p.lo[1]);
    std::array<double, N> k{}, gs{};
    Vec x(2);
    const double r2 = region.radius * region.radius;
    for (int i = 0; i < 15; ++i) {
        x[0] = mx + hx * kKronrodNodes[i];
        for (int j = 0; j < 15; ++j) {
            x[1] = my + hy * kKronrodNodes[j];
            std::array<double, N> f{};
            if (region.is_ball && (x - region.center).squaredNorm() > r2) {
                f.fill(0.0);
            } else {
                f = call_integrand<N>(g, x);
                ++evals;
            }
            const double wk = kKronrodWeights[i] * kKronrodWeights[j];
            const double wg = kGaussWeights[i] * kGaussWeights[j];
            for (std::size_t c = 0; c < N; ++c) {
                k[c] += wk * f[c];
                gs[c] += wg * f[c];
            }
        }
    }
    const double jac = hx * hy;
    for (std::size_t c = 0; c < N; ++c) {
        p.value[c] = k[c] * jac;
        p.error[c] = std::abs((k[c] - gs[c]) * jac);
    }
}

template <std::size_t N>
double panel_priority(const std::array<double, N>& err) { return *std::max_element(err.begin(), err.end()); }

} // namespace detail

/// Adaptive integration of a vector-valued integrand (N components share the
/// node set). Never throws on an exhausted budget; check `converged`.
template <std::size_t N, class G>
QuadratureResultN<N> integrate_adaptive_n(G&& g, const Region& region, const QuadratureSpec& spec)
{
    using detail::Panel;
    const int dim = region.dimension();
    if (dim != 1 && dim != 2)
        throw DomainError("integrate: dimension must be 1 or 2");

    QuadratureResultN<N> result;
    auto evaluate = [&](Panel<N>& p) {
        if (dim == 1)
            detail::kronrod_1d<N>(g, p, region, result.evaluations);
        else
            detail::kronrod_2d<N>(g, p, region, result.evaluations);
        p.priority = detail::panel_priority<N>(p.error);
    };

    std::vector<Panel<N>> panels;
    if (dim == 1) {
        Panel<N> p;
        p.lo = region.lo;
        p.hi = region.hi;
        evaluate(p);
        panels.push_back(p);
    } else {
        // 2 x 2 start so that a rule node never sits on a symmetry centre alone.
        const Vec mid = 0.5 * (region.lo + region.hi);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                Panel<N> p;
                p.lo = vec2(i == 0 ? region.lo[0] : mid[0], j == 0 ? region.lo[1] : mid[1]);
                p.hi = vec2(i == 0 ? mid[0] : region.hi[0], j == 0 ? mid[1] : region.hi[1]);
                evaluate(p);
                panels.push_back(p);
            }
    }

    auto totals = [&]() {
        result.value.fill(0.0);
        result.error.fill(0.0);
        for (const auto& p : panels)
            for (std::size_t c = 0; c < N; ++c) {
                result.value[c] += p.value[c];
                result.error[c] += p.error[c];
            }
    };
    auto done = [&]() {
        for (std::size_t c = 0; c < N; ++c)
            if (result.error[c] > std::max(spec.abs_tol, spec.rel_tol * std::abs(result.value[c])))
                return false;
        return true;
    };

    totals();
    while (!done()) {
        if (result.subdivisions >= spec.max_subdivisions) {
            result.converged = false;
            return result;
        }
        std::size_t worst = 0;
        for (std::size_t i = 1; i < panels.size(); ++i)
            if (panels[i].priority > panels[worst].priority)
                worst = i;
        Panel<N> left = panels[worst];
        Panel<N> right = panels[worst];
        int axis = 0;
        if (dim == 2 && (left.hi[1] - left.lo[1]) > (left.hi[0] - left.lo[0]))
            axis = 1;
        const double cut = 0.5 * (left.lo[axis] + left.hi[axis]);
        if (!(cut > left.lo[axis] && cut < left.hi[axis])) {
            // panel below floating-point resolution; accept what we have
            result.converged = false;
            return result;
        }
        left.hi[axis] = cut;
        right.lo[axis] = cut;
        evaluate(left);
        evaluate(right);
        panels[worst] = left;
        panels.push_back(right);
        ++result.subdivisions;
        totals();
    }
    result.converged = true;
    return result;
}

template <class G>
QuadratureResult integrate_adaptive(G&& g, const Region& region, const QuadratureSpec& spec)
{
    auto r = integrate_adaptive_n<1>(std::forward<G>(g), region, spec);
    return {r.value[0], r.error[0], r.evaluations, r.subdivisions, r.converged};
}

/// Adaptive quadrature; throws QuadratureError (with the best estimate) when
/// the subdivision budget is exhausted.
template <class G>
double integrate(G&& g, const Region& region, const QuadratureSpec& spec)
{
    const auto r = integrate_adaptive(std::forward<G>(g), region, spec);
    if (!r.converged)
        throw QuadratureError("integrate: subdivision budget exhausted", r.value, r.error);
    return r.value;
}

/// Single Gauss-Kronrod panel on [a, b] with adaptive fallback. Used in hot
/// loops where most integrands are polynomial on the panel.
template <class G>
QuadratureResult integrate_interval(G&& g, double a, double b, double abs_tol, double rel_tol,
                                    int max_subdivisions = 200)
{
    QuadratureSpec spec;
    spec.abs_tol = abs_tol;
    spec.rel_tol = rel_tol;
    spec.max_subdivisions = max_subdivisions;
    auto scalar = [&](const Vec& x) { return g(x[0]); };
    return integrate_adaptive(scalar, Region::interval(a, b), spec);
}

/// Iterated adaptive integral over the disk |x| <= R: inner over x1, outer
/// over x2. Copes with integrands singular along lines, which exhaust the
/// tensor rule.
template <int N, class G>
QuadratureResultN<N> integrate_disk_iterated_n(G&& g, double R, const QuadratureSpec& spec)
{
    spec.validate();
    QuadratureSpec outer = spec;
    outer.dimension = 1;
    QuadratureSpec inner = outer;
    inner.rel_tol = spec.rel_tol / 10.0;
    inner.abs_tol = spec.abs_tol / (20.0 * R);
    bool inner_ok = true;
    long evaluations = 0;
    auto row = [&](const Vec& y) -> std::array<double, N> {
        const double h = std::sqrt(std::max(0.0, R * R - y[0] * y[0]));
        if (h == 0.0)
            return {};
        auto f = [&](const Vec& x) -> std::array<double, N> { return g(vec2(x[0], y[0])); };
        const auto r = integrate_adaptive_n<N>(f, Region::interval(-h, h), inner);
        inner_ok = inner_ok && r.converged;
        evaluations += r.evaluations;
        return r.value;
    };
    auto r = integrate_adaptive_n<N>(row, Region::interval(-R, R), outer);
    r.converged = r.converged && inner_ok;
    r.evaluations += evaluations;
    return r;
}

/// Integral over the ball |x| <= R in dimension 1 or 2 (iterated in 2D).
template <int N, class G>
QuadratureResultN<N> integrate_ball_n(G&& g, int n, double R, const QuadratureSpec& spec)
{
    if (n == 1)
        return integrate_adaptive_n<N>(std::forward<G>(g), Region::interval(-R, R), spec);
    return integrate_disk_iterated_n<N>(std::forward<G>(g), R, spec);
}

template <class G>
QuadratureResult integrate_ball(G&& g, int n, double R, const QuadratureSpec& spec)
{
    auto h = [&](const Vec& x) -> std::array<double, 1> { return {g(x)}; };
    const auto r = integrate_ball_n<1>(h, n, R, spec);
    return {r.value[0], r.error[0], r.evaluations, r.subdivisions, r.converged};
}

// ---------------------------------------------------------------------------
// Root finding

struct RootOptions {
    double x_tol = 1e-12;
    double f_tol = 0.0;
    int max_iterations = 300;
};

/// Illinois false position with a bisection safeguard. The iterate never
/// leaves [lo, hi]. Requires opposite signs (or a zero) at the endpoints.
template <class G>
double find_root_bracketed(G&& g, double lo, double flo, double hi, double fhi, const RootOptions& opt)
{
    if (lo > hi) {
        std::swap(lo, hi);
        std::swap(flo, fhi);
    }
    if (flo == 0.0)
        return lo;
    if (fhi == 0.0)
        return hi;
    if (!std::isfinite(flo) || !std::isfinite(fhi) || (flo > 0.0) == (fhi > 0.0))
        throw BracketError("find_root_monotone: no sign change on bracket [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");
    int side = 0;
    double width_before = hi - lo;
    int since_check = 0;
    bool force_bisect = false;
    for (int it = 0; it < opt.max_iterations; ++it) {
        const double width = hi - lo;
        if (width <= opt.x_tol || width <= 4.0 * kEps * std::max(std::abs(lo), std::abs(hi)))
            break;
        double x;
        if (force_bisect) {
            x = 0.5 * (lo + hi);
            force_bisect = false;
        } else {
            x = (lo * fhi - hi * flo) / (fhi - flo);
            if (!(x > lo && x < hi))
                x = 0.5 * (lo + hi);
        }
        const double fx = g(x);
        if (std::abs(fx) <= opt.f_tol || fx == 0.0)
            return x;
        if ((fx > 0.0) == (flo > 0.0)) {
            lo = x;
            flo = fx;
            if (side == -1)
                fhi *= 0.5;
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if (side == +1)
                flo *= 0.5;
            side = +1;
        }
        if (++since_check == 3) {
            if (hi - lo > 0.5 * width_before)
                force_bisect = true;
            width_before = hi - lo;
            since_check = 0;
        }
    }
    return std::abs(flo) <= std::abs(fhi) ? lo : hi;
}

template <class G>
double find_root_monotone(G&& g, double lo, double hi, const RootOptions& opt)
{
    const double flo = g(lo);
    const double fhi = g(hi);
    return find_root_bracketed(g, lo, flo, hi, fhi, opt);
}

/// Returns r in [lo, hi] with |g(r)| <= tol or final bracket width <= tol.
template <class G>
double find_root_monotone(G&& g, double lo, double hi, double tol)
{
    return find_root_monotone(std::forward<G>(g), lo, hi, RootOptions{tol, tol, 300});
}

// ---------------------------------------------------------------------------
// Maximization over a box in R^k, k in {1, 2}

struct MaximizeResult {
    Vec argmax;
    double value = -kInf;
    bool boundary_hit = false;
    long evaluations = 0;
};

struct GoldenResult {
    double x;
    double value;
};

/// Golden-section search for the maximum of a unimodal g on [lo, hi].
template <class G>
GoldenResult golden_section_max(G&& g, double lo, double hi, double x_tol, long* evals = nullptr)
{
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = g(c), fd = g(d);
    long n = 2;
    GoldenResult best{c, fc};
    if (fd > best.value)
        best = {d, fd};
    while (b - a > x_tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g(c);
            if (fc > best.value)
                best = {c, fc};
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g(d);
            if (fd > best.value)
                best = {d, fd};
        }
        ++n;
        if (n > 400)
            break;
    }
    // the endpoints are candidates too (monotone g)
    for (double e : {lo, hi}) {
        if (std::abs(best.x - e) <= 2.0 * x_tol + 1e-300) {
            const double fe = g(e);
            ++n;
            if (fe >= best.value)
                best = {e, fe};
        }
    }
    if (evals)
        *evals += n;
    return best;
}

struct GridScanResult {
    Vec best;
    double value = -kInf;
    double spacing = 0.0;
    long evaluations = 0;
};

/// Coarse scan of g on a count^k grid over center +- half_width. The first
/// grid index attaining the maximum wins.
template <class G>
GridScanResult grid_scan(G&& g, int k, const SearchSpec& spec, const Vec& center)
{
    spec.validate();
    if (k != 1 && k != 2)
        throw DomainError("maximize: dimension must be 1 or 2");
    const int m = spec.coarse_count;
    GridScanResult r;
    r.spacing = 2.0 * spec.half_width / (m - 1);
    r.best = center;
    Vec p(k);
    auto coord = [&](int axis, int i) { return center[axis] - spec.half_width + r.spacing * i; };
    if (k == 1) {
        for (int i = 0; i < m; ++i) {
            p[0] = coord(0, i);
            const double v = g(p);
            ++r.evaluations;
            if (v > r.value) {
                r.value = v;
                r.best = p;
            }
        }
    } else {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                p[0] = coord(0, i);
                p[1] = coord(1, j);
                const double v = g(p);
                ++r.evaluations;
                if (v > r.value) {
                    r.value = v;
                    r.best = p;
                }
            }
    }
    return r;
}

/// Coarse grid scan followed by rounds of per-coordinate golden-section
/// refinement within one grid spacing of the incumbent.
template <class G>
MaximizeResult maximize(G&& g, int k, const SearchSpec& spec, const Vec& center)
{
    const GridScanResult scan = grid_scan(g, k, spec, center);
    MaximizeResult res;
    res.argmax = scan.best;
    res.value = scan.value;
    res.evaluations = scan.evaluations;
    const double x_tol = 1e-10 * std::max(1.0, spec.half_width);
    if (std::isfinite(res.value)) {
        for (int round = 0; round < spec.refinement_iterations; ++round) {
            for (int axis = 0; axis < k; ++axis) {
                const double lo = std::max(center[axis] - spec.half_width, res.argmax[axis] - scan.spacing);
                const double hi = std::min(center[axis] + spec.half_width, res.argmax[axis] + scan.spacing);
                Vec p = res.argmax;
                auto line = [&](double t) {
                    p[axis] = t;
                    return g(p);
                };
                const GoldenResult gr = golden_section_max(line, lo, hi, x_tol, &res.evaluations);
                if (gr.value > res.value) {
                    res.value = gr.value;
                    res.argmax[axis] = gr.x;
                }
            }
        }
    }
    const double edge = 1e-6 * scan.spacing;
    for (int axis = 0; axis < k; ++axis) {
        if (std::abs(res.argmax[axis] - (center[axis] - spec.half_width)) <= edge ||
            std::abs(res.argmax[axis] - (center[axis] + spec.half_width)) <= edge)
            res.boundary_hit = true;
    }
    return res;
}

template <class G>
MaximizeResult maximize(G&& g, int k, const SearchSpec& spec)
{
    return maximize(std::forward<G>(g), k, spec, zero_vec(k));
}

// ---------------------------------------------------------------------------
// Finite differences

inline constexpr double kGradientStep = 1e-4;
inline constexpr double kHessianStep = 1e-3;

template <class F>
Vec fd_gradient(const F& f, const Vec& x, double h = kGradientStep)
{
    const int n = static_cast<int>(x.size());
    Vec g(n);
    for (int i = 0; i < n; ++i) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

/// Central-difference Hessian, returned exactly symmetric. The step is
/// doubled (at most three times) while the diagonal sits at the rounding
/// noise floor of f.
template <class F>
Mat fd_hessian(const F& f, const Vec& x, double h = kHessianStep)
{
    const int n = static_cast<int>(x.size());
    const double f0 = f(x);
    Mat H(n, n);
    for (int attempt = 0; attempt < 4; ++attempt) {
        for (int i = 0; i < n; ++i) {
            Vec xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            H(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (h * h);
        }
        if (n == 2) {
            Vec pp = x, pm = x, mp = x, mm = x;
            pp[0] += h; pp[1] += h;
            pm[0] += h; pm[1] -= h;
            mp[0] -= h; mp[1] += h;
            mm[0] -= h; mm[1] -= h;
            H(0, 1) = H(1, 0) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
        }
        const double noise = 4.0 * kEps * (1.0 + std::abs(f0)) / (h * h);
        bool noisy = false;
        for (int i = 0; i < n; ++i)
            if (H(i, i) != 0.0 && std::abs(H(i, i)) < 100.0 * noise)
                noisy = true;
        if (!noisy || h > 0.05)
            break;
        h *= 2.0;
    }
    return 0.5 * (H + H.transpose());
}

// ---------------------------------------------------------------------------
// Convex minimization helpers (used to locate the deepest point of a cut)

/// Minimizes a convex function of one variable starting from `start`.
template <class F>
double minimize_convex_1d(const F& phi, double start, double scale = 1.0, double x_tol = 1e-11)
{
    double step = std::max(scale, 1e-6);
    double a = start - step, b = start, c = start + step;
    double fa = phi(a), fb = phi(b), fc = phi(c);
    int guard = 0;
    while (!(fb <= fa && fb <= fc) && guard++ < 200) {
        if (fa < fb) {
            c = b; fc = fb;
            b = a; fb = fa;
            step *= 2.0;
            a = b - step;
            fa = phi(a);
        } else {
            a = b; fa = fb;
            b = c; fb = fc;
            step *= 2.0;
            c = b + step;
            fc = phi(c);
        }
        if (!std::isfinite(fa) || !std::isfinite(fc))
            break;
    }
    auto neg = [&](double t) { return -phi(t); };
    const GoldenResult gr = golden_section_max(neg, a, c, x_tol * std::max(1.0, std::abs(b)));
    return gr.value >= -fb ? gr.x : b;
}

/// Minimum of a convex function of two variables: damped Newton (gradient
/// steps where the Hessian is singular). When that stalls short of a
/// stationary point, as on kink lines, a nested 1D minimization takes over.
template <class F, class Grad, class Hess>
Vec minimize_convex_2d(const F& phi, const Grad& grad, const Hess& hess, Vec x, double scale = 1.0)
{
    double fx = phi(x);
    bool stationary = false;
    for (int it = 0; it < 60 && !stationary; ++it) {
        const Vec g = grad(x);
        if (g.norm() <= 1e-12 * (1.0 + std::abs(fx))) {
            stationary = true;
            break;
        }
        const Mat H = hess(x);
        Vec dir;
        Eigen::LLT<Eigen::Matrix2d> llt{Eigen::Matrix2d(H)};
        const bool newton = llt.info() == Eigen::Success && H.determinant() > 1e-14 * (1.0 + H.squaredNorm());
        if (newton)
            dir = -llt.solve(Eigen::Vector2d(g));
        else
            dir = -g * (scale / std::max(g.norm(), 1e-300));
        double t = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 40; ++ls) {
            const Vec y = x + t * dir;
            const double fy = phi(y);
            if (fy < fx) {
                x = y;
                fx = fy;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if (!improved)
            break;
        if (newton && (t * dir).norm() <= 1e-13 * (1.0 + x.norm()))
            stationary = true;
    }
    if (stationary)
        return x;
    // y -> min over x1 of phi(x1, y) is convex
    auto inner = [&](double y) {
        auto row = [&](double s) { return phi(vec2(s, y)); };
        const double s = minimize_convex_1d(row, x[0], 0.1 * scale);
        return std::pair{s, row(s)};
    };
    const double y = minimize_convex_1d([&](double t) { return inner(t).second; }, x[1], 0.1 * scale);
    const auto [s, fs] = inner(y);
    if (fs <= fx)
        x = vec2(s, y);
    return x;
}

} // namespace floatlab
