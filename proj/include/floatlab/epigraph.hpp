#pragma once

// Geometry of the epigraph of a convex function: volumes of caps cut off
// by non-vertical hyperplanes, ellipsoid caps, Gauss curvature and normal
// of the graph, and the rolling function.

#include <floatlab/convexfn.hpp>
#include <floatlab/errors.hpp>
#include <floatlab/numerics.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace floatlab {

/// The affine function l(x) = <slope, x> + offset; its subgraph is the cut.
struct HyperplaneCut {
    Vec slope;
    double offset = 0.0;

    HyperplaneCut() = default;
    HyperplaneCut(Vec a, double b) : slope(std::move(a)), offset(b)
    {
        if (!slope.allFinite() || !std::isfinite(offset))
            throw DomainError("hyperplane cut must be finite");
    }

    double operator()(const Vec& x) const { return slope.dot(x) + offset; }
};

struct CutOptions {
    double region_radius = 12.0; // the wet region must stay inside this ball
    double rel_tol = 1e-12;      // accuracy target for the cap volume
    int min_angles = 16;         // planar trapezoid rule, doubled until converged
    int max_angles = 1024;
};

/// Wet region {l > psi} of a cut: its cap volume, area and centroid.
struct WetRegion {
    double volume = 0.0;
    double area = 0.0;
    Vec centroid;
    bool converged = true;
};

/// Cap volumes V(b) = int (<a,x> + b - psi(x))_+ dx for a fixed slope a.
///
/// The deepest point c of phi = psi - <a,.> is located once; for each offset
/// the wet region is star-shaped about c, so the volume is an iterated
/// integral in polar coordinates around c. The radial boundary is found by
/// bracketed root finding and the angular integral uses a nested periodic
/// trapezoid rule.
class CutSection {
public:
    CutSection(const ConvexFunction& psi, const Vec& slope, const CutOptions& opt = {},
               const Vec* start = nullptr)
        : psi_(psi), slope_(slope), opt_(opt), n_(psi.dimension())
    {
        if (slope.size() != n_)
            throw DomainError("cut slope dimension does not match the function");
        if (!slope.allFinite())
            throw DomainError("cut slope must be finite");
        const Vec x0 = start ? *start : psi.minimizer_hint();
        if (n_ == 1) {
            auto phi1 = [&](double t) { return phi(vec1(t)); };
            center_ = vec1(minimize_convex_1d(phi1, x0[0], 1.0));
        } else {
            auto grad = [&](const Vec& x) -> Vec { return psi_.gradient(x) - slope_; };
            auto hess = [&](const Vec& x) -> Mat { return psi_.hessian(x); };
            center_ = minimize_convex_2d([&](const Vec& x) { return phi(x); }, grad, hess, x0, 1.0);
        }
        if (center_.norm() >= opt_.region_radius)
            throw RegionError("cut: deepest point lies outside the truncation ball");
        floor_ = phi(center_);
    }

    const Vec& center() const { return center_; }
    /// min over x of psi(x) - <a, x>: the largest offset with a dry cut.
    double floor() const { return floor_; }
    const Vec& slope() const { return slope_; }

    double phi(const Vec& x) const { return psi_(x) - slope_.dot(x); }

    WetRegion evaluate(double b) const
    {
        WetRegion w;
        w.centroid = center_;
        if (!(b > floor_))
            return w;
        return n_ == 1 ? evaluate_1d(b) : evaluate_2d(b);
    }

    double volume(double b) const { return evaluate(b).volume; }

private:
    ConvexFunction psi_;
    Vec slope_;
    CutOptions opt_;
    int n_;
    Vec center_;
    double floor_ = 0.0;

    // Distance from the centre to the truncation sphere along u.
    double exit_radius(const Vec& u) const
    {
        const double cu = center_.dot(u);
        const double disc = cu * cu - center_.squaredNorm() + opt_.region_radius * opt_.region_radius;
        return -cu + std::sqrt(std::max(disc, 0.0));
    }

    // Root of b - phi(c + r u) = 0 for r > 0.
    double ray_root(double b, const Vec& u, double guess) const
    {
        auto h = [&](double r) { return b - phi(center_ + r * u); };
        const double r_max = exit_radius(u);
        double lo = 0.0, hlo = b - floor_;
        double hi = std::min(guess > 0.0 ? guess : 1e-3, r_max);
        double hhi = h(hi);
        while (hhi > 0.0) {
            if (hi >= r_max)
                throw RegionError("cut: wet region exceeds the truncation ball (offset too large)");
            lo = hi;
            hlo = hhi;
            hi = std::min(2.0 * hi, r_max);
            hhi = h(hi);
        }
        // shrink from below for a tight bracket when the guess overshoots
        return find_root_bracketed(h, lo, hlo, hi, hhi, RootOptions{1e-15 * (1.0 + hi), 0.0, 200});
    }

    // int_0^rho (b - phi(c + r u)) r^power dr
    double radial_integral(double b, const Vec& u, double rho, int power) const
    {
        auto g = [&](double r) { return (b - phi(center_ + r * u)) * (power == 1 ? r : 1.0); };
        const double scale = (b - floor_) * (power == 1 ? rho * rho : rho);
        const auto r = integrate_interval(g, 0.0, rho, 1e-3 * opt_.rel_tol * scale + 1e-300, opt_.rel_tol, 200);
        return r.value;
    }

    WetRegion evaluate_1d(double b) const
    {
        const double guess = std::sqrt(2.0 * (b - floor_));
        const double rp = ray_root(b, vec1(1.0), guess);
        const double rm = ray_root(b, vec1(-1.0), guess);
        WetRegion w;
        w.volume = radial_integral(b, vec1(1.0), rp, 0) + radial_integral(b, vec1(-1.0), rm, 0);
        w.area = rp + rm;
        w.centroid = vec1(center_[0] + 0.5 * (rp - rm));
        return w;
    }

    WetRegion evaluate_2d(double b) const
    {
        struct Sample {
            double vol, area, mx, my;
        };
        const double two_pi = 2.0 * std::numbers::pi;
        double guess = std::sqrt(2.0 * (b - floor_));
        auto sample = [&](double theta) {
            const Vec u = vec2(std::cos(theta), std::sin(theta));
            const double rho = ray_root(b, u, guess);
            guess = rho;
            const double m3 = rho * rho * rho / 3.0;
            return Sample{radial_integral(b, u, rho, 1), 0.5 * rho * rho, u[0] * m3, u[1] * m3};
        };
        // offset the nodes so that no node sits on a coordinate axis
        const double phase = 0.1234567;
        int K = opt_.min_angles;
        Sample sum{0, 0, 0, 0};
        for (int k = 0; k < K; ++k) {
            const Sample s = sample(phase + two_pi * k / K);
            sum.vol += s.vol;
            sum.area += s.area;
            sum.mx += s.mx;
            sum.my += s.my;
        }
        double vol = sum.vol * two_pi / K;
        double area = sum.area * two_pi / K;
        bool converged = false;
        while (K < opt_.max_angles) {
            for (int k = 0; k < K; ++k) {
                const Sample s = sample(phase + two_pi * (k + 0.5) / K);
                sum.vol += s.vol;
                sum.area += s.area;
                sum.mx += s.mx;
                sum.my += s.my;
            }
            K *= 2;
            const double vol2 = sum.vol * two_pi / K;
            const double area2 = sum.area * two_pi / K;
            const bool ok = std::abs(vol2 - vol) <= opt_.rel_tol * vol2 && std::abs(area2 - area) <= 1e-10 * area2;
            vol = vol2;
            area = area2;
            if (ok) {
                converged = true;
                break;
            }
        }
        WetRegion w;
        w.volume = vol;
        w.area = area;
        w.centroid = center_ + vec2(sum.mx, sum.my) * (two_pi / K) / area;
        w.converged = converged;
        return w;
    }
};

/// V(a, b) = int (<a,x> + b - psi(x))_+ dx, with the wet region required to
/// lie inside the ball of radius spec.truncation_radius.
inline double cap_volume(const ConvexFunction& psi, const HyperplaneCut& cut, const QuadratureSpec& spec)
{
    spec.validate();
    CutOptions opt;
    opt.region_radius = spec.truncation_radius;
    return CutSection(psi, cut.slope, opt).volume(cut.offset);
}

// ---------------------------------------------------------------------------
// Ellipsoid caps

struct EllipsoidSpec {
    std::vector<double> semi_axes;

    explicit EllipsoidSpec(std::vector<double> axes) : semi_axes(std::move(axes))
    {
        if (semi_axes.empty())
            throw DomainError("ellipsoid needs at least one semi-axis");
        for (double a : semi_axes)
            if (!(a > 0.0) || !std::isfinite(a))
                throw DomainError("ellipsoid semi-axes must be positive");
    }

    int dimension() const { return static_cast<int>(semi_axes.size()); }
    double last() const { return semi_axes.back(); }
};

namespace detail {

inline double leading_axes_product(const EllipsoidSpec& e)
{
    double p = 1.0;
    for (int i = 0; i + 1 < e.dimension(); ++i)
        p *= e.semi_axes[i];
    return p;
}

inline void check_cap_height(const EllipsoidSpec& e, double h)
{
    if (!(h >= 0.0) || h > e.last())
        throw DomainError("cap height must lie in [0, last semi-axis]");
}

} // namespace detail

/// Volume of {x in E : x_m >= a_m - h} by quadrature of slice volumes.
inline double ellipsoid_cap_volume(const EllipsoidSpec& e, double h)
{
    detail::check_cap_height(e, h);
    const int m = e.dimension();
    const double a = e.last();
    const double c = unit_ball_volume(m - 1) * detail::leading_axes_product(e);
    if (h == 0.0)
        return 0.0;
    // substitute s = depth below the top: slice factor ((2as - s^2)/a^2)^{(m-1)/2}
    auto slice = [&](double s) { return std::pow(std::max(0.0, (2.0 * a * s - s * s) / (a * a)), 0.5 * (m - 1)); };
    // the s^{(m-1)/2} endpoint behaviour is handled by s = t^2
    auto g = [&](double t) { return 2.0 * t * slice(t * t); };
    const auto r = integrate_interval(g, 0.0, std::sqrt(h), 1e-15, 1e-13, 500);
    return c * r.value;
}

struct CapBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Sandwich for ellipsoid caps of height h <= a_m:
///   upper = 2^{(m+1)/2} vol_{m-1}(B) prod_{i<m} a_i a_m^{-(m-1)/2} h^{(m+1)/2} / (m+1)
///   lower = upper (1 - h/(2 a_m))^{(m-1)/2}
inline CapBounds ellipsoid_cap_bounds(const EllipsoidSpec& e, double h)
{
    detail::check_cap_height(e, h);
    const int m = e.dimension();
    const double a = e.last();
    const double upper = std::pow(2.0, 0.5 * (m + 1)) * unit_ball_volume(m - 1) * detail::leading_axes_product(e) *
                         std::pow(a, -0.5 * (m - 1)) * std::pow(h, 0.5 * (m + 1)) / (m + 1);
    return {upper * std::pow(1.0 - h / (2.0 * a), 0.5 * (m - 1)), upper};
}

/// Ball form of the sandwich with the linear factor (1 - h/(2r)) in the
/// lower bound. Valid (and weaker than the general form) for m <= 3.
inline CapBounds ball_cap_bounds(int m, double r, double h)
{
    if (m < 1 || m > 3)
        throw DomainError("ball_cap_bounds: the linear-factor form needs dimension 1..3");
    const EllipsoidSpec e(std::vector<double>(static_cast<std::size_t>(m), r));
    CapBounds b = ellipsoid_cap_bounds(e, h);
    b.lower = b.upper * (1.0 - h / (2.0 * r));
    return b;
}

// ---------------------------------------------------------------------------
// Curvature and normals of the graph

/// det of the Hessian with tiny negative noise clamped to zero.
inline double hessian_determinant(const ConvexFunction& psi, const Vec& x)
{
    const Mat H = psi.hessian(x);
    const double d = H.determinant();
    // rank-deficient Hessians round to |d| ~ eps |H|^2
    const double noise = 1e-14 * H.squaredNorm();
    if (d > noise)
        return d;
    if (d > -1e-10 - noise)
        return 0.0;
    throw ConvexityError("negative Hessian determinant: the function is not convex here");
}

/// Gauss curvature of the graph: det(Hess psi) / (1 + |grad psi|^2)^{(n+2)/2}.
inline double graph_curvature(const ConvexFunction& psi, const Vec& x)
{
    const int n = psi.dimension();
    const double g2 = psi.gradient(x).squaredNorm();
    return hessian_determinant(psi, x) / std::pow(1.0 + g2, 0.5 * (n + 2));
}

/// Last component of the outer unit normal of the epigraph (up to sign):
/// (1 + |grad psi|^2)^{-1/2}.
inline double graph_normal_component(const ConvexFunction& psi, const Vec& x)
{
    return 1.0 / std::sqrt(1.0 + psi.gradient(x).squaredNorm());
}

// ---------------------------------------------------------------------------
// Rolling function

namespace detail {

// The ball of radius rho touching the graph at (x, psi(x)) from inside the
// epigraph, tested on sample points of its horizontal projection.
inline bool rolling_ball_fits(const ConvexFunction& psi, const Vec& x, double fx, const Vec& g, double rho)
{
    const int n = psi.dimension();
    const double s = std::sqrt(1.0 + g.squaredNorm());
    const Vec ch = x - (rho / s) * g;
    const double cy = fx + rho / s;
    // height of the graph above the lower hemisphere, plus rounding slack
    auto gap = [&](const Vec& p) {
        const double d2 = (p - ch).squaredNorm();
        if (d2 > rho * rho)
            return kInf;
        const double f = psi(p);
        return (cy - f) - std::sqrt(rho * rho - d2) + 16.0 * kEps * (1.0 + std::abs(cy) + std::abs(f) + rho);
    };
    const double x_tol = 1e-12 * (1.0 + rho);
    if (n == 1) {
        const int m = 257;
        const double h = 2.0 * rho / (m - 1);
        std::vector<double> v(m);
        for (int i = 0; i < m; ++i) {
            v[i] = gap(vec1(ch[0] - rho + h * i));
            if (v[i] < 0.0)
                return false;
        }
        for (int k = 1; k <= 40; ++k) {
            const double d = rho * std::ldexp(1.0, -k);
            if (gap(vec1(x[0] + d)) < 0.0 || gap(vec1(x[0] - d)) < 0.0)
                return false;
        }
        // tangential contacts fall between nodes: refine every local minimum
        auto neg = [&](double t) { return -gap(vec1(t)); };
        for (int i = 0; i < m; ++i) {
            const bool left = i == 0 || v[i] <= v[i - 1];
            const bool right = i == m - 1 || v[i] <= v[i + 1];
            if (!left || !right)
                continue;
            const double t = ch[0] - rho + h * i;
            if (-golden_section_max(neg, t - h, t + h, x_tol).value < 0.0)
                return false;
        }
        return true;
    }
    const int m = 33;
    std::vector<double> v(static_cast<std::size_t>(m * m));
    auto node = [&](int i, int j) {
        const double t = 2.0 * std::numbers::pi * j / m;
        return Vec(ch + (rho * i / (m - 1)) * vec2(std::cos(t), std::sin(t)));
    };
    for (int i = 1; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            v[i * m + j] = gap(node(i, j));
            if (v[i * m + j] < 0.0)
                return false;
        }
    for (int k = 1; k <= 40; ++k) {
        const double d = rho * std::ldexp(1.0, -k);
        for (int j = 0; j < 16; ++j) {
            const double t = 2.0 * std::numbers::pi * j / 16.0;
            if (gap(x + d * vec2(std::cos(t), std::sin(t))) < 0.0)
                return false;
        }
    }
    for (int i = 1; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double c = v[i * m + j];
            const bool local = (i == 1 || c <= v[(i - 1) * m + j]) && (i == m - 1 || c <= v[(i + 1) * m + j]) &&
                               c <= v[i * m + (j + 1) % m] && c <= v[i * m + (j + m - 1) % m];
            if (!local)
                continue;
            Vec p = node(i, j);
            double step = rho / (m - 1);
            for (int round = 0; round < 3; ++round, step *= 0.5)
                for (int axis = 0; axis < 2; ++axis) {
                    auto neg = [&](double t) {
                        Vec q = p;
                        q[axis] = t;
                        return -gap(q);
                    };
                    const auto gr = golden_section_max(neg, p[axis] - step, p[axis] + step, x_tol);
                    if (-gr.value < 0.0)
                        return false;
                    p[axis] = gr.x;
                }
        }
    return true;
}

} // namespace detail

/// Radius of the largest ball inside epi(psi) touching the graph at
/// (x, psi(x)); 0 where the normal is not unique.
inline double rolling_function(const ConvexFunction& psi, const Vec& x, double tol = 1e-6)
{
    if (!(tol > 0.0))
        throw DomainError("rolling_function: tolerance must be positive");
    if (psi.is_kink(x))
        return 0.0;
    const double fx = psi(x);
    const Vec g = psi.gradient(x);
    auto fits = [&](double rho) { return detail::rolling_ball_fits(psi, x, fx, g, rho); };
    double lo = 0.0;
    double hi = 1.0;
    const double cap = 1e6;
    while (fits(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > cap)
            return cap;
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (fits(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

struct RollingIntegral {
    double value = 0.0;
    double error = 0.0;
    double skipped_bound = 0.0; // what the skipped nodes would add with r at the floor
    bool converged = true;
};

/// int (1 + |grad psi|^2)^{1/2} r_psi(x)^{-alpha} e^{-psi(x)} dx for
/// 0 <= alpha < 1. Nodes with r_psi below r_floor are excluded and their
/// contribution (bounded with r = r_floor) is reported separately.
inline RollingIntegral rolling_weighted_integral(const ConvexFunction& psi, double alpha, const QuadratureSpec& spec,
                                                 double rolling_tol = 1e-6, double r_floor = 1e-4)
{
    if (!(alpha >= 0.0) || !(alpha < 1.0))
        throw DomainError("rolling_weighted_integral: alpha must lie in [0, 1)");
    spec.validate();
    const double R = effective_radius(psi, spec);
    auto g = [&](const Vec& x) -> std::array<double, 2> {
        const double w = std::sqrt(1.0 + psi.gradient(x).squaredNorm()) * std::exp(-psi(x));
        if (alpha == 0.0)
            return {w, 0.0};
        const double r = rolling_function(psi, x, rolling_tol);
        if (r < r_floor)
            return {0.0, w * std::pow(r_floor, -alpha)};
        return {w * std::pow(r, -alpha), 0.0};
    };
    // the bisected radius is only accurate to rolling_tol
    QuadratureSpec loose = spec;
    loose.rel_tol = std::max(spec.rel_tol, 10.0 * rolling_tol);
    const auto res = integrate_ball_n<2>(g, psi.dimension(), R, loose);
    return {res.value[0], res.error[0], res.value[1], res.converged};
}

} // namespace floatlab
