#pragma once

// Floating functions: psi_delta(x) = sup over slopes a of <a, x> + b(a),
// where b(a) is the offset whose cut {<a,.> + b > psi} has volume delta.
// f_delta = exp(-psi_delta) is the floating log-concave function.

#include <floatlab/convexfn.hpp>
#include <floatlab/epigraph.hpp>
#include <floatlab/errors.hpp>
#include <floatlab/numerics.hpp>
#include <floatlab/parallel.hpp>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace floatlab {

struct FloatParams {
    double delta = 1e-3;
    double cut_volume_tol = 1e-10; // relative to delta
    SearchSpec search{9, 0, 4.0};  // half_width scales as half_width * (1 + |grad psi(x)|)
    QuadratureSpec quadrature;     // truncation_radius bounds every wet region
    int polish_iterations = 30;    // Newton steps on the slope after the coarse scan

    /// Defaults per dimension: a coarser slope grid in the plane.
    static FloatParams for_dimension(int n, double delta)
    {
        FloatParams p;
        p.delta = delta;
        p.quadrature.dimension = n;
        if (n == 2)
            p.search.coarse_count = 5;
        return p;
    }

    void validate() const
    {
        if (!(delta > 0.0) || !std::isfinite(delta))
            throw DomainError("delta must be positive");
        if (!(cut_volume_tol > 0.0))
            throw DomainError("cut volume tolerance must be positive");
        search.validate();
        quadrature.validate();
    }
};

struct FloatingEvaluation {
    Vec x;
    double psi = 0.0;
    double psi_delta = 0.0;
    Vec slope;
    double offset = 0.0;
    double cut_volume = 0.0;
    bool retried = false; // the slope box was enlarged once
};

struct OffsetSolution {
    double offset = 0.0;
    WetRegion wet;
    bool converged = true;
};

/// Offset b with V(a, b) = delta for the slope of `cut`. Newton on
/// V^{2/(n+2)}, which is affine in b for quadratic psi, safeguarded by a
/// bracket [floor, b_hi] with b_hi grown by doubling.
inline OffsetSolution solve_offset(const CutSection& cut, int n, double delta, double rel_tol,
                                   const ConvexFunction& psi)
{
    const double p = 2.0 / (n + 2);
    const double target = std::pow(delta, p);
    const double floor = cut.floor();

    // quadratic model at the deepest point: V(t) = 2 w_n (2t)^{n/2} t / ((n+2) sqrt(det H))
    double t0 = target;
    const double det = psi.hessian(cut.center()).determinant();
    if (det > 0.0 && std::isfinite(det)) {
        const double k = 2.0 * unit_ball_volume(n) * std::pow(2.0, 0.5 * n) / ((n + 2) * std::sqrt(det));
        t0 = std::pow(delta / k, p);
    }
    double lo = floor, hi = kInf;
    bool hi_from_region = false; // upper bracket only known from a cut leaving the ball
    int region_hits = 0;
    double b = floor + t0;
    OffsetSolution best;
    double best_err = kInf;
    for (int it = 0; it < 200; ++it) {
        WetRegion w;
        try {
            w = cut.evaluate(b);
        } catch (const RegionError&) {
            hi = b;
            hi_from_region = true;
            if (++region_hits > 8 || hi - lo <= 4.0 * kEps * (1.0 + std::abs(lo)))
                break;
            b = 0.5 * (lo + hi);
            continue;
        }
        const double err = std::abs(w.volume - delta);
        if (err < best_err) {
            best_err = err;
            best = {b, w, false};
        }
        if (err <= rel_tol * delta) {
            best.converged = true;
            return best;
        }
        if (w.volume < delta) {
            lo = b;
        } else {
            hi = b;
            hi_from_region = false;
        }
        if (!std::isinf(hi) && hi - lo <= 4.0 * kEps * (1.0 + std::abs(lo)))
            break;
        double next = kInf;
        if (w.volume > 0.0 && w.area > 0.0) {
            const double g = std::pow(w.volume, p) - target;
            const double dg = p * std::pow(w.volume, p - 1.0) * w.area;
            next = b - g / dg;
        }
        if (!(next > lo && next < hi))
            next = std::isinf(hi) ? lo + 2.0 * (lo - floor) + t0 : 0.5 * (lo + hi);
        b = next;
    }
    if (hi_from_region || !std::isfinite(best_err))
        throw RegionError("offset: volume delta is not reachable with the wet region inside the truncation ball");
    return best;
}

/// Cut offset for a fixed slope: the b with V(a, b) = delta.
inline double offset_for_volume(const ConvexFunction& psi, const Vec& slope, const FloatParams& params)
{
    params.validate();
    CutOptions opt;
    opt.region_radius = params.quadrature.truncation_radius;
    const CutSection cut(psi, slope, opt);
    const auto sol = solve_offset(cut, psi.dimension(), params.delta, params.cut_volume_tol, psi);
    return sol.offset;
}

/// Evaluates psi_delta at many points for one (psi, delta). Holds the
/// feasibility data computed once per function.
class FloatingSolver {
public:
    FloatingSolver(ConvexFunction psi, FloatParams params) : psi_(std::move(psi)), params_(std::move(params))
    {
        params_.validate();
        n_ = psi_.dimension();
        opt_.region_radius = params_.quadrature.truncation_radius;
        // tallest horizontal cut whose wet region stays in the truncation ball
        const double R = opt_.region_radius;
        double m = kInf;
        if (n_ == 1) {
            m = std::min(psi_(vec1(R)), psi_(vec1(-R)));
        } else {
            for (int k = 0; k < 256; ++k) {
                const double t = 2.0 * std::numbers::pi * k / 256.0;
                m = std::min(m, psi_(vec2(R * std::cos(t), R * std::sin(t))));
            }
        }
        const CutSection flat(psi_, zero_vec(n_), opt_);
        const double height = flat.floor() + 0.9 * (m - flat.floor());
        reachable_ = flat.volume(height);
        if (!(params_.delta < 0.1 * reachable_))
            throw RegionError("delta too large: it must stay below 10% of the largest cap volume inside the "
                              "truncation ball (" + std::to_string(reachable_) + ")");
    }

    const ConvexFunction& function() const { return psi_; }
    const FloatParams& params() const { return params_; }
    double reachable_volume() const { return reachable_; }

    FloatingEvaluation at(const Vec& x) const
    {
        if (x.size() != n_)
            throw DomainError("point dimension does not match the function");
        const Vec a0 = psi_.gradient(x);
        const double w0 = params_.search.half_width * (1.0 + a0.norm());
        if (auto r = search(x, a0, w0))
            return *r;
        if (auto r = search(x, a0, 4.0 * w0)) {
            r->retried = true;
            return *r;
        }
        throw SearchBoxError("floating: the best slope sits on the search box boundary after enlarging it");
    }

private:
    struct SlopeValue {
        double value = -kInf; // <a, x> + b(a)
        double offset = 0.0;
        WetRegion wet;
    };

    ConvexFunction psi_;
    FloatParams params_;
    CutOptions opt_;
    int n_ = 1;
    double reachable_ = 0.0;

    SlopeValue evaluate_slope(const Vec& x, const Vec& a) const
    {
        SlopeValue s;
        try {
            const CutSection cut(psi_, a, opt_, &x);
            const auto sol = solve_offset(cut, n_, params_.delta, params_.cut_volume_tol, psi_);
            s.offset = sol.offset;
            s.wet = sol.wet;
            s.value = a.dot(x) + sol.offset;
        } catch (const RegionError&) {
            s.value = -kInf; // cut leaves the truncation ball: not a candidate
        }
        return s;
    }

    // nullopt on a boundary hit
    std::optional<FloatingEvaluation> search(const Vec& x, const Vec& a0, double w) const
    {
        SearchSpec spec = params_.search;
        spec.half_width = w;
        auto F = [&](const Vec& a) { return evaluate_slope(x, a).value; };
        const MaximizeResult coarse = maximize(F, n_, spec, a0);
        if (!std::isfinite(coarse.value))
            throw RegionError("floating: no slope in the search box gives a cut inside the truncation ball");

        // grad F(a) = x - centroid(a). Newton on it, with the centroid
        // Jacobian in the slope by forward differences, backtracking on F.
        Vec a = coarse.argmax;
        SlopeValue cur = evaluate_slope(x, a);
        for (int it = 0; it < params_.polish_iterations && std::isfinite(cur.value); ++it) {
            const Vec grad = x - cur.wet.centroid;
            if (grad.norm() <= 1e-12 * (1.0 + x.norm()))
                break;
            const double h = 1e-6 * (1.0 + a.norm());
            Mat J(n_, n_);
            bool ok = true;
            for (int j = 0; j < n_ && ok; ++j) {
                Vec ah = a;
                ah[j] += h;
                const SlopeValue s = evaluate_slope(x, ah);
                ok = std::isfinite(s.value);
                if (ok)
                    J.col(j) = (s.wet.centroid - cur.wet.centroid) / h;
            }
            if (!ok)
                break;
            J = 0.5 * (J + J.transpose()).eval();
            J += 1e-12 * (1.0 + J.norm()) * Mat::Identity(n_, n_);
            Vec step = J.ldlt().solve(grad);
            if (!step.allFinite())
                break;
            bool moved = false;
            for (int ls = 0; ls < 30; ++ls) {
                const SlopeValue s = evaluate_slope(x, a + step);
                if (s.value >= cur.value) {
                    a += step;
                    cur = s;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!moved || step.norm() <= 1e-14 * (1.0 + a.norm()))
                break;
        }
        if (cur.value < coarse.value) {
            a = coarse.argmax;
            cur = evaluate_slope(x, a);
        }
        const double spacing = 2.0 * w / (spec.coarse_count - 1);
        for (int i = 0; i < n_; ++i)
            if (std::abs(a[i] - a0[i]) >= w - 1e-6 * spacing)
                return std::nullopt;

        FloatingEvaluation e;
        e.x = x;
        e.psi = psi_(x);
        e.psi_delta = cur.value;
        e.slope = a;
        e.offset = cur.offset;
        e.cut_volume = cur.wet.volume;
        return e;
    }
};

inline FloatingEvaluation floating_value(const ConvexFunction& psi, const Vec& x, const FloatParams& params)
{
    return FloatingSolver(psi, params).at(x);
}

/// f_delta(x) = exp(-psi_delta(x)).
inline double floating_log_concave(const ConvexFunction& psi, const Vec& x, const FloatParams& params)
{
    return std::exp(-floating_value(psi, x, params).psi_delta);
}

// ---------------------------------------------------------------------------
// Grids

/// Tensor grid: count points on [lo, hi] per axis (count 1 gives lo).
struct GridAxis {
    double lo = 0.0;
    double hi = 0.0;
    int count = 0;

    double at(int i) const { return count == 1 ? lo : lo + (hi - lo) * i / (count - 1); }
};

struct Grid {
    std::vector<GridAxis> axes;

    int dimension() const { return static_cast<int>(axes.size()); }

    std::size_t size() const
    {
        if (axes.empty())
            return 0;
        std::size_t s = 1;
        for (const auto& a : axes)
            s *= static_cast<std::size_t>(std::max(a.count, 0));
        return s;
    }

    /// Row-major: the last axis varies fastest.
    Vec point(std::size_t k) const
    {
        Vec p(dimension());
        for (int d = dimension() - 1; d >= 0; --d) {
            const auto c = static_cast<std::size_t>(axes[d].count);
            p[d] = axes[d].at(static_cast<int>(k % c));
            k /= c;
        }
        return p;
    }
};

struct FloatingRow {
    std::size_t index = 0;
    Vec x;
    std::optional<FloatingEvaluation> value;
    std::string error; // set when value is empty
};

struct FloatingTable {
    int dimension = 1;
    std::vector<FloatingRow> rows;

    std::size_t failures() const
    {
        std::size_t k = 0;
        for (const auto& r : rows)
            k += r.value ? 0 : 1;
        return k;
    }
};

/// psi_delta on every grid point, in grid order. Per-point failures are
/// recorded in the row rather than thrown.
inline FloatingTable floating_grid(const FloatingSolver& solver, const std::vector<Vec>& points)
{
    FloatingTable t;
    t.dimension = solver.function().dimension();
    t.rows.resize(points.size());
    const double R = solver.params().quadrature.truncation_radius;
    parallel_for(points.size(), [&](std::size_t i) {
        FloatingRow& row = t.rows[i];
        row.index = i;
        row.x = points[i];
        try {
            if (points[i].norm() >= R)
                throw RegionError("grid point outside the truncation ball");
            row.value = solver.at(points[i]);
        } catch (const Error& e) {
            row.error = std::string(e.kind()) + ": " + e.what();
        }
    });
    return t;
}

inline FloatingTable floating_grid(const ConvexFunction& psi, const Grid& grid, const FloatParams& params)
{
    if (grid.size() == 0) {
        FloatingTable t;
        t.dimension = psi.dimension();
        return t;
    }
    if (grid.dimension() != psi.dimension())
        throw DomainError("grid dimension does not match the function");
    const FloatingSolver solver(psi, params);
    std::vector<Vec> pts;
    pts.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
        pts.push_back(grid.point(k));
    return floating_grid(solver, pts);
}

/// Number formatting shared by the CSV writers: 9 significant digits.
inline std::string format_g9(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

/// CSV with header x1[,x2],psi,psi_delta,slope1[,slope2],cutvol. Failed
/// points carry nan values.
inline void write_csv(std::ostream& os, const FloatingTable& t)
{
    const bool two = t.dimension == 2;
    os << (two ? "x1,x2" : "x1") << ",psi,psi_delta," << (two ? "slope1,slope2" : "slope1") << ",cutvol\n";
    for (const auto& r : t.rows) {
        for (int i = 0; i < t.dimension; ++i)
            os << format_g9(r.x[i]) << ',';
        if (r.value) {
            os << format_g9(r.value->psi) << ',' << format_g9(r.value->psi_delta) << ',';
            for (int i = 0; i < t.dimension; ++i)
                os << format_g9(r.value->slope[i]) << ',';
            os << format_g9(r.value->cut_volume) << '\n';
        } else {
            os << "nan,nan,";
            for (int i = 0; i < t.dimension; ++i)
                os << "nan,";
            os << "nan\n";
        }
    }
}

// ---------------------------------------------------------------------------
// Floating body of a disk

/// Area of the segment of height h cut from a disk of radius r.
inline double circular_segment_area(double r, double h)
{
    const double d = r - h;
    return r * r * std::acos(d / r) - d * std::sqrt(std::max(0.0, r * r - d * d));
}

/// Radius of the floating body of the disk of radius r: r - h with the
/// segment of height h having area delta.
inline double disk_floating_body(double r, double delta)
{
    if (!(r > 0.0))
        throw DomainError("disk radius must be positive");
    if (!(delta >= 0.0) || !(delta < 0.5 * std::numbers::pi * r * r))
        throw DomainError("delta must lie in [0, area/2)");
    if (delta == 0.0)
        return r;
    auto g = [&](double h) { return circular_segment_area(r, h) - delta; };
    const double h = find_root_monotone(g, 0.0, r, RootOptions{1e-15 * r, 0.0, 400});
    return r - h;
}

} // namespace floatlab
