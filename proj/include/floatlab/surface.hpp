#pragma once

// Affine surface area of log-concave functions f = e^{-psi} and of planar
// convex bodies, with the identities it satisfies packaged as checks.

#include <floatlab/convexfn.hpp>
#include <floatlab/epigraph.hpp>
#include <floatlab/errors.hpp>
#include <floatlab/numerics.hpp>

#include <json.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace floatlab {

// ---------------------------------------------------------------------------
// Check reports

enum class Comparison {
    relative, // pass iff rel_gap <= tol
    absolute, // pass iff abs_gap <= tol
    at_most,  // pass iff lhs <= rhs + tol * |rhs|
};

struct CheckReport {
    std::string property;
    double lhs = 0.0;
    double rhs = 0.0;
    double abs_gap = 0.0;
    double rel_gap = 0.0;
    double tol = 0.0;
    bool pass = false;
    std::vector<std::string> notes;
    std::map<std::string, double> values; // named intermediate quantities

    static CheckReport make(std::string property, double lhs, double rhs, double tol,
                            Comparison mode = Comparison::relative)
    {
        CheckReport r;
        r.property = std::move(property);
        r.lhs = lhs;
        r.rhs = rhs;
        r.tol = tol;
        r.abs_gap = std::abs(lhs - rhs);
        const double scale = std::max(std::abs(lhs), std::abs(rhs));
        r.rel_gap = scale > 0.0 ? r.abs_gap / scale : 0.0;
        switch (mode) {
        case Comparison::relative:
            r.pass = r.rel_gap <= tol;
            break;
        case Comparison::absolute:
            r.pass = r.abs_gap <= tol;
            break;
        case Comparison::at_most:
            r.pass = lhs <= rhs + tol * std::abs(rhs);
            r.notes.push_back("inequality check: lhs <= rhs");
            break;
        }
        return r;
    }

    nlohmann::json to_json() const
    {
        nlohmann::json j{{"property", property}, {"lhs", lhs},         {"rhs", rhs},   {"abs_gap", abs_gap},
                         {"rel_gap", rel_gap},   {"tol", tol},         {"pass", pass}, {"notes", notes}};
        if (!values.empty())
            j["values"] = values;
        return j;
    }
};

// ---------------------------------------------------------------------------
// Affine surface area of f = e^{-psi}

struct SurfaceIntegral {
    double value = 0.0;
    double error = 0.0;
    double radius = 0.0;
    double skipped = 0.0; // measure of nodes dropped by the Hessian clamp
};

namespace detail {

template <class Weight>
SurfaceIntegral hessian_weighted_integral(const ConvexFunction& psi, const QuadratureSpec& spec, double radius,
                                          Weight&& weight, const char* what)
{
    spec.validate();
    const int n = psi.dimension();
    const double e = 1.0 / (n + 2);
    auto g = [&](const Vec& x) -> std::array<double, 2> {
        double det;
        try {
            det = hessian_determinant(psi, x);
        } catch (const ConvexityError&) {
            return {0.0, 1.0};
        }
        return {std::pow(det, e) * weight(x), 0.0};
    };
    const auto r = integrate_ball_n<2>(g, n, radius, spec);
    if (!r.converged)
        throw QuadratureError(std::string(what) + ": subdivision budget exhausted", r.value[0], r.error[0]);
    return {r.value[0], r.error[0], radius, r.value[1]};
}

} // namespace detail

/// as(f) = int (det Hess psi)^{1/(n+2)} e^{-psi}, with details.
inline SurfaceIntegral asa_integral(const ConvexFunction& psi, const QuadratureSpec& spec)
{
    return detail::hessian_weighted_integral(psi, spec, effective_radius(psi, spec),
                                             [&](const Vec& x) { return std::exp(-psi(x)); }, "asa");
}

inline double asa(const ConvexFunction& psi, const QuadratureSpec& spec)
{
    return asa_integral(psi, spec).value;
}

/// The variant with weight exp(-(n psi + <x, grad psi>) / (n+2)).
inline SurfaceIntegral asa_alternative_integral(const ConvexFunction& psi, const QuadratureSpec& spec)
{
    const int n = psi.dimension();
    double R = spec.truncation_radius;
    if (spec.auto_truncation) {
        // <x, grad psi(x)> >= psi(x) - psi(0), so the weight is at most
        // exp(-(n+1)/(n+2) psi + psi(0)/(n+2))
        LinearMinorant m = coercive_minorant(psi);
        const double s = (n + 1.0) / (n + 2.0);
        m.gamma *= s;
        m.beta = s * m.beta - psi(zero_vec(n)) / (n + 2.0);
        R = truncation_radius(m, n, spec.abs_tol / 10.0);
    }
    auto w = [&](const Vec& x) { return std::exp(-(n * psi(x) + x.dot(psi.gradient(x))) / (n + 2.0)); };
    return detail::hessian_weighted_integral(psi, spec, R, w, "asa_alternative");
}

inline double asa_alternative(const ConvexFunction& psi, const QuadratureSpec& spec)
{
    return asa_alternative_integral(psi, spec).value;
}

// ---------------------------------------------------------------------------
// Planar convex bodies

/// Closed counter-clockwise boundary curve theta -> z(theta), theta in
/// [0, 2 pi), with the origin inside.
class BodyBoundary2D {
public:
    using Curve = std::function<Eigen::Vector2d(double)>;

    BodyBoundary2D(Curve z, Curve dz, Curve ddz, std::string description)
        : z_(std::move(z)), dz_(std::move(dz)), ddz_(std::move(ddz)), description_(std::move(description))
    {
    }

    static BodyBoundary2D ellipse(double a, double b, double rotation = 0.0)
    {
        if (!(a > 0.0) || !(b > 0.0))
            throw ConstructionError("ellipse semi-axes must be positive");
        const Eigen::Matrix2d R = Eigen::Rotation2Dd(rotation).toRotationMatrix();
        return BodyBoundary2D([=](double t) -> Eigen::Vector2d { return R * Eigen::Vector2d(a * std::cos(t), b * std::sin(t)); },
                              [=](double t) -> Eigen::Vector2d { return R * Eigen::Vector2d(-a * std::sin(t), b * std::cos(t)); },
                              [=](double t) -> Eigen::Vector2d { return R * Eigen::Vector2d(-a * std::cos(t), -b * std::sin(t)); },
                              "ellipse("+ detail::fmt(a) + "," + detail::fmt(b) + ")");
    }

    static BodyBoundary2D disk(double r) { return ellipse(r, r); }

    /// Same curve rotated about the origin.
    BodyBoundary2D rotated(double angle) const
    {
        const Eigen::Matrix2d R = Eigen::Rotation2Dd(angle).toRotationMatrix();
        auto z = z_, dz = dz_, ddz = ddz_;
        return BodyBoundary2D([=](double t) -> Eigen::Vector2d { return R * z(t); },
                              [=](double t) -> Eigen::Vector2d { return R * dz(t); },
                              [=](double t) -> Eigen::Vector2d { return R * ddz(t); }, description_);
    }

    Eigen::Vector2d point(double t) const { return z_(t); }
    double speed(double t) const { return dz_(t).norm(); }

    double curvature(double t) const
    {
        const Eigen::Vector2d d = dz_(t), dd = ddz_(t);
        const double s = d.norm();
        return (d.x() * dd.y() - d.y() * dd.x()) / (s * s * s);
    }

    Eigen::Vector2d normal(double t) const
    {
        const Eigen::Vector2d d = dz_(t);
        return Eigen::Vector2d(d.y(), -d.x()) / d.norm();
    }

    /// <z, N_K(z)>
    double support(double t) const { return z_(t).dot(normal(t)); }

    const std::string& description() const { return description_; }

private:
    Curve z_, dz_, ddz_;
    std::string description_;
};

/// Periodic trapezoid rule with doubling until the relative change is below
/// rel_tol.
template <class G>
double periodic_integral(G&& g, double rel_tol = 1e-13, int max_nodes = 1 << 16)
{
    const double two_pi = 2.0 * std::numbers::pi;
    int K = 16;
    double sum = 0.0;
    for (int k = 0; k < K; ++k)
        sum += g(two_pi * k / K);
    double prev = sum * two_pi / K;
    while (K < max_nodes) {
        for (int k = 0; k < K; ++k)
            sum += g(two_pi * (k + 0.5) / K);
        K *= 2;
        const double cur = sum * two_pi / K;
        if (std::abs(cur - prev) <= rel_tol * std::abs(cur))
            return cur;
        prev = cur;
    }
    throw QuadratureError("periodic_integral: no convergence", prev, kInf);
}

/// as_p(K) = int_{bd K} kappa^{p/(2+p)} <z, N>^{-2(p-1)/(2+p)} d mu.
inline double asp_body(const BodyBoundary2D& K, double p)
{
    const int n = 2;
    if (p == -n)
        throw DomainError("as_p is undefined for p = -n");
    const double ek = p / (n + p);
    const double es = -n * (p - 1.0) / (n + p);
    return periodic_integral([&](double t) {
        const double kappa = K.curvature(t);
        const double h = K.support(t);
        if (!(h > 0.0))
            throw DomainError("as_p: the origin must lie inside the body");
        return std::pow(std::max(kappa, 0.0), ek) * std::pow(h, es) * K.speed(t);
    });
}

// ---------------------------------------------------------------------------
// Identities

/// as(f o A) against |det A|^{-n/(n+2)} as(f), f o A = e^{-psi(A x + t)}.
inline CheckReport check_affine_invariance(const ConvexFunction& psi, const Mat& A, const Vec& t,
                                           const QuadratureSpec& spec, double tol = 5e-3)
{
    const int n = psi.dimension();
    const double det = A.determinant();
    if (det == 0.0 || !std::isfinite(det))
        throw DomainError("affine invariance: A must be invertible");
    const double base = asa(psi, spec);
    const double lhs = asa(precompose_affine(psi, A, t), spec);
    const double rhs = std::pow(std::abs(det), -static_cast<double>(n) / (n + 2)) * base;
    auto r = CheckReport::make("affine_invariance", lhs, rhs, tol);
    r.values = {{"det", det}, {"asa", base}};
    return r;
}

/// as(f1) + as(f2) = as(max(f1, f2)) + as(min(f1, f2)); max(f1, f2) is
/// e^{-min(psi1, psi2)}, which must be convex.
inline CheckReport check_valuation(const ConvexFunction& psi1, const ConvexFunction& psi2,
                                   const QuadratureSpec& spec, double tol = 1e-6)
{
    if (psi1.dimension() != psi2.dimension())
        throw DomainError("valuation: functions of different dimensions");
    const ConvexFunction lower = min_of({psi1, psi2});
    const ConvexFunction upper = max_of({psi1, psi2});
    if (!spot_check_convexity(lower, 8.0))
        throw PreconditionError("valuation: min(psi1, psi2) fails the convexity spot-check");
    const double a1 = asa(psi1, spec), a2 = asa(psi2, spec);
    const double amax = asa(lower, spec), amin = asa(upper, spec);
    auto r = CheckReport::make("valuation", a1 + a2, amax + amin, tol);
    r.values = {{"as_f1", a1}, {"as_f2", a2}, {"as_max", amax}, {"as_min", amin}};
    return r;
}

/// psi(t x) = t^2 psi(x) on random pairs.
inline bool spot_check_two_homogeneous(const ConvexFunction& psi, int pairs = 50, unsigned seed = 2024,
                                       double rel_tol = 1e-8)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0), ut(0.1, 3.0);
    const int n = psi.dimension();
    for (int k = 0; k < pairs; ++k) {
        Vec x(n);
        for (int i = 0; i < n; ++i)
            x[i] = u(rng);
        const double t = ut(rng);
        const double lhs = psi(t * x), rhs = t * t * psi(x);
        if (std::abs(lhs - rhs) > rel_tol * std::max({std::abs(lhs), std::abs(rhs), 1e-300}))
            return false;
    }
    return true;
}

/// as(f) <= (2 pi)^{n/(n+2)} (int e^{-psi})^{n/(n+2)} for 2-homogeneous psi,
/// with equality for quadratic forms.
inline CheckReport check_isoperimetric(const ConvexFunction& psi, const QuadratureSpec& spec, double tol = 2e-3)
{
    if (!spot_check_two_homogeneous(psi))
        throw PreconditionError("isoperimetric: psi fails the 2-homogeneity spot-check");
    const int n = psi.dimension();
    const double e = static_cast<double>(n) / (n + 2);
    const double mass = integral_of_density(psi, spec).value;
    const double lhs = asa(psi, spec);
    const double rhs = std::pow(2.0 * std::numbers::pi, e) * std::pow(mass, e);
    auto r = CheckReport::make("isoperimetric", lhs, rhs, tol, Comparison::at_most);
    r.values = {{"mass", mass}, {"gap", rhs - lhs}, {"relative_gap", (rhs - lhs) / rhs}};
    r.notes.push_back(r.rel_gap <= tol ? "equality case (within tolerance)" : "strict inequality");
    return r;
}

/// Compares as(|x|_K^2 / 2) with c * as_{n/(n+1)}(K) for the two candidate
/// constants c = (2 pi)^{n/2} / vol_n(B) and c = (2 pi)^{n/2} / (n vol_n(B)),
/// and reports which one matches.
inline CheckReport check_gauge_relation(double a, double b, double rotation, const QuadratureSpec& spec,
                                        double tol = 1e-2)
{
    const int n = 2;
    const BodyBoundary2D K = BodyBoundary2D::ellipse(a, b, rotation);
    ConvexFunction psi = gauge_square_half(GaugeBody::ellipse(a, b));
    if (rotation != 0.0) {
        const Mat R = Eigen::Rotation2Dd(-rotation).toRotationMatrix();
        psi = precompose_affine(psi, R, zero_vec(n));
    }
    QuadratureSpec s = spec;
    s.dimension = n;
    const double lhs = asa(psi, s);
    const double asp = asp_body(K, static_cast<double>(n) / (n + 1));
    const double base = std::pow(2.0 * std::numbers::pi, 0.5 * n) / unit_ball_volume(n);
    const double c_without_n = base;
    const double c_with_n = base / n;
    const double ratio_with_n = lhs / (c_with_n * asp);
    const double ratio_without_n = lhs / (c_without_n * asp);
    auto r = CheckReport::make("gauge_relation", lhs, c_with_n * asp, tol);
    r.values = {{"asa", lhs},
                {"as_p", asp},
                {"p", static_cast<double>(n) / (n + 1)},
                {"prefactor_with_n", c_with_n},
                {"prefactor_without_n", c_without_n},
                {"ratio_with_n", ratio_with_n},
                {"ratio_without_n", ratio_without_n}};
    const bool with_ok = std::abs(ratio_with_n - 1.0) <= tol;
    const bool without_ok = std::abs(ratio_without_n - 1.0) <= tol;
    if (with_ok && !without_ok)
        r.notes.push_back("matched prefactor: (2pi)^{n/2}/(n vol_n(B)); the prefactor without n is off by factor " +
                          detail::fmt(1.0 / ratio_without_n) + " (n = " + std::to_string(n) + ")");
    else if (without_ok && !with_ok)
        r.notes.push_back("matched prefactor: (2pi)^{n/2}/vol_n(B)");
    else
        r.notes.push_back("neither candidate prefactor matches uniquely");
    r.notes.push_back("body: " + K.description());
    return r;
}

} // namespace floatlab
