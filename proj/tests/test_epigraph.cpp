#include <catch_amalgamated.hpp>

#include <floatlab/epigraph.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace floatlab;
using Catch::Approx;

namespace {

const double kPi = std::numbers::pi;

// int (t - q x^2 / 2)_+ dx
double parabola_cap(double t, double q)
{
    return t <= 0.0 ? 0.0 : (4.0 / 3.0) * t * std::sqrt(2.0 * t / q);
}

// Area of the circular segment of height h in the unit disk.
double segment_area(double h)
{
    const double d = 1.0 - h;
    return std::acos(d) - d * std::sqrt(1.0 - d * d);
}

Mat mat2(double a, double b, double c, double d)
{
    Mat m(2, 2);
    m << a, b, c, d;
    return m;
}

} // namespace

TEST_CASE("cap_volume: parabola examples")
{
    QuadratureSpec spec;
    const auto psi = quadratic_form(0.5);
    CHECK(cap_volume(psi, {vec1(0.0), 0.5}, spec) == Approx(2.0 / 3.0).epsilon(1e-10));
    CHECK(std::abs(cap_volume(psi, {vec1(0.0), 0.5}, spec) - 0.666667) < 1e-6);
    CHECK(cap_volume(psi, {vec1(1.0), 0.0}, spec) == Approx(2.0 / 3.0).epsilon(1e-10));
    CHECK(cap_volume(psi, {vec1(0.7), -5.0}, spec) == 0.0);
}

TEST_CASE("cap_volume: paraboloid and ellipse potentials")
{
    QuadratureSpec spec;
    const auto psi = gauge_square_half(GaugeBody::disk(1.0));
    // int (b - |x|^2/2)_+ = pi b^2
    CHECK(cap_volume(psi, {vec2(0.0, 0.0), 0.3}, spec) == Approx(kPi * 0.09).epsilon(1e-10));
    // tilted cut: depends on b + |a|^2/2
    CHECK(cap_volume(psi, {vec2(0.3, -0.4), 0.175}, spec) == Approx(kPi * 0.09).epsilon(1e-10));
    // ellipse potential: area scales by rx ry
    const auto ell = gauge_square_half(GaugeBody::ellipse(2.0, 0.5));
    CHECK(cap_volume(ell, {vec2(0.0, 0.0), 0.3}, spec) == Approx(kPi * 0.09).epsilon(1e-10));
}

TEST_CASE("cap_volume: parabola family depends on b + a^2/(2q)")
{
    std::mt19937_64 rng(1001);
    std::uniform_real_distribution<double> ua(-2.0, 2.0), ub(-1.0, 1.0), uq(0.2, 4.0);
    QuadratureSpec spec;
    for (int k = 0; k < 100; ++k) {
        const double a = ua(rng), b = ub(rng), q = uq(rng);
        const double t = b + a * a / (2.0 * q);
        const double v = cap_volume(quadratic_form(0.5 * q), {vec1(a), b}, spec);
        CHECK(v == Approx(parabola_cap(t, q)).epsilon(1e-9).margin(1e-14));
    }
}

TEST_CASE("cap_volume: monotone and continuous in the offset")
{
    const auto psi = max_of({quadratic_form(1.0), affine_function(vec1(-1.0))});
    CutSection cs(psi, vec1(0.3));
    double prev = 0.0;
    for (int i = 1; i <= 60; ++i) {
        const double b = cs.floor() + 0.02 * i;
        const double v = cs.volume(b);
        CHECK(v > prev);
        prev = v;
    }
    // d V / d b = wet area
    const double b = cs.floor() + 0.4, h = 1e-6;
    const double dv = (cs.volume(b + h) - cs.volume(b - h)) / (2.0 * h);
    CHECK(dv == Approx(cs.evaluate(b).area).epsilon(1e-6));
}

TEST_CASE("cap_volume: wet region outside the ball raises")
{
    QuadratureSpec spec;
    spec.truncation_radius = 3.0;
    CHECK_THROWS_AS(cap_volume(quadratic_form(0.5), {vec1(0.0), 10.0}, spec), RegionError);
}

TEST_CASE("wet centroid of a shifted paraboloid cut")
{
    const auto psi = gauge_square_half(GaugeBody::disk(1.0));
    CutSection cs(psi, vec2(0.4, -0.2));
    const auto w = cs.evaluate(cs.floor() + 0.1);
    CHECK(w.centroid[0] == Approx(0.4).epsilon(1e-9));
    CHECK(w.centroid[1] == Approx(-0.2).epsilon(1e-9));
    CHECK(w.area == Approx(2.0 * kPi * 0.1).epsilon(1e-10));
}

TEST_CASE("ellipsoid caps: examples")
{
    const EllipsoidSpec disk({1.0, 1.0});
    CHECK(ellipsoid_cap_volume(disk, 0.1) == Approx(segment_area(0.1)).epsilon(1e-10));
    CHECK(std::abs(ellipsoid_cap_volume(disk, 0.1) - 0.058726) < 1e-6);
    CHECK(ellipsoid_cap_volume(disk, 1.0) == Approx(kPi / 2.0).epsilon(1e-10));

    const auto b = ellipsoid_cap_bounds(disk, 0.1);
    CHECK(b.upper == Approx(0.059629).epsilon(1e-5));
    CHECK(b.lower == Approx(0.059629 * std::sqrt(0.95)).epsilon(1e-5));
    CHECK(b.lower <= 0.058726);
    CHECK(0.058726 <= b.upper);

    const auto bb = ball_cap_bounds(2, 1.0, 0.1);
    CHECK(bb.lower == Approx(0.056647).epsilon(1e-5));
    CHECK(bb.upper == Approx(0.059629).epsilon(1e-5));

    CHECK_THROWS_AS(ellipsoid_cap_volume(disk, 1.5), DomainError);
    CHECK_THROWS_AS(ellipsoid_cap_bounds(disk, -0.1), DomainError);
}

TEST_CASE("ellipsoid caps: sandwich on random configurations")
{
    std::mt19937_64 rng(8080);
    std::uniform_real_distribution<double> ua(0.2, 3.0), uh(0.0, 1.0);
    std::uniform_int_distribution<int> um(1, 4);
    for (int k = 0; k < 200; ++k) {
        const int m = um(rng);
        std::vector<double> axes;
        for (int i = 0; i < m; ++i)
            axes.push_back(ua(rng));
        const EllipsoidSpec e(axes);
        const double h = uh(rng) * e.last();
        const double v = ellipsoid_cap_volume(e, h);
        const auto b = ellipsoid_cap_bounds(e, h);
        CHECK(b.lower <= v * (1.0 + 1e-12));
        CHECK(v <= b.upper * (1.0 + 1e-12));
    }
    // 3-ball: cap volume pi h^2 (3r - h) / 3
    const EllipsoidSpec ball3({1.0, 1.0, 1.0});
    CHECK(ellipsoid_cap_volume(ball3, 0.3) == Approx(kPi * 0.09 * 2.7 / 3.0).epsilon(1e-10));
}

TEST_CASE("graph curvature and normal: examples")
{
    const auto half = quadratic_form(0.5);
    CHECK(graph_curvature(half, vec1(0.0)) == Approx(1.0));
    CHECK(graph_normal_component(half, vec1(0.0)) == Approx(1.0));
    CHECK(graph_curvature(half, vec1(1.0)) == Approx(std::pow(2.0, -1.5)));
    CHECK(graph_normal_component(half, vec1(1.0)) == Approx(std::pow(2.0, -0.5)));
    const auto disk = gauge_square_half(GaugeBody::disk(1.0));
    const Vec x = vec2(0.6, -1.1);
    CHECK(graph_curvature(disk, x) == Approx(std::pow(1.0 + x.squaredNorm(), -2.0)));
}

TEST_CASE("curvature clamp policy")
{
    ConvexFunction::Parts p;
    p.dimension = 1;
    p.value = [](const Vec& x) { return -x[0] * x[0]; };
    p.hessian = [](const Vec&) { Mat H(1, 1); H << -2.0; return H; };
    CHECK_THROWS_AS(graph_curvature(ConvexFunction(p), vec1(0.0)), ConvexityError);
    p.hessian = [](const Vec&) { Mat H(1, 1); H << -1e-12; return H; };
    CHECK(graph_curvature(ConvexFunction(p), vec1(0.0)) == 0.0);
}

TEST_CASE("Hessian determinant under linear precomposition")
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const double a = 1.0 + std::abs(u(rng)), b = 0.5 * u(rng), c = 1.0 + std::abs(u(rng));
        const auto psi = quadratic_form(mat2(a, b, b, c));
        const Mat A = mat2(1.0 + u(rng), u(rng), u(rng), 1.0 + u(rng));
        if (std::abs(A.determinant()) < 0.1)
            continue;
        const auto g = precompose_affine(psi, A, vec2(u(rng), u(rng)));
        const Vec x = vec2(u(rng), u(rng));
        const double lhs = hessian_determinant(g, x);
        const double rhs = A.determinant() * A.determinant() * hessian_determinant(psi, A * x);
        CHECK(lhs == Approx(rhs).epsilon(1e-6));
    }
}

TEST_CASE("rolling function: examples")
{
    const double tol = 1e-6;
    CHECK(rolling_function(quadratic_form(0.5), vec1(0.0), tol) == Approx(1.0).margin(2e-6));
    CHECK(rolling_function(quadratic_form(1.0), vec1(0.0), tol) == Approx(0.5).margin(2e-6));
    const auto kinked = max_of({quadratic_form(1.0), affine_function(vec1(-1.0))});
    CHECK(rolling_function(kinked, vec1(0.0), tol) == 0.0);
    CHECK(rolling_function(kinked, vec1(-1.0), tol) == 0.0);
    CHECK(rolling_function(gauge_square_half(GaugeBody::disk(1.0)), vec2(0.0, 0.0), tol) == Approx(1.0).margin(2e-6));
}

TEST_CASE("rolling function: parabola radius is sqrt(1 + x^2)")
{
    const auto psi = quadratic_form(0.5);
    for (double x : {-3.0, -1.0, 0.25, 0.5, 2.0})
        CHECK(rolling_function(psi, vec1(x), 1e-7) == Approx(std::sqrt(1.0 + x * x)).margin(1e-6));
}

TEST_CASE("rolling function: grid oracle for the parabola")
{
    // An independent containment test on a fine uniform grid.
    const auto psi = quadratic_form(0.5);
    for (double x : {-1.5, -0.4, 0.8, 2.0}) {
        const double r = rolling_function(psi, vec1(x), 1e-5);
        for (double rho : {0.98 * r, 1.02 * r}) {
            const double s = std::sqrt(1.0 + x * x);
            const double cx = x - rho * x / s, cy = 0.5 * x * x + rho / s;
            bool inside = true;
            for (int i = 0; i <= 20000; ++i) {
                const double t = cx - rho + 2.0 * rho * i / 20000.0;
                const double low = cy - std::sqrt(std::max(0.0, rho * rho - (t - cx) * (t - cx)));
                if (low < 0.5 * t * t - 1e-12)
                    inside = false;
            }
            CHECK(inside == (rho < r));
        }
    }
}

TEST_CASE("rolling function is bounded by the curvature radius")
{
    std::mt19937_64 rng(66);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const std::vector<ConvexFunction> fs = {quadratic_form(0.5), quadratic_form(mat2(1.0, 0.2, 0.2, 0.4)),
                                            power_norm(4.0, 0.25, 1), lp_norm_square(4.0, 1.0)};
    for (const auto& f : fs) {
        for (int k = 0; k < 8; ++k) {
            Vec x(f.dimension());
            for (int i = 0; i < f.dimension(); ++i)
                x[i] = u(rng);
            const int n = f.dimension();
            const double det = hessian_determinant(f, x);
            if (det <= 1e-6)
                continue;
            const double bound = std::pow(1.0 + f.gradient(x).squaredNorm(), (n + 2.0) / (2.0 * n)) / std::pow(det, 1.0 / n);
            CHECK(rolling_function(f, x, 1e-5) <= bound * (1.0 + 1e-4));
        }
    }
}

TEST_CASE("rolling-weighted integral")
{
    QuadratureSpec spec;
    spec.abs_tol = 1e-7;
    spec.rel_tol = 1e-7;
    const auto psi = quadratic_form(0.5);
    const double gw = gradient_weighted_integral(psi, spec).value;
    const auto r0 = rolling_weighted_integral(psi, 0.0, spec);
    CHECK(r0.value == Approx(gw).epsilon(1e-7));
    // the largest ball touching the parabola at x is centred on the axis:
    // r(x) = sqrt(1 + x^2) >= 1, so the weighted integral decreases in alpha
    auto oracle = [](double alpha) {
        double s = 0.0;
        const int n = 40000;
        const double h = 28.0 / n;
        for (int i = 0; i <= n; ++i) {
            const double x = -14.0 + i * h;
            s += (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0)) * std::exp(-0.5 * x * x) *
                 std::pow(1.0 + x * x, 0.5 * (1.0 - alpha));
        }
        return s * h / 3.0;
    };
    const auto r1 = rolling_weighted_integral(psi, 1.0 / 3.0, spec);
    const auto r2 = rolling_weighted_integral(psi, 2.0 / 3.0, spec);
    CHECK(std::isfinite(r1.value));
    CHECK(r1.value == Approx(oracle(1.0 / 3.0)).epsilon(1e-5));
    CHECK(r2.value == Approx(oracle(2.0 / 3.0)).epsilon(1e-5));
    CHECK(r1.value <= gw + 1e-6);
    CHECK(r2.value <= r1.value + 1e-6);
    CHECK(r1.skipped_bound == 0.0);
    CHECK_THROWS_AS(rolling_weighted_integral(psi, 1.0, spec), DomainError);
}
