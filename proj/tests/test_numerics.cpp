#include <catch_amalgamated.hpp>

#include <floatlab/numerics.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace floatlab;
using Catch::Approx;

namespace {

// Composite Simpson on a fine mesh: an independent reference rule.
template <class F>
double simpson(F f, double a, double b, int n = 20000)
{
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i)
        s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

} // namespace

TEST_CASE("integrate: constant on the unit interval")
{
    QuadratureSpec spec;
    CHECK(integrate([](const Vec&) { return 1.0; }, Region::interval(0.0, 1.0), spec) == Approx(1.0).margin(1e-14));
}

TEST_CASE("integrate: Gaussian on [-12, 12]")
{
    QuadratureSpec spec;
    auto g = [](const Vec& x) { return std::exp(-0.5 * x[0] * x[0]); };
    const double v = integrate(g, Region::interval(-12.0, 12.0), spec);
    const double ref = simpson([](double x) { return std::exp(-0.5 * x * x); }, -12.0, 12.0);
    CHECK(std::abs(v - 2.506628) < 1e-6);
    CHECK(std::abs(v - ref) < 1e-9);
    CHECK(std::abs(v - std::sqrt(2.0 * std::numbers::pi)) < 1e-9);
}

TEST_CASE("integrate: 2D Gaussian over a ball of radius 12")
{
    QuadratureSpec spec;
    spec.dimension = 2;
    spec.abs_tol = 1e-8;
    spec.rel_tol = 1e-8;
    auto g = [](const Vec& x) { return std::exp(-0.5 * x.squaredNorm()); };
    const double v = integrate(g, Region::ball(2, 12.0), spec);
    // polar closed form: 2 pi (1 - e^{-R^2/2})
    const double ref = 2.0 * std::numbers::pi * (1.0 - std::exp(-72.0));
    CHECK(std::abs(v - 6.283185) < 1e-5);
    CHECK(std::abs(v - ref) < 1e-5);
}

TEST_CASE("integrate: exhausted budget carries the estimate")
{
    QuadratureSpec spec;
    spec.max_subdivisions = 2;
    spec.abs_tol = 1e-14;
    spec.rel_tol = 1e-14;
    auto g = [](const Vec& x) { return std::sqrt(std::abs(x[0] - 0.3)); };
    try {
        integrate(g, Region::interval(0.0, 1.0), spec);
        FAIL("expected QuadratureError");
    } catch (const QuadratureError& e) {
        const double exact = (2.0 / 3.0) * (std::pow(0.3, 1.5) + std::pow(0.7, 1.5));
        CHECK(std::abs(e.estimate() - exact) < 1e-2);
        CHECK(e.error_bound() > 0.0);
    }
}

TEST_CASE("integrate: monotone in the integrand")
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    QuadratureSpec spec;
    for (int k = 0; k < 50; ++k) {
        const double s1 = u(rng), s2 = s1 + u(rng);
        // e^{-s2 x^2} <= e^{-s1 x^2}
        auto g1 = [s2](const Vec& x) { return std::exp(-s2 * x[0] * x[0]); };
        auto g2 = [s1](const Vec& x) { return std::exp(-s1 * x[0] * x[0]); };
        const double a = integrate(g1, Region::interval(-6.0, 6.0), spec);
        const double b = integrate(g2, Region::interval(-6.0, 6.0), spec);
        CHECK(a <= b + 2.0 * spec.abs_tol);
    }
}

TEST_CASE("find_root_monotone: examples")
{
    CHECK(find_root_monotone([](double t) { return t - 0.5; }, 0.0, 1.0, 1e-12) == Approx(0.5).margin(1e-12));
    CHECK(find_root_monotone([](double t) { return t * t * t - 2.0; }, 1.0, 2.0, 1e-12) ==
          Approx(std::cbrt(2.0)).margin(1e-10));
    CHECK(std::abs(find_root_monotone([](double t) { return t * t * t - 2.0; }, 1.0, 2.0, 1e-12) - 1.259921) < 1e-6);
    CHECK_THROWS_AS(find_root_monotone([](double t) { return t; }, 1.0, 2.0, 1e-12), BracketError);
}

TEST_CASE("find_root_monotone: result stays inside the bracket")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int k = 0; k < 200; ++k) {
        double lo = u(rng), hi = u(rng);
        if (lo > hi)
            std::swap(lo, hi);
        const double root = lo + (hi - lo) * (u(rng) + 5.0) / 10.0;
        const double p = 1.0 + std::abs(u(rng));
        auto g = [&](double t) { return std::copysign(std::pow(std::abs(t - root), p), t - root); };
        const double r = find_root_monotone(g, lo, hi, 1e-10);
        CHECK(r >= lo);
        CHECK(r <= hi);
        CHECK((std::abs(g(r)) <= 1e-10 || std::abs(r - root) < 1e-9));
    }
}

TEST_CASE("maximize: examples")
{
    SearchSpec spec;
    spec.half_width = 1.0;
    auto r1 = maximize([](const Vec& a) { return -a[0] * a[0]; }, 1, spec);
    CHECK(std::abs(r1.argmax[0]) < 1e-9);
    CHECK(r1.value == Approx(0.0).margin(1e-15));
    CHECK_FALSE(r1.boundary_hit);

    auto r2 = maximize([](const Vec& a) { return -(a[0] - 0.3) * (a[0] - 0.3); }, 1, spec);
    CHECK(std::abs(r2.argmax[0] - 0.3) < 1e-6);
    CHECK(std::abs(r2.value) < 1e-12);
    CHECK_FALSE(r2.boundary_hit);

    auto r3 = maximize([](const Vec& a) { return a[0]; }, 1, spec);
    CHECK(r3.boundary_hit);
    CHECK(r3.argmax[0] == Approx(1.0));
}

TEST_CASE("maximize: 2D concave quadratic")
{
    SearchSpec spec;
    spec.coarse_count = 7;
    spec.refinement_iterations = 4;
    auto g = [](const Vec& a) { return -(a[0] - 0.2) * (a[0] - 0.2) - 2.0 * (a[1] + 0.4) * (a[1] + 0.4); };
    auto r = maximize(g, 2, spec);
    CHECK(std::abs(r.argmax[0] - 0.2) < 1e-6);
    CHECK(std::abs(r.argmax[1] + 0.4) < 1e-6);
    CHECK_FALSE(r.boundary_hit);
}

TEST_CASE("maximize: first grid index wins ties")
{
    SearchSpec spec;
    spec.refinement_iterations = 0;
    auto r = maximize([](const Vec&) { return 1.0; }, 1, spec);
    CHECK(r.argmax[0] == Approx(-1.0));
}

TEST_CASE("finite differences: examples")
{
    auto half_sq = [](const Vec& x) { return 0.5 * x[0] * x[0]; };
    CHECK(fd_gradient(half_sq, vec1(3.0))[0] == Approx(3.0).epsilon(1e-10));
    CHECK(fd_hessian(half_sq, vec1(3.0))(0, 0) == Approx(1.0).epsilon(1e-8));

    auto q = [](const Vec& x) { return x[0] * x[0] + x[0] * x[1] + x[1] * x[1]; };
    const Vec g = fd_gradient(q, vec2(1.0, 1.0));
    CHECK(g[0] == Approx(3.0).epsilon(1e-10));
    CHECK(g[1] == Approx(3.0).epsilon(1e-10));
    const Mat H = fd_hessian(q, vec2(1.0, 1.0));
    CHECK(H(0, 0) == Approx(2.0).epsilon(1e-8));
    CHECK(H(0, 1) == Approx(1.0).epsilon(1e-8));
    CHECK(H(1, 1) == Approx(2.0).epsilon(1e-8));

    auto e = [](const Vec& x) { return std::exp(x[0]); };
    CHECK(std::abs(fd_hessian(e, vec1(0.0), 1e-4)(0, 0) - 1.0) < 1e-6);
}

TEST_CASE("finite differences: quadratics match analytic values, Hessian exactly symmetric")
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 100; ++k) {
        const double a = 1.0 + std::abs(u(rng)), b = u(rng) * 0.4, c = 1.0 + std::abs(u(rng));
        const double l1 = u(rng), l2 = u(rng);
        auto f = [&](const Vec& x) {
            return a * x[0] * x[0] + 2.0 * b * x[0] * x[1] + c * x[1] * x[1] + l1 * x[0] + l2 * x[1];
        };
        const Vec x = vec2(u(rng), u(rng));
        const Vec g = fd_gradient(f, x);
        const Vec ga = vec2(2.0 * a * x[0] + 2.0 * b * x[1] + l1, 2.0 * b * x[0] + 2.0 * c * x[1] + l2);
        CHECK((g - ga).norm() <= 1e-8 * (1.0 + ga.norm()));
        const Mat H = fd_hessian(f, x);
        CHECK(H(0, 1) == H(1, 0));
        CHECK(std::abs(H(0, 0) - 2.0 * a) <= 1e-8 * 2.0 * a);
        CHECK(std::abs(H(0, 1) - 2.0 * b) <= 1e-8 * (1.0 + std::abs(b)));
        CHECK(std::abs(H(1, 1) - 2.0 * c) <= 1e-8 * 2.0 * c);
    }
}

TEST_CASE("spec validation")
{
    QuadratureSpec q;
    q.abs_tol = 0.0;
    CHECK_THROWS_AS(q.validate(), DomainError);
    SearchSpec s;
    s.coarse_count = 2;
    CHECK_THROWS_AS(s.validate(), DomainError);
}

TEST_CASE("unit ball volumes")
{
    CHECK(unit_ball_volume(1) == Approx(2.0));
    CHECK(unit_ball_volume(2) == Approx(std::numbers::pi));
}
