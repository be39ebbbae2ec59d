#include <catch_amalgamated.hpp>

#include <floatlab/convexfn.hpp>
#include <floatlab/function_spec.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace floatlab;
using Catch::Approx;

namespace {

const double kPi = std::numbers::pi;

Mat mat2(double a, double b, double c, double d)
{
    Mat m(2, 2);
    m << a, b, c, d;
    return m;
}

std::vector<ConvexFunction> catalog()
{
    return {
        quadratic_form(1.0),
        quadratic_form(0.5, 1.0),
        quadratic_form(mat2(1.0, 0.3, 0.3, 2.0)),
        gauge_square_half(GaugeBody::disk(1.0)),
        gauge_square_half(GaugeBody::ellipse(2.0, 0.5)),
        gauge_square_half(GaugeBody::regular_polygon(6, 1.0, 0.1)),
        power_norm(3.0, 0.5, 1),
        power_norm(1.5, 1.0, 2),
        lp_norm_square(4.0, 1.0),
        max_of({quadratic_form(1.0), affine_function(vec1(-1.0))}),
        sum_of({quadratic_form(1.0), power_norm(1.0, 1.0, 1)}),
        precompose_affine(quadratic_form(mat2(1.0, 0.0, 0.0, 1.0)), mat2(2.0, 1.0, 0.0, 0.5), vec2(0.3, -0.2)),
        piecewise_1d({{-kInf, -1.0, 0.0, -2.0, 0.0}, {-1.0, 1.0, 1.0, 0.0, 1.0}, {1.0, kInf, 0.0, 2.0, 0.0}}),
    };
}

Vec random_point(std::mt19937_64& rng, int n, double r)
{
    std::uniform_real_distribution<double> u(-r, r);
    Vec x(n);
    for (int i = 0; i < n; ++i)
        x[i] = u(rng);
    return x;
}

} // namespace

TEST_CASE("catalog examples")
{
    CHECK(quadratic_form(1.0)(2.0) == Approx(4.0));
    const auto disk = gauge_square_half(GaugeBody::disk(1.0));
    const Mat H = disk.hessian(vec2(0.7, -1.3));
    CHECK(H(0, 0) == Approx(1.0));
    CHECK(H(1, 1) == Approx(1.0));
    CHECK(H(0, 1) == Approx(0.0).margin(1e-15));
    CHECK(disk(vec2(3.0, 4.0)) == Approx(12.5));
    const auto m = max_of({quadratic_form(1.0), affine_function(vec1(-1.0))});
    CHECK(m(-0.5) == Approx(0.5));
}

TEST_CASE("catalog construction errors")
{
    CHECK_THROWS_AS(quadratic_form(mat2(1.0, 2.0, 2.0, 1.0)), ConstructionError);
    CHECK_THROWS_AS(quadratic_form(-1.0), ConstructionError);
    CHECK_THROWS_AS(power_norm(0.5, 1.0), ConstructionError);
    CHECK_THROWS_AS(piecewise_1d({{-kInf, 0.0, 0.0, 1.0, 0.0}, {0.0, kInf, 0.0, -1.0, 0.0}}), ConstructionError);
    CHECK_THROWS_AS(piecewise_1d({{-kInf, 0.0, 0.0, 0.0, -1.0}, {0.0, kInf, 0.0, 0.0, 1.0}}), ConstructionError);
    CHECK_THROWS_AS(precompose_affine(quadratic_form(1.0), Mat::Zero(1, 1), vec1(0.0)), ConstructionError);
    CHECK_THROWS_AS(max_of({quadratic_form(1.0), gauge_square_half(GaugeBody::disk(1.0))}), ConstructionError);
}

TEST_CASE("gauge of a square polygon")
{
    const auto sq = gauge_square_half(GaugeBody::polygon({vec2(1, 1), vec2(-1, 1), vec2(-1, -1), vec2(1, -1)}));
    // |x|_K = max(|x1|, |x2|)
    CHECK(sq(vec2(0.5, -2.0)) == Approx(2.0));
    CHECK(sq(vec2(3.0, 1.0)) == Approx(4.5));
    CHECK(sq.is_kink(vec2(1.0, 1.0)));
    CHECK_FALSE(sq.is_kink(vec2(1.0, 0.2)));
}

TEST_CASE("convexity spot-check passes on the catalog")
{
    for (const auto& f : catalog()) {
        INFO(f.description());
        CHECK(spot_check_convexity(f, 5.0));
        CHECK(spot_check_hessian(f, 5.0));
    }
}

TEST_CASE("analytic and finite-difference derivatives agree")
{
    std::mt19937_64 rng(4242);
    for (const auto& f : catalog()) {
        if (!f.has_analytic_gradient() || !f.has_analytic_hessian())
            continue;
        INFO(f.description());
        int tested = 0;
        while (tested < 50) {
            const Vec x = random_point(rng, f.dimension(), 3.0);
            // stay clear of kinks and the origin of non-smooth norms
            bool near_kink = x.norm() < 0.1;
            for (double dx : {-0.02, 0.0, 0.02})
                for (double dy : {-0.02, 0.0, 0.02}) {
                    Vec y = x;
                    y[0] += dx;
                    if (f.dimension() == 2)
                        y[1] += dy;
                    near_kink = near_kink || f.is_kink(y);
                }
            const Vec ga = f.gradient(x);
            const Vec gb = fd_gradient(f, x);
            const Mat Ha = f.hessian(x);
            const Mat Hb = fd_hessian(f, x, 1e-4);
            // piecewise functions: compare only away from breakpoints
            const bool smooth_here = (fd_hessian(f, x, 1e-3) - Hb).norm() < 1e-3 * (1.0 + Hb.norm());
            if (near_kink || !smooth_here)
                continue;
            ++tested;
            CHECK((ga - gb).norm() <= 1e-5 * (1.0 + ga.norm()));
            CHECK((Ha - Hb).norm() <= 1e-5 * (1.0 + Ha.norm()));
        }
    }
}

TEST_CASE("fit_coercive_minorant")
{
    SECTION("half parabola: minorant respects completing the square")
    {
        const auto m = fit_coercive_minorant(quadratic_form(0.5));
        CHECK(m.gamma > 0.0);
        CHECK(m.beta <= -m.gamma * m.gamma / 2.0);
    }
    SECTION("absolute value")
    {
        const auto m = fit_coercive_minorant(power_norm(1.0, 1.0));
        CHECK(m.gamma <= 1.0);
        CHECK(m.gamma > 0.0);
        CHECK(m.beta <= 0.0);
    }
    SECTION("sublinear growth is rejected")
    {
        ConvexFunction::Parts p;
        p.dimension = 1;
        p.value = [](const Vec& x) { return std::log1p(x[0] * x[0]); };
        CHECK_THROWS_AS(fit_coercive_minorant(ConvexFunction(p)), NotCoerciveError);
    }
    SECTION("affine functions are rejected")
    {
        CHECK_THROWS_AS(fit_coercive_minorant(affine_function(vec1(1.0))), NotCoerciveError);
    }
    SECTION("fitted minorants hold on the catalog")
    {
        for (const auto& f : catalog()) {
            INFO(f.description());
            const auto m = fit_coercive_minorant(f);
            const double R = truncation_radius(f, 1e-10);
            CHECK(spot_check_minorant(f, m, 2.0 * R));
            if (f.minorant())
                CHECK(spot_check_minorant(f, *f.minorant(), 2.0 * R));
        }
    }
}

TEST_CASE("truncation_radius")
{
    const auto half = quadratic_form(0.5);
    const double r10 = truncation_radius(half, 1e-10);
    CHECK(r10 <= 16.0);
    CHECK(truncation_radius(half, 1e-3) < r10);

    ConvexFunction::Parts p = power_norm(1.0, 1.0).parts();
    p.lower_bound = LinearMinorant{1.0, 0.0};
    const ConvexFunction abs1(p);
    const double r = truncation_radius(abs1, std::exp(-20.0));
    // 2 e^{-R} = e^{-20}
    CHECK(r == Approx(20.0 + std::log(2.0)).epsilon(1e-9));
    CHECK(minorant_tail_bound({1.0, 0.0}, 1, r) <= std::exp(-20.0) * (1.0 + 1e-12));
}

TEST_CASE("integral_of_density examples")
{
    QuadratureSpec spec;
    CHECK(std::abs(integral_of_density(quadratic_form(0.5), spec).value - std::sqrt(2.0 * kPi)) < 1e-5);
    CHECK(std::abs(integral_of_density(quadratic_form(1.0), spec).value - std::sqrt(kPi)) < 1e-5);
    QuadratureSpec s2;
    s2.dimension = 2;
    s2.abs_tol = 1e-8;
    s2.rel_tol = 1e-8;
    CHECK(std::abs(integral_of_density(gauge_square_half(GaugeBody::disk(1.0)), s2).value - 2.0 * kPi) < 1e-4);
}

TEST_CASE("integral_of_density is invariant under unimodular precomposition")
{
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    QuadratureSpec spec;
    spec.dimension = 2;
    spec.abs_tol = 1e-7;
    spec.rel_tol = 1e-7;
    const auto psi = quadratic_form(mat2(1.0, 0.2, 0.2, 0.5));
    const double base = integral_of_density(psi, spec).value;
    for (int k = 0; k < 5; ++k) {
        // shear times rotation: determinant one
        const double s = u(rng), t = kPi * u(rng);
        Mat A = mat2(1.0, s, 0.0, 1.0) * mat2(std::cos(t), -std::sin(t), std::sin(t), std::cos(t));
        const auto g = precompose_affine(psi, A, vec2(u(rng), u(rng)));
        CHECK(g.affine_determinant() == Approx(1.0));
        CHECK(integral_of_density(g, spec).value == Approx(base).epsilon(2e-3));
    }
}

TEST_CASE("gradient_weighted_integral dominates the density integral")
{
    QuadratureSpec spec;
    for (const auto& f : catalog()) {
        if (f.dimension() != 1)
            continue;
        INFO(f.description());
        const double a = integral_of_density(f, spec).value;
        const double b = gradient_weighted_integral(f, spec).value;
        CHECK(std::isfinite(b));
        CHECK(b >= a - 1e-8);
    }
    // independent oracle: Simpson on [-14, 14]
    auto w = [](double x) { return std::exp(-0.5 * x * x) * std::sqrt(1.0 + x * x); };
    double s = 0.0;
    const int n = 40000;
    const double h = 28.0 / n;
    for (int i = 0; i <= n; ++i)
        s += (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0)) * w(-14.0 + i * h);
    s *= h / 3.0;
    CHECK(gradient_weighted_integral(quadratic_form(0.5), spec).value == Approx(s).epsilon(1e-8));
}

TEST_CASE("function spec parser")
{
    const auto q = parse_function("quad(0.5)");
    CHECK(q.dimension() == 1);
    CHECK(q(2.0) == Approx(2.0));

    const auto q2 = parse_function(" quad(1, 0.5, 2) + 3 ");
    CHECK(q2.dimension() == 2);
    CHECK(q2(vec2(1.0, 1.0)) == Approx(1.0 + 1.0 + 2.0 + 3.0));

    const auto e = parse_function("halfsq-ellipse(2,1)");
    CHECK(e(vec2(2.0, 0.0)) == Approx(0.5));
    CHECK(e(vec2(0.0, 1.0)) == Approx(0.5));

    const auto m = parse_function("max(quad(1),lin(-1))");
    CHECK(m(-0.5) == Approx(0.5));
    CHECK(m(2.0) == Approx(4.0));

    const auto pn = parse_function("sum(pownorm(1,1),quad(1,0,1))");
    CHECK(pn.dimension() == 2);
    CHECK(pn(vec2(3.0, 4.0)) == Approx(5.0 + 25.0));

    const auto af = parse_function("affine(quad(1,0,1); 2,0,0,1; 1,0)");
    CHECK(af(vec2(1.0, 1.0)) == Approx(9.0 + 1.0));
    CHECK(af.affine_determinant() == Approx(2.0));

    const auto lp = parse_function("lpsq(4,1)");
    CHECK(lp(vec2(1.0, 1.0)) == Approx(std::sqrt(2.0)));

    CHECK(parse_function("pownorm(2,1)").dimension() == 1);

    CHECK_THROWS_AS(parse_function(""), ParseError);
    CHECK_THROWS_AS(parse_function("quad(1"), ParseError);
    CHECK_THROWS_AS(parse_function("cube(1)"), ParseError);
    CHECK_THROWS_AS(parse_function("max(quad(1),quad(1,0,1))"), ParseError);
    CHECK_THROWS_AS(parse_function("quad(-1)"), ConstructionError);
}
