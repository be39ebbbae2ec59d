#pragma once

// Convex potentials psi : R^n -> R (n = 1, 2), a small catalog of
// constructors, coercivity data and the basic integrals of e^{-psi}.

#include <floatlab/errors.hpp>
#include <floatlab/numerics.hpp>

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace floatlab {

/// psi(x) >= gamma * |x| + beta. A coercive minorant has gamma > 0; the
/// composition rules below also carry non-coercive lower bounds (gamma <= 0).
struct LinearMinorant {
    double gamma = 0.0;
    double beta = 0.0;
};

class ConvexFunction {
public:
    using Eval = std::function<double(const Vec&)>;
    using Grad = std::function<Vec(const Vec&)>;
    using Hess = std::function<Mat(const Vec&)>;
    using KinkTest = std::function<bool(const Vec&)>;

    struct Parts {
        int dimension = 1;
        Eval value;
        Grad gradient;
        Hess hessian;
        KinkTest kink;
        std::optional<LinearMinorant> lower_bound;
        Vec minimizer_hint;
        double affine_determinant = 1.0;
        std::string description;
    };

    ConvexFunction() = default;

    explicit ConvexFunction(Parts parts)
    {
        if (parts.dimension != 1 && parts.dimension != 2)
            throw ConstructionError("convex function dimension must be 1 or 2");
        if (!parts.value)
            throw ConstructionError("convex function needs an evaluator");
        if (parts.minimizer_hint.size() != parts.dimension)
            parts.minimizer_hint = zero_vec(parts.dimension);
        impl_ = std::make_shared<const Parts>(std::move(parts));
    }

    int dimension() const { return impl_->dimension; }
    double operator()(const Vec& x) const { return impl_->value(x); }
    double operator()(double x) const { return impl_->value(vec1(x)); }

    bool has_analytic_gradient() const { return static_cast<bool>(impl_->gradient); }
    bool has_analytic_hessian() const { return static_cast<bool>(impl_->hessian); }

    Vec gradient(const Vec& x) const
    {
        if (impl_->gradient)
            return impl_->gradient(x);
        return fd_gradient(*this, x);
    }

    Mat hessian(const Vec& x) const
    {
        if (impl_->hessian)
            return impl_->hessian(x);
        return fd_hessian(*this, x);
    }

    /// True where the graph has more than one supporting normal.
    bool is_kink(const Vec& x) const
    {
        if (impl_->kink)
            return impl_->kink(x);
        const double h = 1e-6;
        for (int i = 0; i < dimension(); ++i) {
            Vec xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double f0 = (*this)(x);
            const double right = ((*this)(xp) - f0) / h;
            const double left = (f0 - (*this)(xm)) / h;
            if (right - left > 1e-3 * (1.0 + std::abs(right) + std::abs(left)))
                return true;
        }
        return false;
    }

    /// Linear lower bound (possibly non-coercive) carried from construction.
    const std::optional<LinearMinorant>& lower_bound() const { return impl_->lower_bound; }

    /// Coercive minorant if one is known analytically.
    std::optional<LinearMinorant> minorant() const
    {
        if (impl_->lower_bound && impl_->lower_bound->gamma > 0.0)
            return impl_->lower_bound;
        return std::nullopt;
    }

    const Vec& minimizer_hint() const { return impl_->minimizer_hint; }
    double affine_determinant() const { return impl_->affine_determinant; }
    const std::string& description() const { return impl_->description; }

    const Parts& parts() const { return *impl_; }

    ConvexFunction with_minorant(LinearMinorant m) const
    {
        Parts p = *impl_;
        p.lower_bound = m;
        return ConvexFunction(std::move(p));
    }

    ConvexFunction with_description(std::string d) const
    {
        Parts p = *impl_;
        p.description = std::move(d);
        return ConvexFunction(std::move(p));
    }

private:
    std::shared_ptr<const Parts> impl_;
};

// ---------------------------------------------------------------------------
// Catalog

namespace detail {

inline void require_same_dimension(const std::vector<ConvexFunction>& fs, const char* who)
{
    if (fs.empty())
        throw ConstructionError(std::string(who) + ": empty list");
    for (const auto& f : fs)
        if (f.dimension() != fs.front().dimension())
            throw ConstructionError(std::string(who) + ": mixed dimensions");
}

inline std::string join_descriptions(const std::vector<ConvexFunction>& fs)
{
    std::string s;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        if (i)
            s += ",";
        s += fs[i].description();
    }
    return s;
}

inline std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

} // namespace detail

/// psi(x) = <A x, x> + shift, A symmetric positive definite.
inline ConvexFunction quadratic_form(const Mat& A, double shift = 0.0)
{
    const int n = static_cast<int>(A.rows());
    if (A.rows() != A.cols() || (n != 1 && n != 2))
        throw ConstructionError("quadratic_form: matrix must be 1x1 or 2x2");
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + A.cwiseAbs().maxCoeff()))
        throw ConstructionError("quadratic_form: matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(A)};
    const double lambda_min = eig.eigenvalues().minCoeff();
    if (!(lambda_min > 0.0))
        throw ConstructionError("quadratic_form: matrix must be positive definite");

    ConvexFunction::Parts p;
    p.dimension = n;
    p.value = [A, shift](const Vec& x) { return x.dot(A * x) + shift; };
    p.gradient = [A](const Vec& x) -> Vec { return 2.0 * (A * x); };
    p.hessian = [A](const Vec&) -> Mat { return 2.0 * A; };
    p.kink = [](const Vec&) { return false; };
    // tangent minorant of lambda r^2 at the radius where lambda r^2 = 16
    const double r0 = 4.0 / std::sqrt(lambda_min);
    p.lower_bound = LinearMinorant{2.0 * lambda_min * r0, shift - lambda_min * r0 * r0};
    std::string d = "quad(" + detail::fmt(A(0, 0));
    if (n == 2)
        d += "," + detail::fmt(A(0, 1)) + "," + detail::fmt(A(1, 1));
    d += ")";
    if (shift != 0.0)
        d += "+" + detail::fmt(shift);
    p.description = d;
    return ConvexFunction(std::move(p));
}

inline ConvexFunction quadratic_form(double a, double shift = 0.0)
{
    Mat A(1, 1);
    A << a;
    return quadratic_form(A, shift);
}

/// psi(x) = <a, x> + c. Convex but not coercive on its own.
inline ConvexFunction affine_function(const Vec& a, double c = 0.0)
{
    ConvexFunction::Parts p;
    p.dimension = static_cast<int>(a.size());
    p.value = [a, c](const Vec& x) { return a.dot(x) + c; };
    p.gradient = [a](const Vec&) -> Vec { return a; };
    const int n = p.dimension;
    p.hessian = [n](const Vec&) -> Mat { return Mat::Zero(n, n); };
    p.kink = [](const Vec&) { return false; };
    p.lower_bound = LinearMinorant{-a.norm(), c};
    std::string d = "lin(" + detail::fmt(a[0]);
    if (n == 2)
        d += "," + detail::fmt(a[1]);
    d += ")";
    if (c != 0.0)
        d += "+" + detail::fmt(c);
    p.description = d;
    return ConvexFunction(std::move(p));
}

/// Centrally symmetric convex body used as a gauge: an axis ellipse
/// (or an interval in 1D), or a symmetric polygon given by its vertices
/// in counter-clockwise order (only half of them need be listed when
/// `symmetric_half` is set).
struct GaugeBody {
    enum class Kind { Ellipse, Polygon };
    Kind kind = Kind::Ellipse;
    Vec semi_axes;             // ellipse: rx[, ry]
    std::vector<Vec> vertices; // polygon, CCW, full list

    static GaugeBody ellipse(double rx, double ry)
    {
        GaugeBody b;
        b.semi_axes = vec2(rx, ry);
        return b;
    }
    static GaugeBody interval(double r)
    {
        GaugeBody b;
        b.semi_axes = vec1(r);
        return b;
    }
    static GaugeBody disk(double r) { return ellipse(r, r); }
    static GaugeBody polygon(std::vector<Vec> ccw_vertices)
    {
        GaugeBody b;
        b.kind = Kind::Polygon;
        b.vertices = std::move(ccw_vertices);
        return b;
    }
    /// Regular 2m-gon with circumradius r.
    static GaugeBody regular_polygon(int sides, double r, double phase = 0.0)
    {
        if (sides < 4 || sides % 2 != 0)
            throw ConstructionError("regular_polygon: need an even number of sides >= 4");
        std::vector<Vec> v;
        for (int i = 0; i < sides; ++i) {
            const double t = phase + 2.0 * std::numbers::pi * i / sides;
            v.push_back(vec2(r * std::cos(t), r * std::sin(t)));
        }
        return polygon(std::move(v));
    }
};

/// psi(x) = |x|_K^2 / 2 with |.|_K the gauge of K.
inline ConvexFunction gauge_square_half(const GaugeBody& body)
{
    ConvexFunction::Parts p;
    if (body.kind == GaugeBody::Kind::Ellipse) {
        const Vec ax = body.semi_axes;
        const int n = static_cast<int>(ax.size());
        if (n != 1 && n != 2)
            throw ConstructionError("gauge_square_half: ellipse needs 1 or 2 semi-axes");
        for (int i = 0; i < n; ++i)
            if (!(ax[i] > 0.0))
                throw ConstructionError("gauge_square_half: semi-axes must be positive");
        Mat A = Mat::Zero(n, n);
        for (int i = 0; i < n; ++i)
            A(i, i) = 0.5 / (ax[i] * ax[i]);
        ConvexFunction q = quadratic_form(A);
        p = q.parts();
        p.description = n == 1 ? "halfsq-ellipse(" + detail::fmt(ax[0]) + ")"
                               : "halfsq-ellipse(" + detail::fmt(ax[0]) + "," + detail::fmt(ax[1]) + ")";
        return ConvexFunction(std::move(p));
    }

    const auto& v = body.vertices;
    if (v.size() < 4 || v.size() % 2 != 0)
        throw ConstructionError("gauge_square_half: polygon needs an even number (>= 4) of vertices");
    for (std::size_t i = 0; i < v.size() / 2; ++i)
        if ((v[i] + v[i + v.size() / 2]).norm() > 1e-9 * (1.0 + v[i].norm()))
            throw ConstructionError("gauge_square_half: polygon must be centrally symmetric");
    // facet normals scaled by 1/support: |x|_K = max_i <x, w_i>
    std::vector<Vec> w;
    double r_max = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec& a = v[i];
        const Vec& b = v[(i + 1) % v.size()];
        const Vec edge = b - a;
        Vec normal = vec2(edge[1], -edge[0]);
        const double len = normal.norm();
        if (!(len > 0.0))
            throw ConstructionError("gauge_square_half: repeated polygon vertex");
        normal /= len;
        const double h = normal.dot(a);
        if (!(h > 0.0))
            throw ConstructionError("gauge_square_half: polygon must be CCW with the origin inside");
        w.push_back(normal / h);
        r_max = std::max(r_max, a.norm());
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec e1 = v[(i + 1) % v.size()] - v[i];
        const Vec e2 = v[(i + 2) % v.size()] - v[(i + 1) % v.size()];
        if (e1[0] * e2[1] - e1[1] * e2[0] < -1e-12)
            throw ConstructionError("gauge_square_half: polygon is not convex");
    }
    auto active = [w](const Vec& x) {
        std::size_t best = 0;
        double val = w[0].dot(x);
        for (std::size_t i = 1; i < w.size(); ++i) {
            const double t = w[i].dot(x);
            if (t > val) {
                val = t;
                best = i;
            }
        }
        return std::pair{best, val};
    };
    p.dimension = 2;
    p.value = [active](const Vec& x) {
        const double g = active(x).second;
        return 0.5 * g * g;
    };
    p.gradient = [active, w](const Vec& x) -> Vec {
        const auto [i, g] = active(x);
        return g * w[i];
    };
    p.hessian = [active, w](const Vec& x) -> Mat {
        const auto [i, g] = active(x);
        (void)g;
        return w[i] * w[i].transpose();
    };
    p.kink = [w](const Vec& x) {
        if (x.norm() == 0.0)
            return true;
        std::vector<double> t;
        for (const auto& wi : w)
            t.push_back(wi.dot(x));
        std::sort(t.begin(), t.end());
        return t[t.size() - 1] - t[t.size() - 2] <= 1e-12 * (1.0 + std::abs(t.back()));
    };
    // |x|_K >= |x| / r_max
    const double lam = 0.5 / (r_max * r_max);
    const double r0 = 4.0 / std::sqrt(lam);
    p.lower_bound = LinearMinorant{2.0 * lam * r0, -lam * r0 * r0};
    p.description = "halfsq-polygon(" + std::to_string(v.size()) + ")";
    return ConvexFunction(std::move(p));
}

/// psi(x) = scale * |x|^p (Euclidean norm), p >= 1.
inline ConvexFunction power_norm(double power, double scale, int dimension = 1)
{
    if (!(power >= 1.0))
        throw ConstructionError("power_norm: exponent must be >= 1");
    if (!(scale > 0.0))
        throw ConstructionError("power_norm: scale must be positive");
    if (dimension != 1 && dimension != 2)
        throw ConstructionError("power_norm: dimension must be 1 or 2");
    const double pw = power, s = scale;
    const int n = dimension;
    ConvexFunction::Parts p;
    p.dimension = n;
    p.value = [pw, s](const Vec& x) { return s * std::pow(x.norm(), pw); };
    p.gradient = [pw, s, n](const Vec& x) -> Vec {
        const double r = x.norm();
        if (r == 0.0)
            return zero_vec(n);
        return s * pw * std::pow(r, pw - 2.0) * x;
    };
    p.hessian = [pw, s, n](const Vec& x) -> Mat {
        const double r = x.norm();
        if (r == 0.0) {
            // undefined for p < 2 (a single point); exact for p >= 2
            if (pw == 2.0)
                return 2.0 * s * Mat::Identity(n, n);
            return Mat::Zero(n, n);
        }
        const Vec u = x / r;
        Mat H = Mat::Identity(n, n) + (pw - 2.0) * u * u.transpose();
        return s * pw * std::pow(r, pw - 2.0) * H;
    };
    p.kink = [pw](const Vec& x) { return pw == 1.0 && x.norm() == 0.0; };
    // Young: r^p >= p r - (p - 1)
    p.lower_bound = LinearMinorant{s * pw, -s * (pw - 1.0)};
    p.description = "pownorm(" + detail::fmt(pw) + "," + detail::fmt(s) + ")";
    return ConvexFunction(std::move(p));
}

/// psi(x) = scale * |x|_q^2 in R^2, q >= 2. 2-homogeneous; a quadratic form
/// only for q = 2.
inline ConvexFunction lp_norm_square(double q, double scale)
{
    if (!(q >= 2.0))
        throw ConstructionError("lp_norm_square: q must be >= 2");
    if (!(scale > 0.0))
        throw ConstructionError("lp_norm_square: scale must be positive");
    ConvexFunction::Parts p;
    p.dimension = 2;
    auto norm_q = [q](const Vec& x) {
        return std::pow(std::pow(std::abs(x[0]), q) + std::pow(std::abs(x[1]), q), 1.0 / q);
    };
    p.value = [norm_q, scale](const Vec& x) {
        const double N = norm_q(x);
        return scale * N * N;
    };
    p.gradient = [norm_q, q, scale](const Vec& x) -> Vec {
        const double N = norm_q(x);
        if (N == 0.0)
            return zero_vec(2);
        Vec g(2);
        for (int i = 0; i < 2; ++i)
            g[i] = 2.0 * scale * std::copysign(std::pow(std::abs(x[i]), q - 1.0), x[i]) * std::pow(N, 2.0 - q);
        return g;
    };
    p.hessian = [norm_q, q, scale](const Vec& x) -> Mat {
        const double N = norm_q(x);
        Mat H = Mat::Zero(2, 2);
        if (N == 0.0)
            return q == 2.0 ? Mat(2.0 * scale * Mat::Identity(2, 2)) : H;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const double si = std::copysign(std::pow(std::abs(x[i]), q - 1.0), x[i]);
                const double sj = std::copysign(std::pow(std::abs(x[j]), q - 1.0), x[j]);
                double v = -(q - 2.0) * si * sj * std::pow(N, 2.0 - 2.0 * q);
                if (i == j)
                    v += (q - 1.0) * std::pow(std::abs(x[i]), q - 2.0) * std::pow(N, 2.0 - q);
                H(i, j) = 2.0 * scale * v;
            }
        return H;
    };
    p.kink = [](const Vec&) { return false; };
    // |x|_q >= 2^{1/q - 1/2} |x| for q >= 2
    const double c = std::pow(2.0, 1.0 / q - 0.5);
    const double lam = scale * c * c;
    const double r0 = 4.0 / std::sqrt(lam);
    p.lower_bound = LinearMinorant{2.0 * lam * r0, -lam * r0 * r0};
    p.description = "lpsq(" + detail::fmt(q) + "," + detail::fmt(scale) + ")";
    return ConvexFunction(std::move(p));
}

namespace detail {

// Index of the active branch: the largest value, smallest index on ties.
inline std::size_t active_branch(const std::vector<ConvexFunction>& fs, const Vec& x, bool want_max)
{
    std::size_t best = 0;
    double val = fs[0](x);
    for (std::size_t i = 1; i < fs.size(); ++i) {
        const double v = fs[i](x);
        if (want_max ? v > val : v < val) {
            val = v;
            best = i;
        }
    }
    return best;
}

inline ConvexFunction branchwise(std::vector<ConvexFunction> fs, bool want_max, const char* who)
{
    require_same_dimension(fs, who);
    ConvexFunction::Parts p;
    p.dimension = fs.front().dimension();
    p.value = [fs, want_max](const Vec& x) {
        double val = fs[0](x);
        for (std::size_t i = 1; i < fs.size(); ++i)
            val = want_max ? std::max(val, fs[i](x)) : std::min(val, fs[i](x));
        return val;
    };
    bool all_grad = true, all_hess = true;
    for (const auto& f : fs) {
        all_grad = all_grad && f.has_analytic_gradient();
        all_hess = all_hess && f.has_analytic_hessian();
    }
    if (all_grad)
        p.gradient = [fs, want_max](const Vec& x) { return fs[active_branch(fs, x, want_max)].gradient(x); };
    if (all_hess)
        p.hessian = [fs, want_max](const Vec& x) { return fs[active_branch(fs, x, want_max)].hessian(x); };
    p.kink = [fs](const Vec& x) {
        // two or more branches tie with different gradients, or a branch kinks
        std::vector<double> v;
        for (const auto& f : fs)
            v.push_back(f(x));
        for (std::size_t i = 0; i < fs.size(); ++i)
            for (std::size_t j = i + 1; j < fs.size(); ++j)
                if (std::abs(v[i] - v[j]) <= 1e-12 * (1.0 + std::abs(v[i])) &&
                    (fs[i].gradient(x) - fs[j].gradient(x)).norm() > 1e-9)
                    return true;
        for (const auto& f : fs)
            if (f.is_kink(x))
                return true;
        return false;
    };
    if (want_max) {
        // max >= each branch: keep the steepest coercive bound
        std::optional<LinearMinorant> best;
        for (const auto& f : fs)
            if (f.lower_bound() && (!best || f.lower_bound()->gamma > best->gamma))
                best = f.lower_bound();
        p.lower_bound = best;
    } else {
        // min >= gamma_min |x| + beta_min
        bool all = true;
        LinearMinorant m{kInf, kInf};
        for (const auto& f : fs) {
            if (!f.lower_bound()) {
                all = false;
                break;
            }
            m.gamma = std::min(m.gamma, f.lower_bound()->gamma);
            m.beta = std::min(m.beta, f.lower_bound()->beta);
        }
        if (all)
            p.lower_bound = m;
    }
    Vec hint = zero_vec(p.dimension);
    for (const auto& f : fs)
        hint += f.minimizer_hint();
    p.minimizer_hint = hint / static_cast<double>(fs.size());
    p.description = std::string(want_max ? "max(" : "min(") + join_descriptions(fs) + ")";
    return ConvexFunction(std::move(p));
}

} // namespace detail

inline ConvexFunction max_of(std::vector<ConvexFunction> fs)
{
    return detail::branchwise(std::move(fs), true, "max_of");
}

/// Pointwise minimum. Only convex in special cases; callers must check.
inline ConvexFunction min_of(std::vector<ConvexFunction> fs)
{
    return detail::branchwise(std::move(fs), false, "min_of");
}

inline ConvexFunction sum_of(std::vector<ConvexFunction> fs)
{
    detail::require_same_dimension(fs, "sum_of");
    ConvexFunction::Parts p;
    p.dimension = fs.front().dimension();
    p.value = [fs](const Vec& x) {
        double s = 0.0;
        for (const auto& f : fs)
            s += f(x);
        return s;
    };
    bool all_grad = true, all_hess = true;
    for (const auto& f : fs) {
        all_grad = all_grad && f.has_analytic_gradient();
        all_hess = all_hess && f.has_analytic_hessian();
    }
    const int n = p.dimension;
    if (all_grad)
        p.gradient = [fs, n](const Vec& x) {
            Vec g = zero_vec(n);
            for (const auto& f : fs)
                g += f.gradient(x);
            return g;
        };
    if (all_hess)
        p.hessian = [fs, n](const Vec& x) {
            Mat H = Mat::Zero(n, n);
            for (const auto& f : fs)
                H += f.hessian(x);
            return H;
        };
    p.kink = [fs](const Vec& x) {
        for (const auto& f : fs)
            if (f.is_kink(x))
                return true;
        return false;
    };
    LinearMinorant m{0.0, 0.0};
    bool all = true;
    for (const auto& f : fs) {
        if (!f.lower_bound()) {
            all = false;
            break;
        }
        m.gamma += f.lower_bound()->gamma;
        m.beta += f.lower_bound()->beta;
    }
    if (all)
        p.lower_bound = m;
    Vec hint = zero_vec(n);
    for (const auto& f : fs)
        hint += f.minimizer_hint();
    p.minimizer_hint = hint / static_cast<double>(fs.size());
    p.description = "sum(" + detail::join_descriptions(fs) + ")";
    return ConvexFunction(std::move(p));
}

/// x -> psi(A x + t). Records det A for invariance checks.
inline ConvexFunction precompose_affine(const ConvexFunction& psi, const Mat& A, const Vec& t)
{
    const int n = psi.dimension();
    if (A.rows() != n || A.cols() != n || t.size() != n)
        throw ConstructionError("precompose_affine: shape mismatch");
    const double det = A.determinant();
    if (!(std::abs(det) > 1e-14))
        throw ConstructionError("precompose_affine: matrix must be invertible");
    ConvexFunction::Parts p;
    p.dimension = n;
    p.value = [psi, A, t](const Vec& x) { return psi(A * x + t); };
    if (psi.has_analytic_gradient())
        p.gradient = [psi, A, t](const Vec& x) -> Vec { return A.transpose() * psi.gradient(A * x + t); };
    if (psi.has_analytic_hessian())
        p.hessian = [psi, A, t](const Vec& x) -> Mat { return A.transpose() * psi.hessian(A * x + t) * A; };
    p.kink = [psi, A, t](const Vec& x) { return psi.is_kink(A * x + t); };
    if (psi.lower_bound()) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(A)};
        const double smin = svd.singularValues().minCoeff();
        const double smax = svd.singularValues().maxCoeff();
        const LinearMinorant m = *psi.lower_bound();
        if (m.gamma > 0.0)
            p.lower_bound = LinearMinorant{m.gamma * smin, m.beta - m.gamma * t.norm()};
        else
            p.lower_bound = LinearMinorant{m.gamma * smax, m.beta + m.gamma * t.norm()};
    }
    p.minimizer_hint = A.inverse() * (psi.minimizer_hint() - t);
    p.affine_determinant = det * psi.affine_determinant();
    std::string mat = detail::fmt(A(0, 0));
    std::string shift = detail::fmt(t[0]);
    if (n == 2) {
        mat += "," + detail::fmt(A(0, 1)) + "," + detail::fmt(A(1, 0)) + "," + detail::fmt(A(1, 1));
        shift += "," + detail::fmt(t[1]);
    }
    p.description = "affine(" + psi.description() + ";" + mat + ";" + shift + ")";
    return ConvexFunction(std::move(p));
}

/// One piece c0 + c1 x + c2 x^2 on [lo, hi] of a 1D piecewise function.
struct QuadraticPiece {
    double lo;
    double hi;
    double c0;
    double c1;
    double c2;

    double value(double x) const { return c0 + x * (c1 + x * c2); }
    double slope(double x) const { return c1 + 2.0 * c2 * x; }
};

/// Continuous convex piecewise-quadratic function of one variable. The
/// first piece must start at -inf and the last end at +inf.
inline ConvexFunction piecewise_1d(std::vector<QuadraticPiece> pieces)
{
    if (pieces.empty())
        throw ConstructionError("piecewise_1d: no pieces");
    if (std::isfinite(pieces.front().lo) || std::isfinite(pieces.back().hi))
        throw ConstructionError("piecewise_1d: pieces must cover the real line");
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        if (pieces[i].c2 < 0.0)
            throw ConstructionError("piecewise_1d: negative curvature piece");
        if (!(pieces[i].lo < pieces[i].hi))
            throw ConstructionError("piecewise_1d: empty piece");
        if (i + 1 < pieces.size()) {
            const double b = pieces[i].hi;
            if (pieces[i + 1].lo != b)
                throw ConstructionError("piecewise_1d: pieces must be contiguous");
            const double left = pieces[i].value(b), right = pieces[i + 1].value(b);
            if (std::abs(left - right) > 1e-9 * (1.0 + std::abs(left)))
                throw ConstructionError("piecewise_1d: discontinuous at breakpoint");
            if (pieces[i].slope(b) > pieces[i + 1].slope(b) + 1e-12)
                throw ConstructionError("piecewise_1d: slopes decrease at a breakpoint (not convex)");
        }
    }
    const QuadraticPiece& first = pieces.front();
    const QuadraticPiece& last = pieces.back();
    const bool left_coercive = first.c2 > 0.0 || first.c1 < 0.0;
    const bool right_coercive = last.c2 > 0.0 || last.c1 > 0.0;
    auto locate = [pieces](double x) -> const QuadraticPiece& {
        std::size_t i = 0;
        while (i + 1 < pieces.size() && x >= pieces[i].hi)
            ++i;
        return pieces[i];
    };
    ConvexFunction::Parts p;
    p.dimension = 1;
    p.value = [locate](const Vec& x) { return locate(x[0]).value(x[0]); };
    p.gradient = [locate](const Vec& x) { return vec1(locate(x[0]).slope(x[0])); };
    p.hessian = [locate](const Vec& x) {
        Mat H(1, 1);
        H << 2.0 * locate(x[0]).c2;
        return H;
    };
    std::vector<double> kinks;
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i)
        if (pieces[i + 1].slope(pieces[i].hi) - pieces[i].slope(pieces[i].hi) > 1e-12)
            kinks.push_back(pieces[i].hi);
    p.kink = [kinks](const Vec& x) {
        for (double k : kinks)
            if (std::abs(x[0] - k) <= 1e-12 * (1.0 + std::abs(k)))
                return true;
        return false;
    };
    if (left_coercive && right_coercive) {
        // the secant minorant is fitted later; record the minimizer location
        double best_x = 0.0, best_v = kInf;
        for (const auto& q : pieces) {
            std::vector<double> cand;
            if (std::isfinite(q.lo))
                cand.push_back(q.lo);
            if (std::isfinite(q.hi))
                cand.push_back(q.hi);
            if (q.c2 > 0.0) {
                const double v = -q.c1 / (2.0 * q.c2);
                if (v >= q.lo && v <= q.hi)
                    cand.push_back(v);
            }
            for (double c : cand)
                if (q.value(c) < best_v) {
                    best_v = q.value(c);
                    best_x = c;
                }
        }
        p.minimizer_hint = vec1(best_x);
    }
    p.description = "piecewise(" + std::to_string(pieces.size()) + ")";
    return ConvexFunction(std::move(p));
}

/// Linear interpolation through (xs[i], ys[i]) with linear rays of the given
/// slopes outside [xs.front(), xs.back()].
inline ConvexFunction piecewise_linear(const std::vector<double>& xs, const std::vector<double>& ys,
                                       double left_slope, double right_slope)
{
    if (xs.size() != ys.size() || xs.empty())
        throw ConstructionError("piecewise_linear: need matching, non-empty breakpoints and values");
    std::vector<QuadraticPiece> pieces;
    auto line_through = [](double lo, double hi, double x0, double y0, double m) {
        return QuadraticPiece{lo, hi, y0 - m * x0, m, 0.0};
    };
    pieces.push_back(line_through(-kInf, xs.front(), xs.front(), ys.front(), left_slope));
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        if (!(xs[i + 1] > xs[i]))
            throw ConstructionError("piecewise_linear: breakpoints must increase");
        const double m = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        pieces.push_back(line_through(xs[i], xs[i + 1], xs[i], ys[i], m));
    }
    pieces.push_back(line_through(xs.back(), kInf, xs.back(), ys.back(), right_slope));
    return piecewise_1d(std::move(pieces));
}

// ---------------------------------------------------------------------------
// Spot checks

/// Random-pair convexity check inside the ball of the given radius.
inline bool spot_check_convexity(const ConvexFunction& psi, double radius, int pairs = 200,
                                 unsigned seed = 12345, double slack = 1e-10)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-radius, radius), lam(0.0, 1.0);
    const int n = psi.dimension();
    for (int k = 0; k < pairs; ++k) {
        Vec x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x[i] = u(rng);
            y[i] = u(rng);
        }
        const double l = lam(rng);
        const double lhs = psi(l * x + (1.0 - l) * y);
        const double rhs = l * psi(x) + (1.0 - l) * psi(y);
        if (lhs > rhs + slack * (1.0 + std::abs(rhs)))
            return false;
    }
    return true;
}

/// psi(x) >= gamma |x| + beta on random samples in the ball of `radius`.
inline bool spot_check_minorant(const ConvexFunction& psi, const LinearMinorant& m, double radius,
                                int samples = 500, unsigned seed = 777)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-radius, radius);
    const int n = psi.dimension();
    for (int k = 0; k < samples; ++k) {
        Vec x(n);
        for (int i = 0; i < n; ++i)
            x[i] = u(rng);
        if (psi(x) < m.gamma * x.norm() + m.beta - 1e-9 * (1.0 + std::abs(psi(x))))
            return false;
    }
    return true;
}

/// Analytic Hessian symmetric positive semidefinite at random samples.
inline bool spot_check_hessian(const ConvexFunction& psi, double radius, int samples = 100, unsigned seed = 99)
{
    if (!psi.has_analytic_hessian())
        return true;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-radius, radius);
    const int n = psi.dimension();
    for (int k = 0; k < samples; ++k) {
        Vec x(n);
        for (int i = 0; i < n; ++i)
            x[i] = u(rng);
        const Mat H = psi.hessian(x);
        const double scale = 1.0 + H.cwiseAbs().maxCoeff();
        if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
            return false;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(H)};
        if (eig.eigenvalues().minCoeff() < -1e-10 * scale)
            return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Coercivity and tails

/// Fits psi(x) >= gamma |x| + beta from radial secant slopes at the probe
/// radius R = 8 (|minimizer| + 1). Secant slopes that decrease along a ray
/// reveal a non-convex or non-coercive input.
inline LinearMinorant fit_coercive_minorant(const ConvexFunction& psi)
{
    const int n = psi.dimension();
    const Vec origin = zero_vec(n);
    const double f0 = psi(origin);
    const double R = 8.0 * (psi.minimizer_hint().norm() + 1.0);
    std::vector<Vec> dirs;
    if (n == 1) {
        dirs = {vec1(1.0), vec1(-1.0)};
    } else {
        for (int k = 0; k < 64; ++k) {
            const double t = 2.0 * std::numbers::pi * k / 64.0;
            dirs.push_back(vec2(std::cos(t), std::sin(t)));
        }
    }
    double gamma = kInf;
    for (const auto& u : dirs) {
        gamma = std::min(gamma, (psi(R * u) - f0) / (2.0 * R));
        double prev = (psi(R * u) - f0) / R;
        for (int k = 1; k <= 6; ++k) {
            const double r = R * std::pow(2.0, k);
            const double s = (psi(r * u) - f0) / r;
            if (s < prev - 1e-9 * (1.0 + std::abs(prev)))
                throw NotCoerciveError("fit_coercive_minorant: radial secant slopes decrease; the function is not "
                                       "convex with linear growth");
            prev = s;
        }
    }
    if (!(gamma > 0.0))
        throw NotCoerciveError("fit_coercive_minorant: no positive linear growth rate");
    auto deficit = [&](const Vec& x) { return psi(x) - gamma * x.norm(); };
    double beta = kInf;
    const int radial = 64;
    for (const auto& u : dirs)
        for (int k = 0; k <= radial; ++k)
            beta = std::min(beta, deficit((R * k / radial) * u));
    // denser validation: more directions and radii out to 4R
    std::vector<Vec> dense = dirs;
    if (n == 2) {
        dense.clear();
        for (int k = 0; k < 256; ++k) {
            const double t = 2.0 * std::numbers::pi * (k + 0.5) / 256.0;
            dense.push_back(vec2(std::cos(t), std::sin(t)));
        }
    }
    for (const auto& u : dense)
        for (int k = 0; k <= 4 * radial; ++k)
            beta = std::min(beta, deficit((4.0 * R * (k + 0.37) / (4 * radial)) * u));
    // margin against the sampling gaps of the convex deficit
    beta -= 1e-6 * (1.0 + std::abs(beta));
    return {gamma, beta};
}

/// The analytic minorant when known, otherwise a fitted one.
inline LinearMinorant coercive_minorant(const ConvexFunction& psi)
{
    if (auto m = psi.minorant())
        return *m;
    return fit_coercive_minorant(psi);
}

/// Upper bound on the integral of e^{-(gamma |x| + beta)} over |x| > R.
inline double minorant_tail_bound(const LinearMinorant& m, int n, double R)
{
    const double g = m.gamma;
    const double base = std::exp(-m.beta - g * R);
    if (n == 1)
        return 2.0 * base / g;
    return 2.0 * std::numbers::pi * base * (R / g + 1.0 / (g * g));
}

/// Smallest radius (doubling, then bisection) with tail bound <= tol.
inline double truncation_radius(const LinearMinorant& m, int n, double tol)
{
    if (!(tol > 0.0))
        throw DomainError("truncation_radius: tolerance must be positive");
    double hi = 1.0;
    while (minorant_tail_bound(m, n, hi) > tol) {
        hi *= 2.0;
        if (hi > 1e8)
            throw DomainError("truncation_radius: tail bound does not decay");
    }
    double lo = hi / 2.0;
    if (minorant_tail_bound(m, n, lo) <= tol)
        return lo; // hi == 1 case
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (minorant_tail_bound(m, n, mid) <= tol)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

inline double truncation_radius(const ConvexFunction& psi, double tol)
{
    return truncation_radius(coercive_minorant(psi), psi.dimension(), tol);
}

/// Radius of the integration ball implied by a quadrature spec.
inline double effective_radius(const ConvexFunction& psi, const QuadratureSpec& spec)
{
    if (!spec.auto_truncation)
        return spec.truncation_radius;
    return truncation_radius(psi, spec.abs_tol / 10.0);
}

struct IntegralEstimate {
    double value = 0.0;
    double error = 0.0;    // quadrature error plus certified tail
    double radius = 0.0;   // truncation radius used
    double excluded = 0.0; // measure or mass left out deliberately
    bool converged = true;
};

/// Integral of e^{-psi} over R^n (quadrature on the truncation ball plus a
/// certified tail bound in the error).
inline IntegralEstimate integral_of_density(const ConvexFunction& psi, const QuadratureSpec& spec)
{
    spec.validate();
    const LinearMinorant m = coercive_minorant(psi);
    const double R = effective_radius(psi, spec);
    auto g = [&](const Vec& x) { return std::exp(-psi(x)); };
    const auto r = integrate_ball(g, psi.dimension(), R, spec);
    if (!r.converged)
        throw QuadratureError("integral_of_density: subdivision budget exhausted", r.value, r.error);
    return {r.value, r.error + minorant_tail_bound(m, psi.dimension(), R), R, 0.0, true};
}

/// Integral of e^{-psi} (1 + |grad psi|^2)^{1/2}.
inline IntegralEstimate gradient_weighted_integral(const ConvexFunction& psi, const QuadratureSpec& spec)
{
    spec.validate();
    const double R = effective_radius(psi, spec);
    auto g = [&](const Vec& x) { return std::exp(-psi(x)) * std::sqrt(1.0 + psi.gradient(x).squaredNorm()); };
    const auto r = integrate_ball(g, psi.dimension(), R, spec);
    if (!r.converged)
        throw QuadratureError("gradient_weighted_integral: subdivision budget exhausted", r.value, r.error);
    return {r.value, r.error, R, 0.0, true};
}

} // namespace floatlab
