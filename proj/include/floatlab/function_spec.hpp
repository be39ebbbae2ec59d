#pragma once

// Parser for the one-line function mini-language:
//
//   quad(a11[,a12,a22])[+c]     <A x, x> + c
//   halfsq-ellipse(rx[,ry])     |x|_K^2 / 2, K the axis ellipse (interval in 1D)
//   pownorm(p,s[,n])            s |x|^p
//   lpsq(q,s)                   s |x|_q^2 in the plane
//   lin(a1[,a2])[+c]            <a, x> + c
//   max(spec,...) | sum(spec,...)
//   affine(spec; m11[,m12,m21,m22]; t1[,t2])   psi(M x + t)
//
// Whitespace is ignored. Atoms without an intrinsic dimension (pownorm)
// take it from their siblings, defaulting to 1.

#include <floatlab/convexfn.hpp>
#include <floatlab/errors.hpp>

#include <cctype>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

namespace floatlab {

namespace detail {

struct SpecNode {
    std::string head;
    std::vector<SpecNode> children;
    std::vector<std::vector<double>> groups; // ';'-separated numeric lists
    double constant = 0.0;
};

class SpecParser {
public:
    explicit SpecParser(std::string text)
    {
        for (char c : text)
            if (!std::isspace(static_cast<unsigned char>(c)))
                src_ += c;
    }

    SpecNode parse()
    {
        if (src_.empty())
            throw ParseError("empty function spec");
        SpecNode n = term();
        if (pos_ != src_.size())
            fail("unexpected trailing input");
        return n;
    }

private:
    std::string src_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw ParseError("function spec: " + msg + " at offset " + std::to_string(pos_) + " in '" + src_ + "'");
    }

    bool peek(char c) const { return pos_ < src_.size() && src_[pos_] == c; }

    void expect(char c)
    {
        if (!peek(c))
            fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalpha(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '-'))
            ++pos_;
        if (start == pos_)
            fail("expected a function name");
        return src_.substr(start, pos_ - start);
    }

    double number()
    {
        const char* begin = src_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin)
            fail("expected a number");
        pos_ += static_cast<std::size_t>(end - begin);
        return v;
    }

    std::vector<double> number_list()
    {
        std::vector<double> v{number()};
        while (peek(',')) {
            ++pos_;
            v.push_back(number());
        }
        return v;
    }

    SpecNode term()
    {
        SpecNode n;
        n.head = identifier();
        expect('(');
        if (n.head == "max" || n.head == "sum") {
            n.children.push_back(term());
            while (peek(',')) {
                ++pos_;
                n.children.push_back(term());
            }
        } else if (n.head == "affine") {
            n.children.push_back(term());
            expect(';');
            n.groups.push_back(number_list());
            expect(';');
            n.groups.push_back(number_list());
        } else {
            n.groups.push_back(number_list());
        }
        expect(')');
        if (peek('+') || peek('-')) {
            n.constant = number();
        }
        return n;
    }
};

// 0 means "no intrinsic dimension".
inline int intrinsic_dimension(const SpecNode& n)
{
    auto count = [&](std::size_t g) { return n.groups.size() > g ? n.groups[g].size() : 0u; };
    if (n.head == "quad") {
        if (count(0) == 1)
            return 1;
        if (count(0) == 3)
            return 2;
        throw ParseError("quad takes 1 or 3 coefficients");
    }
    if (n.head == "halfsq-ellipse" || n.head == "lin") {
        if (count(0) == 1 || count(0) == 2)
            return static_cast<int>(count(0));
        throw ParseError(n.head + " takes 1 or 2 parameters");
    }
    if (n.head == "lpsq")
        return 2;
    if (n.head == "pownorm") {
        if (count(0) == 2)
            return 0;
        if (count(0) == 3)
            return static_cast<int>(n.groups[0][2]);
        throw ParseError("pownorm takes (p, s[, n])");
    }
    if (n.head == "max" || n.head == "sum") {
        int d = 0;
        for (const auto& c : n.children) {
            const int cd = intrinsic_dimension(c);
            if (cd != 0 && d != 0 && cd != d)
                throw ParseError(n.head + ": arguments of different dimensions");
            if (cd != 0)
                d = cd;
        }
        return d;
    }
    if (n.head == "affine") {
        int d = intrinsic_dimension(n.children.front());
        const int md = count(0) == 1 ? 1 : count(0) == 4 ? 2 : -1;
        const int td = static_cast<int>(count(1));
        if (md < 0 || td != md)
            throw ParseError("affine: matrix and shift sizes must be (1;1) or (4;2)");
        if (d != 0 && d != md)
            throw ParseError("affine: matrix dimension does not match the inner function");
        return md;
    }
    throw ParseError("unknown function '" + n.head + "'");
}

inline ConvexFunction shifted(const ConvexFunction& f, double c)
{
    if (c == 0.0)
        return f;
    ConvexFunction::Parts p = f.parts();
    auto inner = p.value;
    p.value = [inner, c](const Vec& x) { return inner(x) + c; };
    if (p.lower_bound)
        p.lower_bound->beta += c;
    p.description += (c > 0.0 ? "+" : "") + fmt(c);
    return ConvexFunction(std::move(p));
}

inline ConvexFunction build(const SpecNode& n, int dim)
{
    const auto& g0 = n.groups.empty() ? std::vector<double>{} : n.groups[0];
    ConvexFunction f;
    if (n.head == "quad") {
        if (g0.size() == 1) {
            f = quadratic_form(g0[0]);
        } else {
            Mat A(2, 2);
            A << g0[0], g0[1], g0[1], g0[2];
            f = quadratic_form(A);
        }
        if (n.constant != 0.0)
            f = quadratic_form(f.hessian(zero_vec(f.dimension())) / 2.0, n.constant);
        return f;
    }
    if (n.head == "halfsq-ellipse") {
        f = gauge_square_half(g0.size() == 1 ? GaugeBody::interval(g0[0]) : GaugeBody::ellipse(g0[0], g0[1]));
    } else if (n.head == "lin") {
        f = affine_function(g0.size() == 1 ? vec1(g0[0]) : vec2(g0[0], g0[1]), n.constant);
        return f;
    } else if (n.head == "lpsq") {
        if (g0.size() != 2)
            throw ParseError("lpsq takes (q, s)");
        f = lp_norm_square(g0[0], g0[1]);
    } else if (n.head == "pownorm") {
        f = power_norm(g0[0], g0[1], dim);
    } else if (n.head == "max" || n.head == "sum") {
        std::vector<ConvexFunction> fs;
        for (const auto& c : n.children)
            fs.push_back(build(c, dim));
        f = n.head == "max" ? max_of(std::move(fs)) : sum_of(std::move(fs));
    } else if (n.head == "affine") {
        const auto& m = n.groups[0];
        const auto& t = n.groups[1];
        Mat A(dim, dim);
        Vec shift(dim);
        if (dim == 1) {
            A << m[0];
            shift << t[0];
        } else {
            A << m[0], m[1], m[2], m[3];
            shift << t[0], t[1];
        }
        f = precompose_affine(build(n.children.front(), dim), A, shift);
    } else {
        throw ParseError("unknown function '" + n.head + "'");
    }
    return shifted(f, n.constant);
}

} // namespace detail

/// Parses a function spec. Throws ParseError on malformed text and
/// ConstructionError on invalid parameters.
inline ConvexFunction parse_function(const std::string& text)
{
    detail::SpecParser parser(text);
    const detail::SpecNode root = parser.parse();
    int dim = detail::intrinsic_dimension(root);
    if (dim == 0)
        dim = 1;
    if (dim != 1 && dim != 2)
        throw ParseError("function spec dimension must be 1 or 2");
    return detail::build(root, dim).with_description(text);
}

} // namespace floatlab
