#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "nilcorr/scalar.hpp"

namespace nilcorr {

/// Generalized (bracket) polynomial: Const | Var | Add | Mul | Floor.
/// Nodes are shared, so Chebyshev recurrences stay linear-sized; evaluation
/// memoizes by node identity.
class GPoly {
public:
    enum class Kind { Const, Var, Add, Mul, Floor };

    struct Node {
        Kind kind;
        Scalar value;   // Const
        int var = 0;    // Var
        std::shared_ptr<const Node> a, b;
    };
    using NodePtr = std::shared_ptr<const Node>;

    GPoly() = default;
    GPoly(int d, NodePtr root) : d_(d), root_(std::move(root)) {}

    static GPoly constant(int d, Scalar v) {
        return GPoly(d, std::make_shared<Node>(Node{Kind::Const, std::move(v), 0, nullptr, nullptr}));
    }
    static GPoly variable(int d, int i) {
        if (i < 0 || i >= d) throw Error(ErrorCode::Validation, "variable index out of range", "gpoly");
        return GPoly(d, std::make_shared<Node>(Node{Kind::Var, Scalar(), i, nullptr, nullptr}));
    }
    static GPoly add(const GPoly& x, const GPoly& y) {
        check_dims(x, y);
        return GPoly(x.d_, std::make_shared<Node>(Node{Kind::Add, Scalar(), 0, x.root_, y.root_}));
    }
    static GPoly mul(const GPoly& x, const GPoly& y) {
        check_dims(x, y);
        return GPoly(x.d_, std::make_shared<Node>(Node{Kind::Mul, Scalar(), 0, x.root_, y.root_}));
    }
    static GPoly floor(const GPoly& x) {
        return GPoly(x.d_, std::make_shared<Node>(Node{Kind::Floor, Scalar(), 0, x.root_, nullptr}));
    }
    /// {p} = p - ⌊p⌋
    static GPoly frac(const GPoly& x) { return add(x, mul(constant(x.d_, Scalar(Rational(-1))), floor(x))); }

    friend GPoly operator+(const GPoly& a, const GPoly& b) { return add(a, b); }
    friend GPoly operator*(const GPoly& a, const GPoly& b) { return mul(a, b); }

    int dim() const { return d_; }
    const NodePtr& root() const { return root_; }

    Scalar eval(std::span<const Int> n) const {
        if (!root_) throw Error(ErrorCode::Validation, "empty gpoly", "gpoly.eval");
        if (n.size() != static_cast<std::size_t>(d_))
            throw Error(ErrorCode::DimensionMismatch, "argument size != d", "gpoly.eval");
        std::map<const Node*, Scalar> memo;
        return eval_node(root_.get(), n, memo);
    }

    Scalar eval1(const Int& n) const { return eval(std::span<const Int>(&n, 1)); }

    /// Witness-precision numeric evaluation (no exact coefficient arithmetic);
    /// used by dense-sampling error checks where only the value matters.
    BigFloat eval_numeric(std::span<const Int> n) const {
        std::map<const Node*, BigFloat> memo;
        return eval_node_numeric(root_.get(), n, memo);
    }

    std::string to_sexpr() const {
        std::string out;
        print(root_.get(), out);
        return out;
    }

    static GPoly parse(const std::string& text, int d, const BasisPtr& basis) {
        std::size_t pos = 0;
        NodePtr root = parse_node(text, pos, d, basis);
        skip_ws(text, pos);
        if (pos != text.size())
            throw Error(ErrorCode::Validation, "trailing input after s-expression", "gpoly.parse");
        return GPoly(d, std::move(root));
    }

private:
    static void check_dims(const GPoly& x, const GPoly& y) {
        if (x.d_ != y.d_)
            throw Error(ErrorCode::DimensionMismatch, "gpoly dims differ", "gpoly");
    }

    static Scalar eval_node(const Node* node, std::span<const Int> n,
                            std::map<const Node*, Scalar>& memo) {
        auto it = memo.find(node);
        if (it != memo.end()) return it->second;
        Scalar v;
        switch (node->kind) {
            case Kind::Const: v = node->value; break;
            case Kind::Var: v = Scalar(Rational(n[node->var])); break;
            case Kind::Add: v = eval_node(node->a.get(), n, memo) + eval_node(node->b.get(), n, memo); break;
            case Kind::Mul: v = eval_node(node->a.get(), n, memo) * eval_node(node->b.get(), n, memo); break;
            case Kind::Floor: v = Scalar(Rational(eval_node(node->a.get(), n, memo).floor())); break;
        }
        memo.emplace(node, v);
        return v;
    }

    static BigFloat eval_node_numeric(const Node* node, std::span<const Int> n,
                                      std::map<const Node*, BigFloat>& memo) {
        auto it = memo.find(node);
        if (it != memo.end()) return it->second;
        BigFloat v;
        switch (node->kind) {
            case Kind::Const: v = node->value.to_bigfloat(); break;
            case Kind::Var: v = BigFloat(n[node->var]); break;
            case Kind::Add:
                v = eval_node_numeric(node->a.get(), n, memo) + eval_node_numeric(node->b.get(), n, memo);
                break;
            case Kind::Mul:
                v = eval_node_numeric(node->a.get(), n, memo) * eval_node_numeric(node->b.get(), n, memo);
                break;
            case Kind::Floor: v = boost::multiprecision::floor(eval_node_numeric(node->a.get(), n, memo)); break;
        }
        memo.emplace(node, v);
        return v;
    }

    static void print(const Node* node, std::string& out) {
        switch (node->kind) {
            case Kind::Const:
                out += "(const \"" + node->value.to_string() + "\")";
                break;
            case Kind::Var:
                out += "(var " + std::to_string(node->var) + ")";
                break;
            case Kind::Add:
                out += "(add ";
                print(node->a.get(), out);
                out += " ";
                print(node->b.get(), out);
                out += ")";
                break;
            case Kind::Mul:
                out += "(mul ";
                print(node->a.get(), out);
                out += " ";
                print(node->b.get(), out);
                out += ")";
                break;
            case Kind::Floor:
                out += "(floor ";
                print(node->a.get(), out);
                out += ")";
                break;
        }
    }

    static void skip_ws(const std::string& s, std::size_t& pos) {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\n' || s[pos] == '\t')) ++pos;
    }

    static NodePtr parse_node(const std::string& s, std::size_t& pos, int d, const BasisPtr& basis) {
        skip_ws(s, pos);
        if (pos >= s.size() || s[pos] != '(')
            throw Error(ErrorCode::Validation, "expected '('", "gpoly.parse");
        ++pos;
        skip_ws(s, pos);
        std::size_t w0 = pos;
        while (pos < s.size() && std::isalpha(static_cast<unsigned char>(s[pos]))) ++pos;
        std::string word = s.substr(w0, pos - w0);
        NodePtr node;
        if (word == "const") {
            skip_ws(s, pos);
            if (pos >= s.size() || s[pos] != '"')
                throw Error(ErrorCode::Validation, "expected quoted scalar", "gpoly.parse");
            ++pos;
            std::size_t q0 = pos;
            while (pos < s.size() && s[pos] != '"') ++pos;
            if (pos >= s.size())
                throw Error(ErrorCode::Validation, "unterminated scalar string", "gpoly.parse");
            Scalar v = scalar_from_string(s.substr(q0, pos - q0), basis);
            ++pos;
            node = std::make_shared<Node>(Node{Kind::Const, std::move(v), 0, nullptr, nullptr});
        } else if (word == "var") {
            skip_ws(s, pos);
            std::size_t n0 = pos;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
            int idx = std::stoi(s.substr(n0, pos - n0));
            if (idx < 0 || idx >= d)
                throw Error(ErrorCode::Validation, "variable index out of range", "gpoly.parse");
            node = std::make_shared<Node>(Node{Kind::Var, Scalar(), idx, nullptr, nullptr});
        } else if (word == "add" || word == "mul") {
            NodePtr a = parse_node(s, pos, d, basis);
            NodePtr b = parse_node(s, pos, d, basis);
            node = std::make_shared<Node>(
                Node{word == "add" ? Kind::Add : Kind::Mul, Scalar(), 0, std::move(a), std::move(b)});
        } else if (word == "floor") {
            NodePtr a = parse_node(s, pos, d, basis);
            node = std::make_shared<Node>(Node{Kind::Floor, Scalar(), 0, std::move(a), nullptr});
        } else {
            throw Error(ErrorCode::Validation, "unknown operator '" + word + "'", "gpoly.parse");
        }
        skip_ws(s, pos);
        if (pos >= s.size() || s[pos] != ')')
            throw Error(ErrorCode::Validation, "expected ')'", "gpoly.parse");
        ++pos;
        return node;
    }

    int d_ = 1;
    NodePtr root_;
};

struct CharacterApproximation {
    GPoly real_part;
    GPoly imag_part;
    double sup_err_estimate = 0.0;
    double observed_max_err = 0.0;
    int degree = 0;
};

namespace detail {

/// Chebyshev coefficients of cos(z·u) and sin(z·u) on u ∈ [-1,1]:
/// cos(zu) = J₀(z) + 2 Σ_{j even ≥ 2} (-1)^{j/2} J_j(z) T_j(u),
/// sin(zu) = 2 Σ_{j odd} (-1)^{(j-1)/2} J_j(z) T_j(u).
inline std::vector<double> bessel_row(double z, int jmax) {
    std::vector<double> out(jmax + 1);
    for (int j = 0; j <= jmax; ++j) out[j] = std::cyl_bessel_j(j, z);
    return out;
}

} // namespace detail

/// Chebyshev approximation of n ↦ e^{2πi·m·{nα}} by a pair of bracket
/// polynomials in the frac combinator; the truncation bound comes from the
/// Bessel tail, and a dense-sampling check over 10⁴ points confirms it.
inline CharacterApproximation approximate_character(long long m, const Scalar& alpha, double eps,
                                                    int d = 1, int var = 0) {
    if (eps <= 0) throw Error(ErrorCode::Validation, "eps must be positive", "approximate_character");
    if (m == 0 || alpha.is_zero()) {
        CharacterApproximation out;
        out.real_part = GPoly::constant(d, Scalar(Rational(1)));
        out.imag_part = GPoly::constant(d, Scalar(Rational(0)));
        return out;
    }
    const double z = std::numbers::pi * static_cast<double>(std::llabs(m));
    const int hard_cap = 200;
    const int probe = hard_cap + 80;
    auto bes = detail::bessel_row(z, probe);

    auto tail = [&](int deg) {
        double t = 0;
        for (int j = deg + 1; j <= probe; ++j) t += 2.0 * std::abs(bes[j]);
        return t;
    };
    int degree = -1;
    for (int deg = 1; deg <= hard_cap; ++deg) {
        // Separate tails for the even (cos) and odd (sin) series both bounded by tail().
        if (tail(deg) <= 0.45 * eps) { degree = deg; break; }
    }
    if (degree < 0)
        throw Error(ErrorCode::DegreeOverflow, "required Chebyshev degree exceeds 200");

    // u = 2{nα} − 1, built once and shared by every T_j.
    GPoly x = GPoly::frac(GPoly::mul(GPoly::constant(d, alpha), GPoly::variable(d, var)));
    GPoly u = GPoly::add(GPoly::mul(GPoly::constant(d, Scalar(Rational(2))), x),
                         GPoly::constant(d, Scalar(Rational(-1))));

    std::vector<GPoly> cheb;
    cheb.push_back(GPoly::constant(d, Scalar(Rational(1))));
    cheb.push_back(u);
    GPoly two_u = GPoly::mul(GPoly::constant(d, Scalar(Rational(2))), u);
    for (int j = 2; j <= degree; ++j)
        cheb.push_back(GPoly::add(GPoly::mul(two_u, cheb[j - 1]),
                                  GPoly::mul(GPoly::constant(d, Scalar(Rational(-1))), cheb[j - 2])));

    // cos(2πm x) = σ·cos(z u), sin(2πm x) = σ·sign(m)·sin(z u), σ = (-1)^m.
    const double sigma = (std::llabs(m) % 2 == 0) ? 1.0 : -1.0;
    const double sgn = (m >= 0) ? 1.0 : -1.0;
    std::vector<double> re_coeff(degree + 1, 0.0), im_coeff(degree + 1, 0.0);
    re_coeff[0] = sigma * bes[0];
    for (int j = 2; j <= degree; j += 2) {
        double s = (j / 2 % 2 == 0) ? 1.0 : -1.0;
        re_coeff[j] = sigma * 2.0 * s * bes[j];
    }
    for (int j = 1; j <= degree; j += 2) {
        double s = ((j - 1) / 2 % 2 == 0) ? 1.0 : -1.0;
        im_coeff[j] = sigma * sgn * 2.0 * s * bes[j];
    }

    auto combine = [&](const std::vector<double>& coeff) {
        GPoly acc = GPoly::constant(d, Scalar(Rational(0)));
        for (int j = 0; j <= degree; ++j) {
            if (coeff[j] == 0.0) continue;
            // every double is an exact rational; the AST stays exact
            GPoly term = GPoly::mul(GPoly::constant(d, Scalar(Rational(coeff[j]))), cheb[j]);
            acc = GPoly::add(acc, term);
        }
        return acc;
    };

    CharacterApproximation out;
    out.real_part = combine(re_coeff);
    out.imag_part = combine(im_coeff);
    out.degree = degree;
    out.sup_err_estimate = 2.0 * tail(degree) + 1e-12;

    // Dense-sampling confirmation over n = 0..10^4 (numeric path; checks values).
    BigFloat aw = alpha.to_bigfloat();
    double worst = 0;
    for (int n = 0; n <= 10000; ++n) {
        BigFloat t = aw * n;
        double x_frac = static_cast<double>(t - boost::multiprecision::floor(t));
        double uu = 2.0 * x_frac - 1.0;
        // Clenshaw for both series
        auto clenshaw = [&](const std::vector<double>& c) {
            double b1 = 0, b2 = 0;
            for (int j = degree; j >= 1; --j) {
                double b0 = 2.0 * uu * b1 - b2 + c[j];
                b2 = b1;
                b1 = b0;
            }
            return uu * b1 - b2 + c[0];
        };
        double pr = clenshaw(re_coeff), pi_ = clenshaw(im_coeff);
        double ph = 2.0 * std::numbers::pi * static_cast<double>(m) * x_frac;
        double err = std::hypot(pr - std::cos(ph), pi_ - std::sin(ph));
        worst = std::max(worst, err);
    }
    out.observed_max_err = worst;
    if (worst > eps)
        throw Error(ErrorCode::Validation, "dense-sampling check exceeded eps (observed " +
                                               std::to_string(worst) + ")",
                    "approximate_character");
    return out;
}

} // namespace nilcorr
