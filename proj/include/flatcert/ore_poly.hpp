// The skew polynomial ring K[d/dt] over the meromorphic expression field:
// polynomials in the derivation D = d/dt with ScalarExpr coefficients written
// on the left, multiplication governed by D*a = a*D + L(a).
#pragma once

#include "expr_text.hpp"
#include "symexpr.hpp"

namespace flatcert {

struct InconclusiveCoefficient : Error {
    InconclusiveCoefficient(const std::string& msg, Expr offending)
        : Error(msg + ": " + to_text(offending)), offending(offending) {}
    Expr offending;
};

class OrePoly {
  public:
    OrePoly() = default;
    explicit OrePoly(Expr scalar) {
        if (!scalar.is_zero_canonical()) c_.push_back(scalar);
    }
    static OrePoly zero() { return {}; }
    static OrePoly one() { return OrePoly(kOne); }
    static OrePoly D(int k = 1) { return monomial(kOne, k); }
    static OrePoly monomial(Expr a, int k) {
        OrePoly p;
        if (a.is_zero_canonical()) return p;
        p.c_.assign(static_cast<std::size_t>(k) + 1, kZero);
        p.c_.back() = a;
        return p;
    }

    // degree; -1 encodes the zero polynomial (deg -infinity)
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const { return c_.empty(); }
    Expr coeff(int k) const {
        if (k < 0 || k >= static_cast<int>(c_.size())) return kZero;
        return c_[static_cast<std::size_t>(k)];
    }
    Expr leading_coeff() const { return is_zero() ? kZero : c_.back(); }
    bool is_one() const { return degree() == 0 && c_[0].is_one(); }

    bool operator==(const OrePoly& o) const { return c_ == o.c_; }

    static OrePoly from_coeffs(std::vector<Expr> cs) {
        OrePoly p;
        p.c_ = std::move(cs);
        p.trim();
        return p;
    }
    const std::vector<Expr>& coeffs() const { return c_; }

    friend OrePoly operator+(const OrePoly& a, const OrePoly& b) {
        std::vector<Expr> cs(std::max(a.c_.size(), b.c_.size()), kZero);
        for (std::size_t i = 0; i < cs.size(); ++i)
            cs[i] = a.coeff(static_cast<int>(i)) + b.coeff(static_cast<int>(i));
        return from_coeffs(std::move(cs));
    }
    friend OrePoly operator-(const OrePoly& a) {
        std::vector<Expr> cs = a.c_;
        for (auto& c : cs) c = -c;
        return from_coeffs(std::move(cs));
    }
    friend OrePoly operator-(const OrePoly& a, const OrePoly& b) { return a + (-b); }

    // skew product: D^i * b = sum_s C(i,s) L^(i-s)(b) D^s
    friend OrePoly operator*(const OrePoly& a, const OrePoly& b) {
        if (a.is_zero() || b.is_zero()) return {};
        std::vector<Expr> cs(
            static_cast<std::size_t>(a.degree() + b.degree()) + 1, kZero);
        for (int i = 0; i <= a.degree(); ++i) {
            Expr ai = a.coeff(i);
            if (ai.is_zero_canonical()) continue;
            for (int j = 0; j <= b.degree(); ++j) {
                Expr bj = b.coeff(j);
                if (bj.is_zero_canonical()) continue;
                // derivatives of bj taken incrementally: s runs high to low
                Expr deriv = bj;
                Rational binom(1);
                for (int s = i; s >= 0; --s) {
                    // coefficient C(i, s) with L^(i-s)(bj) landing on D^(s+j)
                    Expr term = ai * Expr::number(binom) * deriv;
                    cs[static_cast<std::size_t>(s + j)] =
                        cs[static_cast<std::size_t>(s + j)] + term;
                    if (s > 0) {
                        deriv = total_derivative(deriv);
                        binom = binom * s / (i - s + 1);
                    }
                }
            }
        }
        return from_coeffs(std::move(cs));
    }
    friend OrePoly operator*(const Expr& a, const OrePoly& b) {
        return OrePoly(a) * b;
    }
    friend OrePoly operator*(const OrePoly& a, const Expr& b) {
        return a * OrePoly(b);
    }

    // ring action on scalars: p(e) = sum a_k L^k(e)
    Expr apply(const Expr& e) const {
        Expr acc = kZero;
        Expr deriv = e;
        for (int k = 0; k <= degree(); ++k) {
            if (!coeff(k).is_zero_canonical()) acc = acc + coeff(k) * deriv;
            if (k < degree()) deriv = total_derivative(deriv);
        }
        return acc;
    }

    int size_metric() const {
        int s = 0;
        for (auto& c : c_) s += expr_size(c);
        return s;
    }

  private:
    void trim() {
        while (!c_.empty() && c_.back().is_zero_canonical()) c_.pop_back();
    }
    std::vector<Expr> c_;
};

inline bool canonically_equal(const OrePoly& a, const OrePoly& b) {
    return (a - b).is_zero();
}

inline OrePoly ore_pow(const OrePoly& a, int k) {
    if (k < 0) throw Error("negative power of an Ore polynomial");
    OrePoly r = OrePoly::one();
    for (int i = 0; i < k; ++i) r = r * a;
    return r;
}

// ---------------------------------------------------------------------------
// Euclidean division.  Both divisions share the coefficient quotient
// lc(a)/lc(b) since K is commutative; the subtraction order differs.

namespace detail {

inline Expr division_quotient_coeff(const OrePoly& a, const OrePoly& b,
                                    AssumptionLedger& ledger,
                                    const ZeroTestConfig& cfg) {
    Expr lb = b.leading_coeff();
    switch (is_zero(lb, ledger, cfg)) {
        case ZeroStatus::Zero:
            throw Error("division by the zero Ore polynomial");
        case ZeroStatus::Unknown:
            throw InconclusiveCoefficient(
                "leading coefficient of the divisor has unknown zero status", lb);
        case ZeroStatus::NonZero: break;
    }
    ledger.assume_nonzero(lb);
    return a.leading_coeff() / lb;
}

}  // namespace detail

// a = b*q + r with deg r < deg b
inline std::pair<OrePoly, OrePoly> right_divide(const OrePoly& a, const OrePoly& b,
                                                AssumptionLedger& ledger,
                                                const ZeroTestConfig& cfg = {}) {
    if (b.is_zero()) throw Error("division by the zero Ore polynomial");
    OrePoly q, r = a;
    while (!r.is_zero() && r.degree() >= b.degree()) {
        Expr c = detail::division_quotient_coeff(r, b, ledger, cfg);
        OrePoly t = OrePoly::monomial(c, r.degree() - b.degree());
        q = q + t;
        r = r - b * t;
        if (std::getenv("FLATCERT_DIV_TRACE"))
            fprintf(stderr, "[rdiv] deg=%d rsize=%d qsize=%d bsize=%d\n",
                    r.degree(), r.size_metric(), q.size_metric(),
                    b.size_metric());
    }
    return {q, r};
}

// a = q*b + r with deg r < deg b
inline std::pair<OrePoly, OrePoly> left_divide(const OrePoly& a, const OrePoly& b,
                                               AssumptionLedger& ledger,
                                               const ZeroTestConfig& cfg = {}) {
    if (b.is_zero()) throw Error("division by the zero Ore polynomial");
    OrePoly q, r = a;
    while (!r.is_zero() && r.degree() >= b.degree()) {
        Expr c = detail::division_quotient_coeff(r, b, ledger, cfg);
        OrePoly t = OrePoly::monomial(c, r.degree() - b.degree());
        q = q + t;
        r = r - t * b;
        if (std::getenv("FLATCERT_DIV_TRACE"))
            fprintf(stderr, "[ldiv] deg=%d rsize=%d qsize=%d bsize=%d\n",
                    r.degree(), r.size_metric(), q.size_metric(),
                    b.size_metric());
    }
    return {q, r};
}

// ---------------------------------------------------------------------------
// Text form: `sin(theta)*D^2 + 2*dot(theta)*cos(theta)*D + 1`

inline std::string to_text(const OrePoly& p) {
    if (p.is_zero()) return "0";
    std::string out;
    for (int k = p.degree(); k >= 0; --k) {
        Expr c = p.coeff(k);
        if (c.is_zero_canonical()) continue;
        std::string cs = to_text(c);
        bool needs_paren = cs.find_first_of("+-", 1) != std::string::npos &&
                           c.rep().num.terms.size() > 1;
        std::string piece;
        if (k == 0) {
            piece = needs_paren ? "(" + cs + ")" : cs;
        } else {
            std::string dpart = (k == 1) ? "D" : "D^" + std::to_string(k);
            if (c.is_one())
                piece = dpart;
            else if ((-c).is_one())
                piece = "-" + dpart;
            else
                piece = (needs_paren ? "(" + cs + ")" : cs) + "*" + dpart;
        }
        if (out.empty()) {
            out = piece;
        } else if (!piece.empty() && piece[0] == '-') {
            out += " - " + piece.substr(1);
        } else {
            out += " + " + piece;
        }
    }
    return out.empty() ? "0" : out;
}

// Parser over the Ore ring itself so skew products like `D*x` mean what they
// say.  `D` is reserved.
namespace detail {

class OreParser {
  public:
    OreParser(Lexer& lx, const ExprSymbols& syms) : lx_(lx), syms_(syms) {}
    OrePoly parse() { return parse_sum(); }

  private:
    OrePoly parse_sum() {
        OrePoly e = parse_product();
        while (lx_.at(Tok::Plus) || lx_.at(Tok::Minus)) {
            bool minus = lx_.next().kind == Tok::Minus;
            OrePoly rhs = parse_product();
            e = minus ? e - rhs : e + rhs;
        }
        return e;
    }
    OrePoly parse_product() {
        OrePoly e = parse_unary();
        while (lx_.at(Tok::Star) || lx_.at(Tok::Slash)) {
            bool div = lx_.next().kind == Tok::Slash;
            OrePoly rhs = parse_unary();
            if (div) {
                if (rhs.degree() != 0)
                    throw ParseError("can only divide by scalar coefficients",
                                     lx_.peek().pos);
                e = e * OrePoly(kOne / rhs.coeff(0));
            } else {
                e = e * rhs;
            }
        }
        return e;
    }
    OrePoly parse_unary() {
        if (lx_.accept(Tok::Minus)) return -parse_unary();
        if (lx_.accept(Tok::Plus)) return parse_unary();
        return parse_power();
    }
    OrePoly parse_power() {
        OrePoly base = parse_primary();
        if (lx_.at(Tok::Caret)) {
            lx_.next();
            bool paren = lx_.accept(Tok::LParen);
            bool neg = lx_.accept(Tok::Minus);
            Token t = lx_.expect(Tok::Number, "an integer exponent");
            int k = std::stoi(t.text);
            if (paren) lx_.expect(Tok::RParen, "')'");
            if (neg) {
                if (base.degree() != 0)
                    throw ParseError("negative powers only for scalars", t.pos);
                return OrePoly(pow(base.coeff(0), -k));
            }
            return ore_pow(base, k);
        }
        return base;
    }
    OrePoly parse_primary() {
        const Token t = lx_.peek();
        if (t.kind == Tok::Ident && t.text == "D") {
            lx_.next();
            return OrePoly::D();
        }
        if (t.kind == Tok::LParen) {
            lx_.next();
            OrePoly e = parse_sum();
            lx_.expect(Tok::RParen, "')'");
            return e;
        }
        // fall back to a scalar expression primary (identifiers, numbers,
        // function calls, jet suffixes)
        return OrePoly(parse_scalar_primary());
    }
    Expr parse_scalar_primary() {
        // reuse the scalar parser on a primary-with-suffix grammar slice;
        // powers are handled at the Ore level
        Token t = lx_.next();
        if (t.kind == Tok::Number) {
            Lexer sub(t.text);
            return parse_expr(sub, syms_);
        }
        if (t.kind != Tok::Ident)
            throw ParseError("expected an expression", t.pos);
        const std::string& name = t.text;
        if (lx_.at(Tok::LParen)) {
            if (name == "dot" || name == "ddot") {
                lx_.next();
                Token v = lx_.expect(Tok::Ident, "a coordinate name");
                lx_.expect(Tok::RParen, "')'");
                return syms_.resolve_jet(v.text, name == "dot" ? 1 : 2, v.pos);
            }
            if (name == "sin" || name == "cos" || name == "tan" ||
                name == "exp" || name == "ln" || name == "atan") {
                lx_.next();
                OrePoly arg = parse_sum();
                lx_.expect(Tok::RParen, "')'");
                if (arg.degree() > 0)
                    throw ParseError("function argument must be scalar", t.pos);
                Expr a = arg.coeff(0);
                if (name == "sin") return sin(a);
                if (name == "cos") return cos(a);
                if (name == "tan") return tan(a);
                if (name == "exp") return exp(a);
                if (name == "atan") return atan(a);
                return ln(a);
            }
            throw ParseError("unknown function '" + name + "'", t.pos);
        }
        int order = 0;
        while (lx_.accept(Tok::Prime)) ++order;
        if (lx_.at(Tok::Caret)) {
            Lexer save = lx_;
            lx_.next();
            if (lx_.at(Tok::LParen)) {
                lx_.next();
                if (lx_.at(Tok::Number) &&
                    lx_.peek().text.find('.') == std::string::npos) {
                    Token num = lx_.next();
                    if (lx_.at(Tok::RParen)) {
                        lx_.next();
                        return syms_.resolve_jet(name, order + std::stoi(num.text),
                                                 t.pos);
                    }
                }
            }
            lx_ = save;
        }
        return syms_.resolve_jet(name, order, t.pos);
    }

    Lexer& lx_;
    const ExprSymbols& syms_;
};

}  // namespace detail

inline OrePoly parse_ore(Lexer& lx, const ExprSymbols& syms) {
    return detail::OreParser(lx, syms).parse();
}

inline OrePoly parse_ore(const std::string& text, const ExprSymbols& syms) {
    Lexer lx(text);
    OrePoly p = parse_ore(lx, syms);
    if (!lx.at(Tok::End))
        throw ParseError("trailing input after Ore polynomial", lx.peek().pos);
    return p;
}

inline OrePoly parse_ore(const std::string& text) {
    ExprSymbols syms;
    syms.allow_auto_vars = true;
    return parse_ore(text, syms);
}

}  // namespace flatcert
