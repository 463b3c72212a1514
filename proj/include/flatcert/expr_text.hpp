// Text form of scalar expressions, shared by the CLI DSL, the OrePoly /
// matrix / form text formats and the JSON certificates.  Internally trig is
// held as phasors exp(i*arg); printing converts back to sin/cos powers with
// sin-squared reduction, so parse(print(e)) re-interns to the same canonical
// expression.
#pragma once

#include <cctype>
#include <functional>
#include <string>
#include <vector>

#include "symexpr.hpp"

namespace flatcert {

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline std::string rational_text(const Rational& r) {
    std::ostringstream os;
    os << numerator(r);
    if (denominator(r) != 1) os << "/" << denominator(r);
    return os.str();
}

inline std::string atom_text(AtomId id);

inline std::string jet_text(const JetCoord& c) {
    const std::string& n = ExprPool::instance().var_name(c.var);
    if (c.order == 0) return n;
    if (c.order == 1) return "dot(" + n + ")";
    if (c.order == 2) return "ddot(" + n + ")";
    return n + "^(" + std::to_string(c.order) + ")";
}

inline std::string expr_text(const Expr& e);

inline std::string atom_text(AtomId id) {
    const Atom& a = ExprPool::instance().atom(id);
    switch (a.kind) {
        case AtomKind::Jet: return jet_text(a.jet);
        case AtomKind::Param: return a.name;
        case AtomKind::Sin: return "sin(" + expr_text(Expr(a.arg)) + ")";
        case AtomKind::Cos: return "cos(" + expr_text(Expr(a.arg)) + ")";
        case AtomKind::Exp: return "exp(" + expr_text(Expr(a.arg)) + ")";
        case AtomKind::Ln: return "ln(" + expr_text(Expr(a.arg)) + ")";
        case AtomKind::Atan: return "atan(" + expr_text(Expr(a.arg)) + ")";
        case AtomKind::Phasor:
            // only reachable if a phasor escapes display conversion
            return "exp(I*" + expr_text(Expr(a.arg)) + ")";
    }
    return "?";
}

// converts phasor powers to a display polynomial over Sin/Cos atoms and
// reduces sin powers >= 2 through the Pythagorean identity
inline Poly to_display_poly(const Poly& p, const CRational& scale) {
    ExprPool& pool = ExprPool::instance();
    std::vector<std::pair<Monomial, CRational>> acc;
    for (auto& [m, c] : p.terms) {
        Poly piece = poly_const(c * scale);
        for (auto& [id, e] : m.factors) {
            const Atom& a = pool.atom(id);
            if (a.kind != AtomKind::Phasor) {
                piece = poly_mul(piece, poly_atom(id, e));
                continue;
            }
            AtomId sinA = pool.atom(Atom{AtomKind::Sin, {}, {}, a.arg});
            AtomId cosA = pool.atom(Atom{AtomKind::Cos, {}, {}, a.arg});
            // (cos + i sin)^e, conjugate for negative powers
            Poly base = poly_add(poly_atom(cosA),
                                 poly_scale(poly_atom(sinA),
                                            e > 0 ? cr_i() : -cr_i()));
            int k = e > 0 ? e : -e;
            for (int t = 0; t < k; ++t) piece = poly_mul(piece, base);
        }
        for (auto& pr : piece.terms) acc.push_back(pr);
    }
    Poly out = poly_normalize_terms(std::move(acc));
    // display reduction: sin(a)^2 -> 1 - cos(a)^2
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t t = 0; t < out.terms.size() && !changed; ++t) {
            const auto& [mono, coeff] = out.terms[t];
            for (auto& [aid, exp] : mono.factors) {
                if (exp >= 2 && pool.atom(aid).kind == AtomKind::Sin) {
                    AtomId cosA = pool.atom(
                        Atom{AtomKind::Cos, {}, {}, pool.atom(aid).arg});
                    Monomial rest;
                    for (auto& [id2, e2] : mono.factors) {
                        int e = (id2 == aid) ? e2 - 2 : e2;
                        if (e != 0) rest.factors.emplace_back(id2, e);
                    }
                    Monomial restCos;
                    {
                        Monomial cm;
                        cm.factors.emplace_back(cosA, 2);
                        restCos = mono_mul(rest, cm);
                    }
                    std::vector<std::pair<Monomial, CRational>> v;
                    for (std::size_t s = 0; s < out.terms.size(); ++s)
                        if (s != t) v.push_back(out.terms[s]);
                    v.emplace_back(rest, coeff);
                    v.emplace_back(restCos, -coeff);
                    out = poly_normalize_terms(std::move(v));
                    changed = true;
                    break;
                }
            }
        }
    }
    return out;
}

// stable ordering independent of atom interning order
inline std::vector<std::pair<std::string, int>> mono_keys(const Monomial& m) {
    std::vector<std::pair<std::string, int>> ks;
    for (auto& [id, e] : m.factors) ks.emplace_back(atom_text(id), e);
    std::sort(ks.begin(), ks.end());
    return ks;
}

inline std::string coeff_text(const CRational& c) {
    if (c.im == 0) return rational_text(c.re);
    std::string im = rational_text(c.im) + "*I";
    if (c.re == 0) return im;
    return "(" + rational_text(c.re) + " + " + im + ")";
}

inline std::string mono_text(const std::vector<std::pair<std::string, int>>& ks,
                             const CRational& c, bool lead) {
    std::string out;
    bool neg = c.im == 0 ? c.re < 0 : (c.re == 0 && c.im < 0);
    CRational ac = neg ? -c : c;
    if (!lead) out += neg ? " - " : " + ";
    else if (neg)
        out += "-";
    bool coeff_shown = false;
    if (!(ac == CRational(1)) || ks.empty()) {
        out += coeff_text(ac);
        coeff_shown = true;
    }
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (coeff_shown || i > 0) out += "*";
        out += ks[i].first;
        if (ks[i].second != 1) out += "^" + std::to_string(ks[i].second);
    }
    return out;
}

inline std::string poly_text(const Poly& p) {
    if (p.is_zero()) return "0";
    struct Row {
        std::vector<std::pair<std::string, int>> keys;
        CRational coeff;
    };
    std::vector<Row> rows;
    for (auto& [m, c] : p.terms) rows.push_back({mono_keys(m), c});
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        int da = 0, db = 0;
        for (auto& [s, e] : a.keys) da += e;
        for (auto& [s, e] : b.keys) db += e;
        if (da != db) return da > db;
        return a.keys < b.keys;
    });
    std::string out;
    for (std::size_t i = 0; i < rows.size(); ++i)
        out += mono_text(rows[i].keys, rows[i].coeff, i == 0);
    return out;
}

inline bool poly_is_simple_product(const Poly& p) {
    return p.terms.size() == 1 &&
           (p.terms[0].second.im == 0 && p.terms[0].second.re > 0);
}

inline std::string expr_text(const Expr& e) {
    const auto& r = e.rep();
    Poly shown = to_display_poly(r.num, r.scale);
    if (r.den.empty()) return poly_text(shown);
    std::string num = poly_text(shown);
    bool num_neg = !shown.is_zero() && shown.terms[0].second.im == 0 &&
                   poly_text(shown)[0] == '-';
    if (shown.terms.size() > 1 || num_neg) num = "(" + num + ")";
    std::string den;
    int pieces = 0;
    for (auto& [f, ex] : r.den) {
        Poly fd = to_display_poly(f, CRational(1));
        std::string ft = poly_text(fd);
        bool simple = poly_is_simple_product(fd) &&
                      fd.terms.size() == 1 &&
                      fd.terms[0].second == CRational(1) &&
                      fd.terms[0].first.factors.size() == 1 &&
                      fd.terms[0].first.factors[0].second == 1;
        if (!simple) ft = "(" + ft + ")";
        if (ex != 1) ft += "^" + std::to_string(ex);
        if (pieces++) den += "*";
        den += ft;
    }
    if (r.den.size() > 1) den = "(" + den + ")";
    return num + "/" + den;
}

}  // namespace detail

inline std::string to_text(const Expr& e) { return detail::expr_text(e); }

// ---------------------------------------------------------------------------
// Lexer (shared with the DSL)

struct SourcePos {
    int line = 1, col = 1;
};

struct ParseError : Error {
    ParseError(const std::string& msg, SourcePos pos)
        : Error(msg + " at line " + std::to_string(pos.line) + ", column " +
                std::to_string(pos.col)),
          pos(pos),
          message(msg) {}
    SourcePos pos;
    std::string message;
};

enum class Tok {
    End, Ident, Number, Plus, Minus, Star, Slash, Caret, LParen, RParen,
    LBracket, RBracket, LBrace, RBrace, Comma, Semi, Eq, Neq, Prime, String
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    SourcePos pos;
};

class Lexer {
  public:
    explicit Lexer(std::string src) : src_(std::move(src)) { advance(); }

    const Token& peek() const { return cur_; }
    Token next() {
        Token t = cur_;
        advance();
        return t;
    }
    bool at(Tok k) const { return cur_.kind == k; }
    bool accept(Tok k) {
        if (!at(k)) return false;
        advance();
        return true;
    }
    Token expect(Tok k, const std::string& what) {
        if (!at(k)) throw ParseError("expected " + what, cur_.pos);
        return next();
    }

  private:
    void advance() {
        skip_ws();
        cur_.pos = pos_;
        if (i_ >= src_.size()) {
            cur_ = {Tok::End, "", pos_};
            return;
        }
        char c = src_[i_];
        auto single = [&](Tok k) {
            cur_ = {k, std::string(1, c), pos_};
            bump();
        };
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string s;
            while (i_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[i_])) ||
                    src_[i_] == '_')) {
                s += src_[i_];
                bump();
            }
            cur_ = {Tok::Ident, s, cur_.pos};
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string s;
            bool dot = false;
            while (i_ < src_.size() &&
                   (std::isdigit(static_cast<unsigned char>(src_[i_])) ||
                    (!dot && src_[i_] == '.'))) {
                if (src_[i_] == '.') dot = true;
                s += src_[i_];
                bump();
            }
            cur_ = {Tok::Number, s, cur_.pos};
            return;
        }
        switch (c) {
            case '+': single(Tok::Plus); return;
            case '-': single(Tok::Minus); return;
            case '*': single(Tok::Star); return;
            case '/': single(Tok::Slash); return;
            case '^': single(Tok::Caret); return;
            case '(': single(Tok::LParen); return;
            case ')': single(Tok::RParen); return;
            case '[': single(Tok::LBracket); return;
            case ']': single(Tok::RBracket); return;
            case '{': single(Tok::LBrace); return;
            case '}': single(Tok::RBrace); return;
            case ',': single(Tok::Comma); return;
            case ';': single(Tok::Semi); return;
            case '\'': single(Tok::Prime); return;
            case '"': {
                bump();
                std::string s;
                while (i_ < src_.size() && src_[i_] != '"') {
                    s += src_[i_];
                    bump();
                }
                if (i_ >= src_.size())
                    throw ParseError("unterminated string", cur_.pos);
                bump();
                cur_ = {Tok::String, s, cur_.pos};
                return;
            }
            case '!':
                if (i_ + 1 < src_.size() && src_[i_ + 1] == '=') {
                    cur_ = {Tok::Neq, "!=", pos_};
                    bump();
                    bump();
                    return;
                }
                throw ParseError("unexpected '!'", pos_);
            case '=': single(Tok::Eq); return;
            default:
                throw ParseError(std::string("unexpected character '") + c + "'",
                                 pos_);
        }
    }
    void skip_ws() {
        while (i_ < src_.size()) {
            char c = src_[i_];
            if (c == '#') {
                while (i_ < src_.size() && src_[i_] != '\n') bump();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                bump();
            } else {
                break;
            }
        }
    }
    void bump() {
        if (src_[i_] == '\n') {
            ++pos_.line;
            pos_.col = 1;
        } else {
            ++pos_.col;
        }
        ++i_;
    }

    std::string src_;
    std::size_t i_ = 0;
    SourcePos pos_{1, 1};
    Token cur_;
};

// ---------------------------------------------------------------------------
// Expression parsing

// Resolves bare identifiers.  Strict symbol tables reject undeclared names.
struct ExprSymbols {
    std::map<std::string, Expr> names;
    bool allow_auto_vars = false;

    Expr resolve(const std::string& name, SourcePos pos) const {
        auto it = names.find(name);
        if (it != names.end()) return it->second;
        if (allow_auto_vars)
            return Expr::jet(ExprPool::instance().var(name), 0);
        throw ParseError("undeclared identifier '" + name + "'", pos);
    }
    // jet access through dot()/'/^(k): base must resolve to an order-0 jet
    Expr resolve_jet(const std::string& name, int order, SourcePos pos) const {
        Expr base = resolve(name, pos);
        if (order == 0) return base;
        const auto& r = base.rep();
        if (r.den.empty() && r.scale == CRational(1) &&
            r.num.terms.size() == 1 &&
            r.num.terms[0].second == CRational(1) &&
            r.num.terms[0].first.factors.size() == 1 &&
            r.num.terms[0].first.factors[0].second == 1) {
            const Atom& a =
                ExprPool::instance().atom(r.num.terms[0].first.factors[0].first);
            if (a.kind == AtomKind::Jet)
                return Expr::jet(a.jet.var, a.jet.order + order);
        }
        throw ParseError("'" + name + "' is not a differentiable coordinate", pos);
    }
};

namespace detail {

class ExprParser {
  public:
    ExprParser(Lexer& lx, const ExprSymbols& syms) : lx_(lx), syms_(syms) {}

    Expr parse() { return parse_sum(); }
    Expr parse_factor() { return parse_unary(); }

  private:
    Expr parse_sum() {
        Expr e = parse_product();
        while (lx_.at(Tok::Plus) || lx_.at(Tok::Minus)) {
            bool minus = lx_.next().kind == Tok::Minus;
            Expr rhs = parse_product();
            e = minus ? e - rhs : e + rhs;
        }
        return e;
    }
    Expr parse_product() {
        Expr e = parse_unary();
        while (lx_.at(Tok::Star) || lx_.at(Tok::Slash)) {
            bool div = lx_.next().kind == Tok::Slash;
            Expr rhs = parse_unary();
            if (div) {
                if (rhs.is_zero_canonical())
                    throw ParseError("division by zero", lx_.peek().pos);
                e = e / rhs;
            } else {
                e = e * rhs;
            }
        }
        return e;
    }
    Expr parse_unary() {
        if (lx_.accept(Tok::Minus)) return -parse_unary();
        if (lx_.accept(Tok::Plus)) return parse_unary();
        return parse_power();
    }
    Expr parse_power() {
        Expr base = parse_primary();
        if (lx_.at(Tok::Caret)) {
            lx_.next();
            bool paren = lx_.accept(Tok::LParen);
            bool neg = lx_.accept(Tok::Minus);
            Token t = lx_.expect(Tok::Number, "an integer exponent");
            if (t.text.find('.') != std::string::npos)
                throw ParseError("exponent must be an integer", t.pos);
            int k = std::stoi(t.text);
            if (paren) lx_.expect(Tok::RParen, "')'");
            return pow(base, neg ? -k : k);
        }
        return base;
    }
    Expr parse_primary() {
        Token t = lx_.next();
        switch (t.kind) {
            case Tok::Number: return Expr::number(parse_rational(t));
            case Tok::LParen: {
                Expr e = parse_sum();
                lx_.expect(Tok::RParen, "')'");
                return e;
            }
            case Tok::Ident: return parse_ident(t);
            default: throw ParseError("expected an expression", t.pos);
        }
    }
    Expr parse_ident(const Token& t) {
        const std::string& name = t.text;
        if (lx_.at(Tok::LParen)) {
            if (name == "dot" || name == "ddot") {
                lx_.next();
                Token v = lx_.expect(Tok::Ident, "a coordinate name");
                int extra = 0;
                while (lx_.accept(Tok::Prime)) ++extra;
                lx_.expect(Tok::RParen, "')'");
                int order = (name == "dot" ? 1 : 2) + extra;
                return jet_suffixes(v, order);
            }
            if (name == "sin" || name == "cos" || name == "tan" ||
                name == "exp" || name == "ln" || name == "atan") {
                lx_.next();
                Expr arg = parse_sum();
                lx_.expect(Tok::RParen, "')'");
                if (name == "sin") return sin(arg);
                if (name == "cos") return cos(arg);
                if (name == "tan") return tan(arg);
                if (name == "exp") return exp(arg);
                if (name == "atan") return atan(arg);
                return ln(arg);
            }
            throw ParseError("unknown function '" + name + "'", t.pos);
        }
        return jet_suffixes(t, 0);
    }
    // handles x', x'', x^(k); `base_order` is the order already implied
    Expr jet_suffixes(const Token& name, int base_order) {
        int order = base_order;
        while (lx_.accept(Tok::Prime)) ++order;
        // x^(k) jet syntax: caret immediately followed by a parenthesized
        // non-negative integer literal
        if (lx_.at(Tok::Caret)) {
            Lexer save = lx_;  // tentative parse
            lx_.next();
            if (lx_.at(Tok::LParen)) {
                lx_.next();
                if (lx_.at(Tok::Number) &&
                    lx_.peek().text.find('.') == std::string::npos) {
                    Token num = lx_.next();
                    if (lx_.at(Tok::RParen)) {
                        lx_.next();
                        order += std::stoi(num.text);
                        return syms_.resolve_jet(name.text, order, name.pos);
                    }
                }
            }
            lx_ = save;  // plain power, handled by the caller
        }
        return syms_.resolve_jet(name.text, order, name.pos);
    }

    Rational parse_rational(const Token& t) {
        auto dot = t.text.find('.');
        if (dot == std::string::npos) return Rational(BigInt(t.text));
        std::string whole = t.text.substr(0, dot);
        std::string frac = t.text.substr(dot + 1);
        BigInt scale = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
        BigInt num = BigInt(whole.empty() ? "0" : whole) * scale +
                     BigInt(frac.empty() ? "0" : frac);
        return Rational(num, scale);
    }

    Lexer& lx_;
    const ExprSymbols& syms_;
};

}  // namespace detail

inline Expr parse_expr(Lexer& lx, const ExprSymbols& syms) {
    return detail::ExprParser(lx, syms).parse();
}

// one multiplicative factor (primary with optional sign and power); used by
// the form parser where '+'/'-' separate terms
inline Expr parse_scalar_factor(Lexer& lx, const ExprSymbols& syms) {
    return detail::ExprParser(lx, syms).parse_factor();
}

inline Expr parse_expr(const std::string& text, const ExprSymbols& syms) {
    Lexer lx(text);
    Expr e = parse_expr(lx, syms);
    if (!lx.at(Tok::End))
        throw ParseError("trailing input after expression", lx.peek().pos);
    return e;
}

// parse with auto-interned variables (tests, matrix files)
inline Expr parse_expr(const std::string& text) {
    ExprSymbols syms;
    syms.allow_auto_vars = true;
    return parse_expr(text, syms);
}

}  // namespace flatcert
