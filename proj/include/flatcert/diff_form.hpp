// Exterior calculus on the jet manifold: p-forms with scalar-expression
// coefficients over the basis dx_i^(j), wedge, exterior derivative, the
// Cartan-field Lie derivative, and pullback along jet maps.
#pragma once

#include "expr_text.hpp"
#include "symexpr.hpp"

namespace flatcert {

struct JetWindow {
    int max_order = 32;
    void check(int order) const {
        if (order > max_order)
            throw WindowExceeded("jet order " + std::to_string(order) +
                                 " exceeds the declared window " +
                                 std::to_string(max_order));
    }
};

struct WedgeBasis {
    std::vector<JetCoord> d;  // strictly increasing (var, order)
    auto operator<=>(const WedgeBasis&) const = default;
};

// sorts coords, returns parity sign; 0 if a differential repeats
inline int normalize_wedge(std::vector<JetCoord>& v) {
    int sign = 1;
    for (std::size_t i = 1; i < v.size(); ++i)
        for (std::size_t j = i; j > 0 && v[j] < v[j - 1]; --j) {
            std::swap(v[j], v[j - 1]);
            sign = -sign;
        }
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] == v[i - 1]) return 0;
    return sign;
}

class DiffForm {
  public:
    DiffForm() = default;
    explicit DiffForm(int degree) : degree_(degree) {}

    static DiffForm scalar(Expr e) {
        DiffForm f(0);
        f.add(WedgeBasis{}, e);
        return f;
    }
    static DiffForm d_coord(const JetCoord& c) {
        DiffForm f(1);
        f.add(WedgeBasis{{c}}, kOne);
        return f;
    }

    int degree() const { return degree_; }
    bool is_zero() const { return terms_.empty(); }
    const std::map<WedgeBasis, Expr>& terms() const { return terms_; }
    Expr coeff(const WedgeBasis& b) const {
        auto it = terms_.find(b);
        return it == terms_.end() ? kZero : it->second;
    }

    void add(WedgeBasis b, Expr c) {
        if (static_cast<int>(b.d.size()) != degree_)
            throw DimensionMismatch("wedge basis degree mismatch");
        if (c.is_zero_canonical()) return;
        auto [it, inserted] = terms_.emplace(std::move(b), c);
        if (!inserted) {
            it->second = it->second + c;
            if (it->second.is_zero_canonical()) terms_.erase(it);
        }
    }

    bool operator==(const DiffForm& o) const {
        return degree_ == o.degree_ && terms_ == o.terms_;
    }

    friend DiffForm operator+(const DiffForm& a, const DiffForm& b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        if (a.degree_ != b.degree_)
            throw DimensionMismatch("cannot add forms of different degree");
        DiffForm r = a;
        for (auto& [w, c] : b.terms_) r.add(w, c);
        return r;
    }
    friend DiffForm operator-(const DiffForm& a) {
        DiffForm r(a.degree_);
        for (auto& [w, c] : a.terms_) r.terms_.emplace(w, -c);
        return r;
    }
    friend DiffForm operator-(const DiffForm& a, const DiffForm& b) {
        return a + (-b);
    }
    friend DiffForm operator*(const Expr& s, const DiffForm& a) {
        DiffForm r(a.degree_);
        for (auto& [w, c] : a.terms_) r.add(w, s * c);
        return r;
    }

    int max_order() const {
        int mx = -1;
        for (auto& [w, c] : terms_) {
            for (auto& d : w.d) mx = std::max(mx, d.order);
            mx = std::max(mx, flatcert::max_jet_order(c));
        }
        return mx;
    }

  private:
    int degree_ = 0;
    std::map<WedgeBasis, Expr> terms_;
};

inline bool canonically_equal(const DiffForm& a, const DiffForm& b) {
    if (a.is_zero() || b.is_zero()) return a.is_zero() && b.is_zero();
    if (a.degree() != b.degree()) return false;
    return (a - b).is_zero();
}

inline DiffForm wedge(const DiffForm& a, const DiffForm& b) {
    DiffForm r(a.degree() + b.degree());
    for (auto& [wa, ca] : a.terms())
        for (auto& [wb, cb] : b.terms()) {
            std::vector<JetCoord> v = wa.d;
            v.insert(v.end(), wb.d.begin(), wb.d.end());
            int sign = normalize_wedge(v);
            if (sign == 0) continue;
            r.add(WedgeBasis{std::move(v)},
                  sign > 0 ? ca * cb : -(ca * cb));
        }
    return r;
}

// d of a scalar: sum over jet coordinates of the coefficient
inline DiffForm d_scalar(const Expr& e) {
    DiffForm r(1);
    for (auto& c : jet_coords_of(e)) {
        Expr de = partial(e, c);
        if (!de.is_zero_canonical()) r.add(WedgeBasis{{c}}, de);
    }
    return r;
}

inline DiffForm exterior_d(const DiffForm& a) {
    if (a.degree() == 0) {
        DiffForm r(1);
        for (auto& [w, c] : a.terms()) r = r + d_scalar(c);
        return r;
    }
    DiffForm r(a.degree() + 1);
    for (auto& [w, c] : a.terms()) {
        DiffForm dc = d_scalar(c);
        for (auto& [wc, cc] : dc.terms()) {
            std::vector<JetCoord> v = wc.d;
            v.insert(v.end(), w.d.begin(), w.d.end());
            int sign = normalize_wedge(v);
            if (sign == 0) continue;
            r.add(WedgeBasis{std::move(v)}, sign > 0 ? cc : -cc);
        }
    }
    return r;
}

// Lie derivative along the trivial Cartan field: L(dx_i^(j)) = dx_i^(j+1),
// extended as a degree-0 derivation; commutes with d.
inline DiffForm lie_derivative_form(const DiffForm& a,
                                    const JetWindow& window = {}) {
    if (a.degree() == 0) {
        DiffForm r(0);
        for (auto& [w, c] : a.terms()) r.add(w, total_derivative(c));
        return r;
    }
    DiffForm r(a.degree());
    for (auto& [w, c] : a.terms()) {
        Expr lc = total_derivative(c);
        if (!lc.is_zero_canonical()) r.add(w, lc);
        for (std::size_t k = 0; k < w.d.size(); ++k) {
            std::vector<JetCoord> v = w.d;
            window.check(v[k].order + 1);
            v[k] = JetCoord{v[k].var, v[k].order + 1};
            int sign = normalize_wedge(v);
            if (sign == 0) continue;
            r.add(WedgeBasis{std::move(v)}, sign > 0 ? c : -c);
        }
    }
    return r;
}

inline DiffForm lie_derivative_form(const DiffForm& a, int times,
                                    const JetWindow& window = {}) {
    DiffForm r = a;
    for (int i = 0; i < times; ++i) r = lie_derivative_form(r, window);
    return r;
}

// ---------------------------------------------------------------------------
// Jet maps x_i = phi_{i,0}(ybar) with prolongation phi_{i,k} = L^k phi_{i,0}

class JetMap {
  public:
    JetMap() = default;
    JetMap(std::vector<VarId> targets, std::vector<Expr> components)
        : targets_(std::move(targets)), comp0_(std::move(components)) {
        if (targets_.size() != comp0_.size())
            throw DimensionMismatch("jet map targets/components mismatch");
    }

    static JetMap identity(const std::vector<VarId>& vars) {
        std::vector<Expr> comps;
        for (VarId v : vars) comps.push_back(Expr::jet(v, 0));
        return JetMap(vars, comps);
    }

    const std::vector<VarId>& targets() const { return targets_; }
    int index_of(VarId v) const {
        for (std::size_t i = 0; i < targets_.size(); ++i)
            if (targets_[i] == v) return static_cast<int>(i);
        return -1;
    }
    // phi_{i,k}
    Expr component(int i, int k, const JetWindow& window = {}) const {
        window.check(k);
        auto key = std::make_pair(i, k);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        Expr e = (k == 0) ? comp0_[static_cast<std::size_t>(i)]
                          : total_derivative(component(i, k - 1, window));
        cache_.emplace(key, e);
        return e;
    }
    Expr component(int i) const { return comp0_[static_cast<std::size_t>(i)]; }

    // substitution rules for every target jet occurring in e
    std::map<JetCoord, Expr> rules_for(const Expr& e,
                                       const JetWindow& window = {}) const {
        std::map<JetCoord, Expr> rules;
        for (auto& c : jet_coords_of(e)) {
            int i = index_of(c.var);
            if (i >= 0) rules.emplace(c, component(i, c.order, window));
        }
        return rules;
    }
    Expr pull_scalar(const Expr& e, const JetWindow& window = {}) const {
        return substitute(e, rules_for(e, window));
    }

  private:
    std::vector<VarId> targets_;
    std::vector<Expr> comp0_;
    mutable std::map<std::pair<int, int>, Expr> cache_;
};

// backward image of a form along the map
inline DiffForm pullback(const JetMap& phi, const DiffForm& a,
                         const JetWindow& window = {}) {
    DiffForm r(a.degree());
    for (auto& [w, c] : a.terms()) {
        DiffForm piece = DiffForm::scalar(phi.pull_scalar(c, window));
        for (auto& dcoord : w.d) {
            int i = phi.index_of(dcoord.var);
            DiffForm dphi;
            if (i < 0) {
                dphi = DiffForm::d_coord(dcoord);  // coordinate not in the map
            } else {
                dphi = d_scalar(phi.component(i, dcoord.order, window));
            }
            piece = wedge(piece, dphi);
        }
        // piece has degree a.degree() now (scalar wedge forms)
        for (auto& [wp, cp] : piece.terms()) r.add(wp, cp);
    }
    return r;
}

inline std::string to_text(const DiffForm& f) {
    if (f.is_zero()) return "0";
    std::string out;
    bool first = true;
    for (auto& [w, c] : f.terms()) {
        std::string basis;
        for (std::size_t i = 0; i < w.d.size(); ++i) {
            if (i) basis += "^";
            basis += "d[" + detail::jet_text(w.d[i]) + "]";
        }
        std::string cs = to_text(c);
        std::string piece;
        if (basis.empty()) {
            piece = cs;
        } else if (c.is_one()) {
            piece = basis;
        } else if ((-c).is_one()) {
            piece = "-" + basis;
        } else {
            bool paren = c.rep().num.terms.size() > 1;
            piece = (paren ? "(" + cs + ")" : cs) + "*" + basis;
        }
        if (first) {
            out = piece;
            first = false;
        } else if (!piece.empty() && piece[0] == '-') {
            out += " - " + piece.substr(1);
        } else {
            out += " + " + piece;
        }
    }
    return out;
}

// text parser for forms: `(-tan(theta))*d[x] + d[y]`, `d[theta]^d[x]` for
// wedges; terms are products of scalar factors and wedge chains
inline DiffForm parse_form(const std::string& text, const ExprSymbols& syms,
                           int expected_degree = -1) {
    Lexer lx(text);
    auto at_wedge = [&]() -> bool {
        if (!lx.at(Tok::Ident) || lx.peek().text != "d") return false;
        Lexer save = lx;
        lx.next();
        bool isw = lx.at(Tok::LBracket);
        lx = save;
        return isw;
    };
    auto parse_d = [&]() -> JetCoord {
        Token d = lx.expect(Tok::Ident, "d[...]");
        if (d.text != "d") throw ParseError("expected d[...]", d.pos);
        lx.expect(Tok::LBracket, "'['");
        Token v = lx.expect(Tok::Ident, "a coordinate");
        int order = 0;
        std::string name = v.text;
        if (name == "dot" || name == "ddot") {
            lx.expect(Tok::LParen, "'('");
            Token inner = lx.expect(Tok::Ident, "a coordinate");
            lx.expect(Tok::RParen, "')'");
            order = name == "dot" ? 1 : 2;
            name = inner.text;
        }
        while (lx.accept(Tok::Prime)) ++order;
        if (lx.accept(Tok::Caret)) {
            lx.expect(Tok::LParen, "'('");
            Token num = lx.expect(Tok::Number, "a jet order");
            lx.expect(Tok::RParen, "')'");
            order += std::stoi(num.text);
        }
        lx.expect(Tok::RBracket, "']'");
        Expr base = syms.resolve(name, v.pos);
        auto coords = jet_coords_of(base);
        if (coords.size() != 1 || coords[0].order != 0)
            throw ParseError("'" + name + "' is not a coordinate", v.pos);
        return JetCoord{coords[0].var, order};
    };

    std::optional<DiffForm> result;
    bool negate = lx.accept(Tok::Minus);
    while (true) {
        Expr coeff = kOne;
        std::vector<JetCoord> ws;
        while (true) {
            if (at_wedge()) {
                ws.push_back(parse_d());
                while (lx.accept(Tok::Caret)) ws.push_back(parse_d());
            } else {
                coeff = coeff * parse_scalar_factor(lx, syms);
            }
            if (lx.accept(Tok::Star)) continue;
            if (lx.at(Tok::Slash)) {
                lx.next();
                coeff = coeff / parse_scalar_factor(lx, syms);
                continue;
            }
            break;
        }
        if (negate) coeff = -coeff;
        int sign = normalize_wedge(ws);
        if (!result && !(ws.empty() && coeff.is_zero_canonical()))
            result = DiffForm(static_cast<int>(ws.size()));
        if (result && static_cast<int>(ws.size()) != result->degree())
            throw ParseError("mixed form degrees in one expression",
                             lx.peek().pos);
        if (result && sign != 0)
            result->add(WedgeBasis{std::move(ws)}, sign > 0 ? coeff : -coeff);
        if (lx.accept(Tok::Plus)) {
            negate = false;
            continue;
        }
        if (lx.accept(Tok::Minus)) {
            negate = true;
            continue;
        }
        break;
    }
    if (!lx.at(Tok::End))
        throw ParseError("trailing input after form", lx.peek().pos);
    if (!result) return DiffForm(std::max(expected_degree, 0));
    if (expected_degree >= 0 && result->degree() != expected_degree &&
        !result->is_zero())
        throw ParseError("unexpected form degree", lx.peek().pos);
    return *result;
}

}  // namespace flatcert
