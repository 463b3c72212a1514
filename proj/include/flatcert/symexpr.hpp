// Hash-consed symbolic expression kernel over jet coordinates.
//
// Expressions are canonical fractions scale * num / (f1^e1 * ... * fk^ek)
// where num and the fi are sparse Laurent polynomials over interned atoms:
// jet coordinates x_i^(j), named parameters, phasors exp(i*arg) encoding the
// trigonometric pair sin/cos of an argument, and the opaque heads
// exp/ln/atan.  Coefficients are Gaussian rationals.  The phasor encoding
// makes the trigonometric fragment relation-free, so structural equality of
// the canonical form decides the zero test there and the heuristic gcd is
// valid for fraction reduction; sin, cos, tan are user-level constructors
// and the text form converts back to sin/cos powers.
//
// All values are immutable and interned; the intern and memo tables are the
// only synchronized state.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace flatcert {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EvalError : Error {
    using Error::Error;
};
struct WindowExceeded : Error {
    using Error::Error;
};
struct CyclicSubstitution : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline std::uint64_t hash_mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

inline std::uint64_t hash_rational(const Rational& r) {
    const BigInt mod("2305843009213693951");  // 2^61-1
    BigInt n = numerator(r) % mod;
    BigInt d = denominator(r) % mod;
    if (n < 0) n += mod;
    std::uint64_t h = n.convert_to<std::uint64_t>();
    return hash_mix(h, d.convert_to<std::uint64_t>());
}

// Gaussian rational coefficients re + im*i
struct CRational {
    Rational re{0}, im{0};

    CRational() = default;
    CRational(Rational r) : re(std::move(r)) {}
    CRational(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}
    CRational(int n) : re(n) {}
    CRational(long long n) : re(n) {}

    bool is_zero() const { return re == 0 && im == 0; }
    bool is_real() const { return im == 0; }
    bool operator==(const CRational& o) const { return re == o.re && im == o.im; }
    bool operator!=(const CRational& o) const { return !(*this == o); }

    CRational operator-() const { return {-re, -im}; }
    friend CRational operator+(const CRational& a, const CRational& b) {
        return {a.re + b.re, a.im + b.im};
    }
    friend CRational operator-(const CRational& a, const CRational& b) {
        return {a.re - b.re, a.im - b.im};
    }
    friend CRational operator*(const CRational& a, const CRational& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend CRational operator/(const CRational& a, const CRational& b) {
        Rational n = b.re * b.re + b.im * b.im;
        if (n == 0) throw Error("division by zero coefficient");
        return {(a.re * b.re + a.im * b.im) / n, (a.im * b.re - a.re * b.im) / n};
    }
    CRational& operator+=(const CRational& o) { return *this = *this + o; }
    CRational& operator*=(const CRational& o) { return *this = *this * o; }
    CRational& operator/=(const CRational& o) { return *this = *this / o; }

    std::uint64_t hash() const {
        return hash_mix(hash_rational(re), hash_rational(im));
    }
};

inline CRational cr_i() { return {Rational(0), Rational(1)}; }

// ---------------------------------------------------------------------------
// Atoms

using VarId = int;

struct JetCoord {
    VarId var = 0;
    int order = 0;
    friend auto operator<=>(const JetCoord&, const JetCoord&) = default;
};

// Phasor(arg) stands for exp(i*arg); it is the only atom kind whose monomial
// exponent may be negative.
enum class AtomKind : std::uint8_t { Jet, Param, Phasor, Exp, Ln, Atan, Sin, Cos };
// Sin/Cos only appear in transient display polynomials built by the printer.

inline bool atom_kind_is_func(AtomKind k) {
    return k != AtomKind::Jet && k != AtomKind::Param;
}

using ExprId = std::uint32_t;
using AtomId = std::uint32_t;

struct Atom {
    AtomKind kind = AtomKind::Jet;
    JetCoord jet{};       // Jet
    std::string name;     // Param
    ExprId arg = 0;       // function heads

    bool operator==(const Atom& o) const {
        if (kind != o.kind) return false;
        switch (kind) {
            case AtomKind::Jet: return jet == o.jet;
            case AtomKind::Param: return name == o.name;
            default: return arg == o.arg;
        }
    }
    std::uint64_t hash() const {
        std::uint64_t h = static_cast<std::uint64_t>(kind);
        switch (kind) {
            case AtomKind::Jet:
                h = hash_mix(h, static_cast<std::uint64_t>(jet.var));
                h = hash_mix(h, static_cast<std::uint64_t>(jet.order));
                break;
            case AtomKind::Param:
                h = hash_mix(h, std::hash<std::string>{}(name));
                break;
            default:
                h = hash_mix(h, arg);
        }
        return h;
    }
};

// ---------------------------------------------------------------------------
// Monomials and polynomials (Laurent in the phasor atoms)

struct Monomial {
    // sorted by atom id, exponents nonzero (negative only for phasors)
    std::vector<std::pair<AtomId, int>> factors;

    bool operator==(const Monomial& o) const { return factors == o.factors; }
    bool is_one() const { return factors.empty(); }
    int exponent_of(AtomId a) const {
        for (auto& [id, e] : factors)
            if (id == a) return e;
        return 0;
    }
    int total_degree() const {
        int d = 0;
        for (auto& [id, e] : factors) d += e > 0 ? e : -e;
        return d;
    }
    std::uint64_t hash() const {
        std::uint64_t h = 0x12345;
        for (auto& [id, e] : factors) {
            h = hash_mix(h, id);
            h = hash_mix(h, static_cast<std::uint64_t>(e + 1024));
        }
        return h;
    }
};

// graded lexicographic order (admissible on true polynomials; extended to
// Laurent monomials by the absolute degree)
inline std::strong_ordering compare(const Monomial& a, const Monomial& b) {
    int da = a.total_degree(), db = b.total_degree();
    if (da != db) return da <=> db;
    std::size_t i = 0, j = 0;
    while (i < a.factors.size() && j < b.factors.size()) {
        if (a.factors[i].first != b.factors[j].first)
            return a.factors[i].first < b.factors[j].first
                       ? std::strong_ordering::greater
                       : std::strong_ordering::less;
        if (a.factors[i].second != b.factors[j].second)
            return a.factors[i].second <=> b.factors[j].second;
        ++i, ++j;
    }
    if (i < a.factors.size()) return std::strong_ordering::greater;
    if (j < b.factors.size()) return std::strong_ordering::less;
    return std::strong_ordering::equal;
}

inline Monomial mono_mul(const Monomial& a, const Monomial& b) {
    Monomial r;
    r.factors.reserve(a.factors.size() + b.factors.size());
    std::size_t i = 0, j = 0;
    while (i < a.factors.size() || j < b.factors.size()) {
        if (j == b.factors.size() ||
            (i < a.factors.size() && a.factors[i].first < b.factors[j].first)) {
            r.factors.push_back(a.factors[i++]);
        } else if (i == a.factors.size() || b.factors[j].first < a.factors[i].first) {
            r.factors.push_back(b.factors[j++]);
        } else {
            int e = a.factors[i].second + b.factors[j].second;
            if (e != 0) r.factors.emplace_back(a.factors[i].first, e);
            ++i, ++j;
        }
    }
    return r;
}

// a/b when all resulting exponents stay >= 0 (used on true polynomials)
inline std::optional<Monomial> mono_div(const Monomial& a, const Monomial& b) {
    Monomial r;
    std::size_t i = 0;
    for (auto& [id, e] : b.factors) {
        while (i < a.factors.size() && a.factors[i].first < id)
            r.factors.push_back(a.factors[i++]);
        if (i == a.factors.size() || a.factors[i].first != id ||
            a.factors[i].second < e)
            return std::nullopt;
        if (a.factors[i].second > e)
            r.factors.emplace_back(id, a.factors[i].second - e);
        ++i;
    }
    while (i < a.factors.size()) r.factors.push_back(a.factors[i++]);
    return r;
}

struct Poly {
    // terms sorted by descending monomial order (leading term first)
    std::vector<std::pair<Monomial, CRational>> terms;

    bool is_zero() const { return terms.empty(); }
    bool is_constant() const {
        return terms.empty() || (terms.size() == 1 && terms[0].first.is_one());
    }
    const CRational& leading_coeff() const { return terms.front().second; }
    const Monomial& leading_mono() const { return terms.front().first; }

    bool operator==(const Poly& o) const { return terms == o.terms; }
    std::uint64_t hash() const {
        std::uint64_t h = 0xabcdef;
        for (auto& [m, c] : terms) {
            h = hash_mix(h, m.hash());
            h = hash_mix(h, c.hash());
        }
        return h;
    }
};

inline Poly poly_zero() { return {}; }

inline Poly poly_const(CRational c) {
    Poly p;
    if (!c.is_zero()) p.terms.emplace_back(Monomial{}, std::move(c));
    return p;
}

inline Poly poly_atom(AtomId a, int exp = 1) {
    Poly p;
    Monomial m;
    if (exp != 0) m.factors.emplace_back(a, exp);
    p.terms.emplace_back(std::move(m), CRational(1));
    return p;
}

inline Poly poly_normalize_terms(std::vector<std::pair<Monomial, CRational>> v) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
        return compare(a.first, b.first) == std::strong_ordering::greater;
    });
    Poly p;
    for (auto& [m, c] : v) {
        if (!p.terms.empty() && p.terms.back().first == m)
            p.terms.back().second += c;
        else
            p.terms.emplace_back(std::move(m), std::move(c));
        if (!p.terms.empty() && p.terms.back().second.is_zero())
            p.terms.pop_back();
    }
    return p;
}

inline Poly poly_add(const Poly& a, const Poly& b) {
    std::vector<std::pair<Monomial, CRational>> v;
    v.reserve(a.terms.size() + b.terms.size());
    v.insert(v.end(), a.terms.begin(), a.terms.end());
    v.insert(v.end(), b.terms.begin(), b.terms.end());
    return poly_normalize_terms(std::move(v));
}

inline Poly poly_neg(const Poly& a) {
    Poly r = a;
    for (auto& [m, c] : r.terms) c = -c;
    return r;
}

inline Poly poly_sub(const Poly& a, const Poly& b) { return poly_add(a, poly_neg(b)); }

inline Poly poly_mul(const Poly& a, const Poly& b) {
    std::vector<std::pair<Monomial, CRational>> v;
    v.reserve(a.terms.size() * b.terms.size());
    for (auto& [ma, ca] : a.terms)
        for (auto& [mb, cb] : b.terms)
            v.emplace_back(mono_mul(ma, mb), ca * cb);
    return poly_normalize_terms(std::move(v));
}

inline Poly poly_scale(const Poly& a, const CRational& c) {
    if (c.is_zero()) return {};
    Poly r = a;
    for (auto& [m, k] : r.terms) k *= c;
    return r;
}

// multiplies by the monomial shift (used for Laurent normalization)
inline Poly poly_shift(const Poly& a, const Monomial& shift) {
    if (shift.is_one()) return a;
    Poly r;
    r.terms.reserve(a.terms.size());
    for (auto& [m, c] : a.terms) r.terms.emplace_back(mono_mul(m, shift), c);
    // shifting by a fixed monomial preserves the ordering
    return r;
}

// the monomial of smallest exponents per atom (negative parts), whose inverse
// shift turns a Laurent polynomial into a true polynomial
inline Monomial laurent_denominator(const Poly& p) {
    std::map<AtomId, int> mins;
    for (auto& [m, c] : p.terms)
        for (auto& [id, e] : m.factors)
            if (e < 0) {
                auto [it, fresh] = mins.emplace(id, e);
                if (!fresh) it->second = std::min(it->second, e);
            }
    Monomial r;
    for (auto& [id, e] : mins) r.factors.emplace_back(id, -e);
    return r;
}

inline bool poly_is_true_poly(const Poly& p) {
    for (auto& [m, c] : p.terms)
        for (auto& [id, e] : m.factors)
            if (e < 0) return false;
    return true;
}

inline int poly_degree_in(const Poly& p, AtomId a) {
    int d = 0;
    for (auto& [m, c] : p.terms) d = std::max(d, m.exponent_of(a));
    return d;
}

// exact division of true polynomials; nullopt if b does not divide a
inline std::optional<Poly> poly_exact_div(const Poly& a, const Poly& b) {
    if (b.is_zero()) return std::nullopt;
    if (a.is_zero()) return poly_zero();
    Poly rem = a;
    std::vector<std::pair<Monomial, CRational>> q;
    while (!rem.is_zero()) {
        auto m = mono_div(rem.leading_mono(), b.leading_mono());
        if (!m) return std::nullopt;
        CRational c = rem.leading_coeff() / b.leading_coeff();
        q.emplace_back(*m, c);
        Poly t;
        t.terms.emplace_back(std::move(*m), std::move(c));
        rem = poly_sub(rem, poly_mul(t, b));
    }
    return poly_normalize_terms(std::move(q));
}

// ---------------------------------------------------------------------------
// Expression pool

struct ExprRep {
    // value = scale * num / prod(f_i^e_i); num is a primitive Laurent
    // polynomial, the f_i are primitive unit-normalized true polynomials
    CRational scale{Rational(1)};
    Poly num;
    std::vector<std::pair<Poly, int>> den;

    bool operator==(const ExprRep& o) const {
        return scale == o.scale && num == o.num && den == o.den;
    }
    std::uint64_t hash() const {
        std::uint64_t h = scale.hash();
        h = hash_mix(h, num.hash());
        for (auto& [f, e] : den) {
            h = hash_mix(h, f.hash());
            h = hash_mix(h, static_cast<std::uint64_t>(e));
        }
        return h;
    }
};

inline std::strong_ordering compare(const Poly& a, const Poly& b) {
    const auto n = std::min(a.terms.size(), b.terms.size());
    for (std::size_t i = 0; i < n; ++i) {
        auto c = compare(a.terms[i].first, b.terms[i].first);
        if (c != std::strong_ordering::equal) return c;
        auto cmp_rat = [](const Rational& x, const Rational& y) {
            return x < y ? std::strong_ordering::less
                 : x > y ? std::strong_ordering::greater
                         : std::strong_ordering::equal;
        };
        auto cr = cmp_rat(a.terms[i].second.re, b.terms[i].second.re);
        if (cr != std::strong_ordering::equal) return cr;
        auto ci = cmp_rat(a.terms[i].second.im, b.terms[i].second.im);
        if (ci != std::strong_ordering::equal) return ci;
    }
    return a.terms.size() <=> b.terms.size();
}

class ExprPool {
  public:
    static ExprPool& instance() {
        static ExprPool pool;
        return pool;
    }

    // --- variables
    VarId var(const std::string& name) {
        std::lock_guard lk(mu_);
        auto it = var_ids_.find(name);
        if (it != var_ids_.end()) return it->second;
        VarId id = static_cast<VarId>(var_names_.size());
        var_names_.push_back(name);
        var_ids_[name] = id;
        return id;
    }
    std::optional<VarId> find_var(const std::string& name) const {
        std::lock_guard lk(mu_);
        auto it = var_ids_.find(name);
        if (it == var_ids_.end()) return std::nullopt;
        return it->second;
    }
    const std::string& var_name(VarId v) const {
        std::lock_guard lk(mu_);
        return var_names_.at(static_cast<std::size_t>(v));
    }

    // --- atoms
    AtomId atom(Atom a) {
        std::lock_guard lk(mu_);
        auto key = a.hash();
        auto range = atom_index_.equal_range(key);
        for (auto it = range.first; it != range.second; ++it)
            if (atoms_[it->second] == a) return it->second;
        AtomId id = static_cast<AtomId>(atoms_.size());
        atoms_.push_back(std::move(a));
        atom_index_.emplace(key, id);
        return id;
    }
    const Atom& atom(AtomId id) const {
        std::lock_guard lk(mu_);
        return atoms_.at(id);
    }

    // --- expressions
    ExprId intern(ExprRep rep) {
        std::lock_guard lk(mu_);
        auto key = rep.hash();
        auto range = expr_index_.equal_range(key);
        for (auto it = range.first; it != range.second; ++it)
            if (exprs_[it->second] == rep) return it->second;
        ExprId id = static_cast<ExprId>(exprs_.size());
        exprs_.push_back(std::move(rep));
        expr_index_.emplace(key, id);
        return id;
    }
    const ExprRep& rep(ExprId id) const {
        std::lock_guard lk(mu_);
        return exprs_.at(id);
    }

    // --- memo tables
    std::optional<ExprId> memo_get(int table, std::uint64_t key) const {
        std::lock_guard lk(mu_);
        auto it = memo_[table].find(key);
        if (it == memo_[table].end()) return std::nullopt;
        return it->second;
    }
    void memo_put(int table, std::uint64_t key, ExprId v) {
        std::lock_guard lk(mu_);
        memo_[table][key] = v;
    }

    enum MemoTable { MemoTotalDeriv = 0, MemoPartial = 1, MemoCount = 2 };

  private:
    ExprPool() {
        exprs_.push_back(ExprRep{});  // id 0 is the zero expression
        expr_index_.emplace(exprs_[0].hash(), 0);
    }
    // deques: interning appends must not invalidate outstanding references
    mutable std::mutex mu_;
    std::deque<std::string> var_names_;
    std::map<std::string, VarId> var_ids_;
    std::deque<Atom> atoms_;
    std::unordered_multimap<std::uint64_t, AtomId> atom_index_;
    std::deque<ExprRep> exprs_;
    std::unordered_multimap<std::uint64_t, ExprId> expr_index_;
    mutable std::unordered_map<std::uint64_t, ExprId> memo_[MemoCount];
};

// ---------------------------------------------------------------------------
// Polynomial normalization helpers and the heuristic gcd

namespace detail {

// primitive part: divide by positive rational content and a unit in
// {1,-1,i,-i} so the leading coefficient has re > 0 (or re == 0, im > 0);
// returns the removed factor
inline CRational make_primitive(Poly& p) {
    if (p.is_zero()) return CRational(1);
    BigInt num_gcd = 0, den_lcm = 1;
    for (auto& [m, c] : p.terms) {
        num_gcd = gcd(num_gcd, numerator(c.re));
        num_gcd = gcd(num_gcd, numerator(c.im));
        den_lcm = lcm(den_lcm, denominator(c.re));
        den_lcm = lcm(den_lcm, denominator(c.im));
    }
    if (num_gcd == 0) num_gcd = 1;
    CRational content{Rational(num_gcd, den_lcm)};
    const CRational& lc = p.leading_coeff();
    CRational unit{Rational(1)};
    if (lc.re > 0) {
        unit = CRational(1);
    } else if (lc.re < 0) {
        unit = CRational(-1);
    } else {
        unit = (lc.im > 0) ? cr_i() : -cr_i();
    }
    // p = content*unit * primitive  =>  divide by content*unit
    CRational factor = content * unit;
    for (auto& [m, c] : p.terms) c /= factor;
    return factor;
}

inline BigInt poly_height(const Poly& p) {
    BigInt h = 1;
    for (auto& [m, c] : p.terms) {
        BigInt n = abs(numerator(c.re));
        if (n > h) h = n;
        n = abs(numerator(c.im));
        if (n > h) h = n;
    }
    return h;
}

inline Poly poly_eval_atom_int(const Poly& p, AtomId a, const BigInt& xi) {
    std::vector<std::pair<Monomial, CRational>> v;
    for (auto& [m, c] : p.terms) {
        Monomial rest;
        CRational mult{Rational(1)};
        for (auto& [id, e] : m.factors) {
            if (id == a)
                mult = CRational(Rational(pow(xi, static_cast<unsigned>(e))));
            else
                rest.factors.emplace_back(id, e);
        }
        v.emplace_back(std::move(rest), c * mult);
    }
    return poly_normalize_terms(std::move(v));
}

inline BigInt balanced_mod(const BigInt& c, const BigInt& xi) {
    BigInt r = c % xi;
    if (r < 0) r += xi;
    if (2 * r > xi) r -= xi;
    return r;
}

// gcd of Gaussian integers by Euclid with nearest-rounding division
inline std::pair<BigInt, BigInt> gint_gcd(BigInt are, BigInt aim, BigInt bre,
                                          BigInt bim) {
    auto round_div = [](const BigInt& n, const BigInt& d) {
        BigInt two_n = 2 * n;
        BigInt q = (two_n + (two_n >= 0 ? d : -d)) / (2 * d);
        return q;
    };
    int guard = 512;
    while ((bre != 0 || bim != 0) && guard-- > 0) {
        BigInt nb = bre * bre + bim * bim;
        BigInt qre = round_div(are * bre + aim * bim, nb);
        BigInt qim = round_div(aim * bre - are * bim, nb);
        BigInt rre = are - (qre * bre - qim * bim);
        BigInt rim = aim - (qre * bim + qim * bre);
        are = bre;
        aim = bim;
        bre = rre;
        bim = rim;
    }
    return {are, aim};
}

inline std::optional<Poly> genpoly(Poly gamma, const BigInt& xi, AtomId x,
                                   int max_digits) {
    std::vector<std::pair<Monomial, CRational>> out;
    for (int i = 0; !gamma.is_zero(); ++i) {
        if (i > max_digits) return std::nullopt;
        std::vector<std::pair<Monomial, CRational>> rest;
        for (auto& [m, c] : gamma.terms) {
            if (denominator(c.re) != 1 || denominator(c.im) != 1)
                return std::nullopt;
            BigInt dre = balanced_mod(numerator(c.re), xi);
            BigInt dim = balanced_mod(numerator(c.im), xi);
            if (dre != 0 || dim != 0) {
                Monomial mm = m;
                if (i > 0) {
                    Monomial xm;
                    xm.factors.emplace_back(x, i);
                    mm = mono_mul(m, xm);
                }
                out.emplace_back(std::move(mm),
                                 CRational{Rational(dre), Rational(dim)});
            }
            CRational r{Rational((numerator(c.re) - dre) / xi),
                        Rational((numerator(c.im) - dim) / xi)};
            if (!r.is_zero()) rest.emplace_back(m, r);
        }
        gamma = poly_normalize_terms(std::move(rest));
    }
    return poly_normalize_terms(std::move(out));
}

// heuristic multivariate gcd: integer evaluation homomorphism with xi-adic
// reconstruction; every candidate is verified by exact division, so a failed
// guess only means a missed cancellation, never a wrong result
inline std::optional<Poly> gcd_heu(const Poly& a, const Poly& b, int depth = 0) {
    if (depth > 10) return std::nullopt;
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    std::set<AtomId> atoms_a, atoms_b;
    for (auto& [m, c] : a.terms)
        for (auto& [id, e] : m.factors) atoms_a.insert(id);
    for (auto& [m, c] : b.terms)
        for (auto& [id, e] : m.factors) atoms_b.insert(id);
    std::vector<AtomId> shared;
    for (AtomId id : atoms_a)
        if (atoms_b.count(id)) shared.push_back(id);
    if (shared.empty()) {
        // gcd of Gaussian-integer contents
        auto content = [](const Poly& p) -> std::pair<BigInt, BigInt> {
            std::pair<BigInt, BigInt> g{0, 0};
            for (auto& [m, c] : p.terms) {
                if (denominator(c.re) != 1 || denominator(c.im) != 1)
                    return {1, 0};
                auto [gre, gim] =
                    gint_gcd(g.first, g.second, numerator(c.re), numerator(c.im));
                g = {gre, gim};
            }
            return g;
        };
        auto [are, aim] = content(a);
        auto [bre, bim] = content(b);
        auto [gre, gim] = gint_gcd(are, aim, bre, bim);
        Poly g = poly_const(CRational{Rational(gre), Rational(gim)});
        if (g.is_zero()) g = poly_const(CRational(1));
        return g;
    }
    AtomId x = shared.front();
    int best = 1 << 20;
    for (AtomId id : shared) {
        int d = std::max(poly_degree_in(a, id), poly_degree_in(b, id));
        if (d < best) {
            best = d;
            x = id;
        }
    }
    int max_digits = std::min(poly_degree_in(a, x), poly_degree_in(b, x)) + 1;
    BigInt ha = poly_height(a), hb = poly_height(b);
    BigInt xi = 2 * (ha < hb ? ha : hb) + 29;
    for (int attempt = 0; attempt < 4; ++attempt) {
        Poly A = poly_eval_atom_int(a, x, xi);
        Poly B = poly_eval_atom_int(b, x, xi);
        auto gamma = gcd_heu(A, B, depth + 1);
        if (gamma && !gamma->is_zero()) {
            auto g = genpoly(std::move(*gamma), xi, x, max_digits);
            if (g && !g->is_zero()) {
                make_primitive(*g);
                if (!g->is_constant()) {
                    if (poly_exact_div(a, *g) && poly_exact_div(b, *g)) return g;
                } else {
                    return poly_const(CRational(1));
                }
            }
        }
        xi = xi * 2718 / 1000 + 1;
    }
    return std::nullopt;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Expr: canonical interned fraction

class Expr {
  public:
    Expr() : id_(0) {}
    explicit Expr(ExprId id) : id_(id) {}

    static Expr number(Rational c) {
        return make(poly_const(CRational(std::move(c))), {});
    }
    static Expr integer(long long n) { return number(Rational(n)); }
    static Expr jet(VarId v, int order) {
        AtomId a = ExprPool::instance().atom(
            Atom{AtomKind::Jet, JetCoord{v, order}, {}, 0});
        return make(poly_atom(a), {});
    }
    static Expr jet(const JetCoord& c) { return jet(c.var, c.order); }
    static Expr param(const std::string& name) {
        AtomId a = ExprPool::instance().atom(Atom{AtomKind::Param, {}, name, 0});
        return make(poly_atom(a), {});
    }

    ExprId id() const { return id_; }
    const ExprRep& rep() const { return ExprPool::instance().rep(id_); }
    bool is_zero_canonical() const { return rep().num.is_zero(); }
    bool is_one() const {
        const auto& r = rep();
        return r.den.empty() && r.num.is_constant() && !r.num.is_zero() &&
               r.num.terms[0].second == CRational(1) && r.scale == CRational(1);
    }
    bool is_rational_constant() const {
        const auto& r = rep();
        return r.den.empty() && r.num.is_constant();
    }
    std::optional<Rational> as_rational() const {
        const auto& r = rep();
        if (!r.den.empty() || !r.num.is_constant()) return std::nullopt;
        if (r.num.is_zero()) return Rational(0);
        CRational v = r.scale * r.num.terms[0].second;
        if (!v.is_real()) return std::nullopt;
        return v.re;
    }

    bool operator==(const Expr& o) const { return id_ == o.id_; }
    bool operator!=(const Expr& o) const { return id_ != o.id_; }

    // canonical constructor: Laurent normalization and fraction reduction
    static Expr make(Poly num, std::vector<std::pair<Poly, int>> den,
                     CRational scale0 = CRational(1)) {
        ExprRep rep;
        if (num.is_zero() || scale0.is_zero())
            return Expr(ExprPool::instance().intern(std::move(rep)));
        CRational scale = std::move(scale0);
        // factors: make true polynomials (phasor units shift into num),
        // primitive, unit-normalized; monomial factors are pure units or
        // atoms and get split off
        std::vector<std::pair<Poly, int>> fs;
        for (auto& [f, e] : den) {
            if (e == 0) continue;
            if (f.is_zero()) throw Error("division by canonical zero");
            Poly g = f;
            Monomial shift = laurent_denominator(g);
            if (!shift.is_one()) {
                g = poly_shift(g, shift);
                // dividing by P^-k equals multiplying by P^k
                Poly unit;
                unit.terms.emplace_back(shift, CRational(1));
                for (int k = 0; k < e; ++k) num = poly_mul(num, unit);
            }
            CRational c = detail::make_primitive(g);
            for (int k = 0; k < e; ++k) scale /= c;
            if (g.is_constant()) {
                // fully a unit: already absorbed into num/scale
                continue;
            }
            if (g.terms.size() == 1) {
                // monomial factor: split into atom powers (phasor atoms are
                // units and go to num as negative powers)
                for (auto& [aid, ex] : g.terms[0].first.factors) {
                    const Atom& at = ExprPool::instance().atom(aid);
                    if (at.kind == AtomKind::Phasor) {
                        Monomial inv;
                        inv.factors.emplace_back(aid, -ex);
                        Poly u;
                        u.terms.emplace_back(std::move(inv), CRational(1));
                        for (int k = 0; k < e; ++k) num = poly_mul(num, u);
                    } else {
                        fs.emplace_back(poly_atom(aid), e * ex);
                    }
                }
            } else {
                fs.emplace_back(std::move(g), e);
            }
        }
        // merge equal factors
        std::sort(fs.begin(), fs.end(), [](const auto& a, const auto& b) {
            return compare(a.first, b.first) == std::strong_ordering::less;
        });
        std::vector<std::pair<Poly, int>> merged;
        for (auto& [f, e] : fs) {
            if (!merged.empty() && merged.back().first == f)
                merged.back().second += e;
            else
                merged.emplace_back(std::move(f), e);
        }
        // cancel factors against the numerator: whole-factor division first,
        // then partial cancellation through the gcd (may split a factor)
        Monomial num_shift = laurent_denominator(num);
        Poly nump = poly_shift(num, num_shift);  // true polynomial part
        std::vector<std::pair<Poly, int>> reduced;
        std::vector<std::pair<Poly, int>> work = std::move(merged);
        int guard = 0;
        while (!work.empty()) {
            auto [f, e] = std::move(work.back());
            work.pop_back();
            if (e == 0 || f.is_constant()) continue;
            if (nump.is_constant() || ++guard > 512) {
                reduced.emplace_back(std::move(f), e);
                continue;
            }
            auto q = poly_exact_div(nump, f);
            if (q) {
                nump = std::move(*q);
                if (e > 1) work.emplace_back(std::move(f), e - 1);
                continue;
            }
            auto g = detail::gcd_heu(nump, f);
            if (g && !g->is_constant()) {
                nump = *poly_exact_div(nump, *g);
                Poly f2 = *poly_exact_div(f, *g);
                scale /= detail::make_primitive(f2);
                if (!f2.is_constant()) work.emplace_back(std::move(f2), 1);
                if (e > 1) work.emplace_back(std::move(f), e - 1);
                continue;
            }
            reduced.emplace_back(std::move(f), e);
        }
        std::sort(reduced.begin(), reduced.end(),
                  [](const auto& a, const auto& b) {
                      return compare(a.first, b.first) ==
                             std::strong_ordering::less;
                  });
        std::vector<std::pair<Poly, int>> final_den;
        for (auto& [f, e] : reduced) {
            if (!final_den.empty() && final_den.back().first == f)
                final_den.back().second += e;
            else
                final_den.emplace_back(std::move(f), e);
        }
        // undo the numerator shift and extract content
        Monomial unshift;
        for (auto& [id, e] : num_shift.factors) unshift.factors.emplace_back(id, -e);
        num = poly_shift(nump, unshift);
        scale *= detail::make_primitive(num);
        rep.scale = std::move(scale);
        rep.num = std::move(num);
        rep.den = std::move(final_den);
        return Expr(ExprPool::instance().intern(std::move(rep)));
    }

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);

  private:
    ExprId id_;
};

inline const Expr kZero = Expr::integer(0);
inline const Expr kOne = Expr::integer(1);

namespace detail {

inline std::vector<std::pair<Poly, int>> den_union(
    const std::vector<std::pair<Poly, int>>& a,
    const std::vector<std::pair<Poly, int>>& b,
    std::vector<std::pair<Poly, int>>& a_missing,
    std::vector<std::pair<Poly, int>>& b_missing) {
    std::vector<std::pair<Poly, int>> u;
    std::size_t i = 0, j = 0;
    auto less = [](const Poly& x, const Poly& y) {
        return compare(x, y) == std::strong_ordering::less;
    };
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && less(a[i].first, b[j].first))) {
            u.push_back(a[i]);
            b_missing.push_back(a[i]);
            ++i;
        } else if (i == a.size() || less(b[j].first, a[i].first)) {
            u.push_back(b[j]);
            a_missing.push_back(b[j]);
            ++j;
        } else {
            int e = std::max(a[i].second, b[j].second);
            u.emplace_back(a[i].first, e);
            if (e > a[i].second) a_missing.emplace_back(a[i].first, e - a[i].second);
            if (e > b[j].second) b_missing.emplace_back(b[j].first, e - b[j].second);
            ++i, ++j;
        }
    }
    return u;
}

inline Poly times_factors(Poly p, const std::vector<std::pair<Poly, int>>& fs) {
    for (auto& [f, e] : fs)
        for (int k = 0; k < e; ++k) p = poly_mul(p, f);
    return p;
}

}  // namespace detail

inline Expr operator+(const Expr& a, const Expr& b) {
    const auto& ra = a.rep();
    const auto& rb = b.rep();
    if (ra.num.is_zero()) return b;
    if (rb.num.is_zero()) return a;
    std::vector<std::pair<Poly, int>> am, bm;
    auto u = detail::den_union(ra.den, rb.den, am, bm);
    // keep the common rational content in the scale
    CRational g{Rational(1)};
    if (ra.scale.is_real() && rb.scale.is_real()) {
        g = CRational{Rational(gcd(numerator(ra.scale.re), numerator(rb.scale.re)),
                               lcm(denominator(ra.scale.re), denominator(rb.scale.re)))};
        if (g.is_zero()) g = CRational(1);
    }
    Poly num =
        poly_add(poly_scale(detail::times_factors(ra.num, am), ra.scale / g),
                 poly_scale(detail::times_factors(rb.num, bm), rb.scale / g));
    return Expr::make(std::move(num), std::move(u), g);
}

inline Expr operator-(const Expr& a) {
    const auto& r = a.rep();
    return Expr::make(r.num, r.den, -r.scale);
}

inline Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

inline Expr operator*(const Expr& a, const Expr& b) {
    const auto& ra = a.rep();
    const auto& rb = b.rep();
    if (ra.num.is_zero() || rb.num.is_zero()) return kZero;
    std::vector<std::pair<Poly, int>> den = ra.den;
    den.insert(den.end(), rb.den.begin(), rb.den.end());
    return Expr::make(poly_mul(ra.num, rb.num), std::move(den),
                      ra.scale * rb.scale);
}

inline Expr operator/(const Expr& a, const Expr& b) {
    const auto& rb = b.rep();
    if (rb.num.is_zero()) throw Error("division by canonical zero");
    // b = s*nb/prod(fb): 1/b = (1/s) * prod(fb) / nb
    Poly num = detail::times_factors(poly_const(CRational(1)), rb.den);
    std::vector<std::pair<Poly, int>> den;
    den.emplace_back(rb.num, 1);
    Expr inv = Expr::make(std::move(num), std::move(den),
                          CRational(1) / rb.scale);
    return a * inv;
}

// canonical equality: interned identity; the canonical form is unique for
// the rational-trigonometric fragment, so this also decides semantic
// equality there (exp/ln/atan atoms stay opaque)
inline bool canonically_equal(const Expr& a, const Expr& b) {
    return a == b || (a - b).is_zero_canonical();
}

inline Expr pow(const Expr& a, int k) {
    if (k == 0) return kOne;
    if (k < 0) return kOne / pow(a, -k);
    Expr r = kOne;
    Expr base = a;
    int e = k;
    while (e > 0) {
        if (e & 1) r = r * base;
        base = base * base;
        e >>= 1;
    }
    return r;
}

// function heads; sin and cos build phasor combinations
inline Expr phasor(const Expr& arg, int power = 1) {
    AtomId a = ExprPool::instance().atom(Atom{AtomKind::Phasor, {}, {}, arg.id()});
    return Expr::make(poly_atom(a, power), {});
}

inline Expr func_head(AtomKind kind, const Expr& arg) {
    if (arg.is_zero_canonical()) {
        switch (kind) {
            case AtomKind::Exp: return kOne;
            case AtomKind::Atan: return kZero;
            case AtomKind::Ln: throw Error("ln(0) is undefined");
            default: break;
        }
    }
    AtomId a = ExprPool::instance().atom(Atom{kind, {}, {}, arg.id()});
    return Expr::make(poly_atom(a), {});
}

inline Expr sin(const Expr& a) {
    if (a.is_zero_canonical()) return kZero;
    // (P - P^-1) / (2i)
    Expr p = phasor(a, 1), q = phasor(a, -1);
    const auto& rp = p.rep();
    const auto& rq = q.rep();
    Poly num = poly_sub(rp.num, rq.num);
    return Expr::make(std::move(num), {},
                      CRational{Rational(0), Rational(-1, 2)});
}
inline Expr cos(const Expr& a) {
    if (a.is_zero_canonical()) return kOne;
    Expr p = phasor(a, 1), q = phasor(a, -1);
    Poly num = poly_add(p.rep().num, q.rep().num);
    return Expr::make(std::move(num), {}, CRational{Rational(1, 2)});
}
inline Expr tan(const Expr& a) { return sin(a) / cos(a); }
inline Expr exp(const Expr& a) { return func_head(AtomKind::Exp, a); }
inline Expr ln(const Expr& a) { return func_head(AtomKind::Ln, a); }
inline Expr atan(const Expr& a) { return func_head(AtomKind::Atan, a); }

// ---------------------------------------------------------------------------
// Structural queries

namespace detail {

inline void collect_atoms(const Expr& e, std::set<AtomId>& out);

inline void collect_atoms(const Poly& p, std::set<AtomId>& out) {
    for (auto& [m, c] : p.terms)
        for (auto& [id, ex] : m.factors)
            if (out.insert(id).second) {
                const Atom& a = ExprPool::instance().atom(id);
                if (atom_kind_is_func(a.kind)) collect_atoms(Expr(a.arg), out);
            }
}

inline void collect_atoms(const Expr& e, std::set<AtomId>& out) {
    const auto& r = e.rep();
    collect_atoms(r.num, out);
    for (auto& [f, ex] : r.den) collect_atoms(f, out);
}

}  // namespace detail

// all jet coordinates the expression depends on (transitively through heads)
inline std::vector<JetCoord> jet_coords_of(const Expr& e) {
    std::set<AtomId> atoms;
    detail::collect_atoms(e, atoms);
    std::set<JetCoord> coords;
    for (AtomId a : atoms) {
        const Atom& at = ExprPool::instance().atom(a);
        if (at.kind == AtomKind::Jet) coords.insert(at.jet);
    }
    return {coords.begin(), coords.end()};
}

inline std::vector<std::string> params_of(const Expr& e) {
    std::set<AtomId> atoms;
    detail::collect_atoms(e, atoms);
    std::set<std::string> names;
    for (AtomId a : atoms) {
        const Atom& at = ExprPool::instance().atom(a);
        if (at.kind == AtomKind::Param) names.insert(at.name);
    }
    return {names.begin(), names.end()};
}

inline int max_jet_order(const Expr& e, VarId v = -1) {
    int mx = -1;
    for (auto& c : jet_coords_of(e))
        if (v < 0 || c.var == v) mx = std::max(mx, c.order);
    return mx;
}

// rough size metric used for pivot tie-breaking
inline int expr_size(const Expr& e) {
    const auto& r = e.rep();
    auto poly_size = [](const Poly& p) {
        int s = 0;
        for (auto& [m, c] : p.terms) s += 1 + static_cast<int>(m.factors.size());
        return s;
    };
    int s = poly_size(r.num);
    for (auto& [f, ex] : r.den) s += poly_size(f);
    return s;
}

// ---------------------------------------------------------------------------
// Derivatives

Expr partial(const Expr& e, const JetCoord& c);

namespace detail {

// derivative of a single atom w.r.t. a jet coordinate: the phasor rule is
// dP/dc = i * (da/dc) * P
inline Expr atom_partial(AtomId id, const JetCoord& c) {
    const Atom& a = ExprPool::instance().atom(id);
    switch (a.kind) {
        case AtomKind::Jet:
            return a.jet == c ? kOne : kZero;
        case AtomKind::Param:
            return kZero;
        case AtomKind::Phasor: {
            Expr da = partial(Expr(a.arg), c);
            if (da.is_zero_canonical()) return kZero;
            Expr i_unit = Expr::make(poly_const(cr_i()), {});
            return i_unit * da * phasor(Expr(a.arg), 1);
        }
        default: {
            Expr arg(a.arg);
            Expr da = partial(arg, c);
            if (da.is_zero_canonical()) return kZero;
            switch (a.kind) {
                case AtomKind::Exp: return exp(arg) * da;
                case AtomKind::Ln: return da / arg;
                case AtomKind::Atan: return da / (kOne + arg * arg);
                default: throw Error("unreachable atom kind");
            }
        }
    }
}

// formal partial of a polynomial w.r.t. an atom (valid for Laurent powers)
inline Poly poly_formal_partial(const Poly& p, AtomId a) {
    std::vector<std::pair<Monomial, CRational>> v;
    for (auto& [m, c] : p.terms) {
        int e = m.exponent_of(a);
        if (e == 0) continue;
        Monomial r;
        for (auto& [id, ex] : m.factors) {
            int ne = (id == a) ? ex - 1 : ex;
            if (ne != 0) r.factors.emplace_back(id, ne);
        }
        v.emplace_back(std::move(r), c * CRational(e));
    }
    return poly_normalize_terms(std::move(v));
}

inline Expr poly_partial(const Poly& p, const JetCoord& c) {
    // chain rule: d p / d c = sum over atoms of (formal partial) * (atom
    // derivative); d(P^e) = e P^(e-1) * (i da P) works uniformly
    std::set<AtomId> atoms;
    for (auto& [m, cf] : p.terms)
        for (auto& [id, e] : m.factors) atoms.insert(id);
    Expr sum = kZero;
    for (AtomId a : atoms) {
        Expr da = atom_partial(a, c);
        if (da.is_zero_canonical()) continue;
        Poly fp = poly_formal_partial(p, a);
        if (fp.is_zero()) continue;
        sum = sum + Expr::make(fp, {}) * da;
    }
    return sum;
}

}  // namespace detail

inline Expr partial(const Expr& e, const JetCoord& c) {
    auto& pool = ExprPool::instance();
    // exact key: (expr id, var, order); vars and orders stay small
    std::uint64_t key = (static_cast<std::uint64_t>(e.id()) << 32) |
                        ((static_cast<std::uint64_t>(c.var) & 0xffffu) << 16) |
                        (static_cast<std::uint64_t>(c.order) & 0xffffu);
    if (auto m = pool.memo_get(ExprPool::MemoPartial, key)) return Expr(*m);
    const auto& r = e.rep();
    Expr res = Expr::make(poly_const(r.scale), {}) *
               detail::poly_partial(r.num, c);
    if (!r.den.empty()) {
        Expr den = kOne;
        for (auto& [f, ex] : r.den) den = den * pow(Expr::make(f, {}), ex);
        res = res / den;
        for (auto& [f, ex] : r.den) {
            Expr df = detail::poly_partial(f, c);
            if (df.is_zero_canonical()) continue;
            res = res - e * Expr::integer(ex) * df / Expr::make(f, {});
        }
    }
    pool.memo_put(ExprPool::MemoPartial, key, res.id());
    return res;
}

// Cartan total derivative: L e = sum x_i^(j+1) * d e / d x_i^(j)
inline Expr total_derivative(const Expr& e) {
    auto& pool = ExprPool::instance();
    if (auto m = pool.memo_get(ExprPool::MemoTotalDeriv, e.id())) return Expr(*m);
    Expr sum = kZero;
    for (auto& c : jet_coords_of(e)) {
        Expr de = partial(e, c);
        if (de.is_zero_canonical()) continue;
        sum = sum + Expr::jet(c.var, c.order + 1) * de;
    }
    pool.memo_put(ExprPool::MemoTotalDeriv, e.id(), sum.id());
    return sum;
}

inline Expr total_derivative(const Expr& e, int times) {
    Expr r = e;
    for (int i = 0; i < times; ++i) r = total_derivative(r);
    return r;
}

// ---------------------------------------------------------------------------
// Substitution

namespace detail {

inline Expr subst_expr(const Expr& e, const std::map<JetCoord, Expr>& rules);

inline Expr subst_poly(const Poly& p, const std::map<JetCoord, Expr>& rules) {
    ExprPool& pool = ExprPool::instance();
    Expr sum = kZero;
    for (auto& [m, c] : p.terms) {
        Expr term = Expr::make(poly_const(c), {});
        for (auto& [id, e] : m.factors) {
            const Atom& a = pool.atom(id);
            Expr base;
            if (a.kind == AtomKind::Jet) {
                auto it = rules.find(a.jet);
                base = (it != rules.end()) ? it->second : Expr::jet(a.jet);
            } else if (a.kind == AtomKind::Param) {
                base = Expr::param(a.name);
            } else if (a.kind == AtomKind::Phasor) {
                base = phasor(subst_expr(Expr(a.arg), rules), 1);
            } else {
                base = func_head(a.kind, subst_expr(Expr(a.arg), rules));
            }
            term = term * pow(base, e);
        }
        sum = sum + term;
    }
    return sum;
}

inline Expr subst_expr(const Expr& e, const std::map<JetCoord, Expr>& rules) {
    const auto& r = e.rep();
    Expr num = Expr::make(poly_const(r.scale), {}) * subst_poly(r.num, rules);
    for (auto& [f, ex] : r.den) {
        Expr fs = subst_poly(f, rules);
        if (fs.is_zero_canonical())
            throw Error("substitution produced a zero denominator");
        num = num / pow(fs, ex);
    }
    return num;
}

}  // namespace detail

// simultaneous substitution of jet coordinates; rejects cyclic rule sets
inline Expr substitute(const Expr& e, const std::map<JetCoord, Expr>& rules_in) {
    std::map<JetCoord, Expr> rules;
    for (auto& [c, v] : rules_in) {
        if (v == Expr::jet(c)) continue;  // identity rule
        rules.emplace(c, v);
    }
    if (rules.empty()) return e;
    std::map<JetCoord, std::vector<JetCoord>> edges;
    for (auto& [c, v] : rules) {
        for (auto& d : jet_coords_of(v))
            if (rules.count(d)) edges[c].push_back(d);
    }
    std::map<JetCoord, int> state;  // 0 unvisited, 1 active, 2 done
    auto dfs = [&](auto&& self, const JetCoord& c) -> void {
        state[c] = 1;
        for (auto& d : edges[c]) {
            if (state[d] == 1)
                throw CyclicSubstitution("cyclic substitution rule set");
            if (state[d] == 0) self(self, d);
        }
        state[c] = 2;
    };
    for (auto& [c, v] : rules)
        if (state[c] == 0) dfs(dfs, c);
    return detail::subst_expr(e, rules);
}

// ---------------------------------------------------------------------------
// Numeric evaluation (complex internally; public results must be real)

struct EvalPoint {
    std::map<JetCoord, double> jets;
    std::map<std::string, double> params;
};

namespace detail {

using Cplx = std::complex<double>;

inline Cplx eval_atom(AtomId id, const EvalPoint& pt);

inline Cplx eval_poly_c(const Poly& p, const EvalPoint& pt) {
    Cplx s = 0;
    for (auto& [m, c] : p.terms) {
        Cplx t(to_double(c.re), to_double(c.im));
        for (auto& [id, e] : m.factors) {
            Cplx base = eval_atom(id, pt);
            t *= std::pow(base, e);
        }
        s += t;
    }
    return s;
}

inline Cplx eval_expr_c(const Expr& e, const EvalPoint& pt) {
    const auto& r = e.rep();
    Cplx num = Cplx(to_double(r.scale.re), to_double(r.scale.im)) *
               eval_poly_c(r.num, pt);
    for (auto& [f, ex] : r.den) {
        Cplx d = eval_poly_c(f, pt);
        if (std::abs(d) < 1e-12)
            throw EvalError("evaluation at a pole of the expression");
        num /= std::pow(d, ex);
    }
    return num;
}

inline Cplx eval_atom(AtomId id, const EvalPoint& pt) {
    const Atom& a = ExprPool::instance().atom(id);
    switch (a.kind) {
        case AtomKind::Jet: {
            auto it = pt.jets.find(a.jet);
            if (it == pt.jets.end())
                throw EvalError("missing coordinate value for " +
                                ExprPool::instance().var_name(a.jet.var) + "^(" +
                                std::to_string(a.jet.order) + ")");
            return it->second;
        }
        case AtomKind::Param: {
            auto it = pt.params.find(a.name);
            if (it == pt.params.end())
                throw EvalError("missing parameter value for " + a.name);
            return it->second;
        }
        case AtomKind::Phasor: {
            Cplx arg = eval_expr_c(Expr(a.arg), pt);
            return std::exp(Cplx(0, 1) * arg);
        }
        case AtomKind::Exp: return std::exp(eval_expr_c(Expr(a.arg), pt));
        case AtomKind::Ln: {
            Cplx v = eval_expr_c(Expr(a.arg), pt);
            if (v.real() <= 0 && std::abs(v.imag()) < 1e-12)
                throw EvalError("ln of a non-positive value");
            return std::log(v);
        }
        case AtomKind::Atan: return std::atan(eval_expr_c(Expr(a.arg), pt).real());
        case AtomKind::Sin: return std::sin(eval_expr_c(Expr(a.arg), pt));
        case AtomKind::Cos: return std::cos(eval_expr_c(Expr(a.arg), pt));
    }
    throw EvalError("unreachable");
}

}  // namespace detail

inline double eval_numeric(const Expr& e, const EvalPoint& pt) {
    detail::Cplx v = detail::eval_expr_c(e, pt);
    double scale = std::max(1.0, std::abs(v.real()));
    if (std::abs(v.imag()) > 1e-8 * scale)
        throw EvalError("expression evaluated to a non-real value");
    return v.real();
}

// ---------------------------------------------------------------------------
// Assumption ledger and the three-valued zero test

enum class ZeroStatus { Zero, NonZero, Unknown };

class AssumptionLedger {
  public:
    void assume_nonzero(const Expr& e) {
        if (e.is_rational_constant()) return;
        Poly p = e.rep().num;  // nonzero iff the numerator is
        Monomial shift = laurent_denominator(p);
        p = poly_shift(p, shift);
        detail::make_primitive(p);
        if (p.is_constant()) return;
        Expr key = Expr::make(std::move(p), {});
        if (std::find(entries_.begin(), entries_.end(), key) == entries_.end())
            entries_.push_back(key);
    }
    const std::vector<Expr>& entries() const { return entries_; }
    void merge(const AssumptionLedger& o) {
        for (auto& e : o.entries_) assume_nonzero(e);
    }
    bool covers(const Expr& e) const {
        Poly p = e.rep().num;
        Monomial shift = laurent_denominator(p);
        p = poly_shift(p, shift);
        detail::make_primitive(p);
        if (p.is_constant()) return !p.is_zero();
        int guard = 64;
        bool progress = true;
        while (!p.is_constant() && progress && guard-- > 0) {
            progress = false;
            for (auto& entry : entries_) {
                auto q = poly_exact_div(p, entry.rep().num);
                if (q) {
                    p = std::move(*q);
                    progress = true;
                    break;
                }
            }
        }
        return p.is_constant() && !p.is_zero();
    }

  private:
    std::vector<Expr> entries_;
};

struct ZeroTestConfig {
    int samples = 8;
    double tolerance = 1e-9;
    double nonzero_bound = 1e-6;  // 10^3 * tolerance
    double low = -2.0, high = 2.0;
    double param_low = 0.25, param_high = 2.25;  // params are positive symbols
    int max_rejects = 64;
    std::uint64_t seed = 0x5eed5eed;
};

namespace detail {

inline std::optional<EvalPoint> sample_point(
    const std::vector<JetCoord>& jets, const std::vector<std::string>& params,
    const std::vector<Expr>& avoid, const ZeroTestConfig& cfg,
    std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uj(cfg.low, cfg.high);
    std::uniform_real_distribution<double> up(cfg.param_low, cfg.param_high);
    for (int attempt = 0; attempt < cfg.max_rejects; ++attempt) {
        EvalPoint pt;
        for (auto& c : jets) pt.jets[c] = uj(rng);
        for (auto& p : params) pt.params[p] = up(rng);
        bool ok = true;
        for (auto& e : avoid) {
            try {
                if (std::abs(eval_numeric(e, pt)) < 1e-4) {
                    ok = false;
                    break;
                }
            } catch (const EvalError&) {
                ok = false;
                break;
            }
        }
        if (ok) return pt;
    }
    return std::nullopt;
}

}  // namespace detail

inline ZeroStatus is_zero(const Expr& e, const AssumptionLedger& ledger = {},
                          const ZeroTestConfig& cfg = {}) {
    if (e.is_zero_canonical()) return ZeroStatus::Zero;
    if (e.is_rational_constant()) return ZeroStatus::NonZero;
    if (ledger.covers(e)) return ZeroStatus::NonZero;

    // probabilistic arm: not canonically zero; sampling can only certify
    // NonZero or leave Unknown.  The fraction vanishes exactly where its
    // primitive numerator does, and that polynomial is well conditioned
    // (integer content one, phasors of modulus one), so sample it rather
    // than the full fraction.
    Expr target = Expr::make(e.rep().num, {});
    std::set<JetCoord> jets;
    std::set<std::string> params;
    std::vector<Expr> avoid;
    auto absorb = [&](const Expr& x) {
        for (auto& c : jet_coords_of(x)) jets.insert(c);
        for (auto& p : params_of(x)) params.insert(p);
    };
    absorb(target);
    for (auto& entry : ledger.entries()) {
        std::vector<JetCoord> ec = jet_coords_of(entry);
        bool shares = std::any_of(ec.begin(), ec.end(),
                                  [&](const JetCoord& c) { return jets.count(c); });
        if (shares) {
            avoid.push_back(entry);
            absorb(entry);
        }
    }
    std::mt19937_64 rng(cfg.seed ^ (0x9e3779b97f4a7c15ull * (e.id() + 1)));
    std::vector<JetCoord> jv(jets.begin(), jets.end());
    std::vector<std::string> pv(params.begin(), params.end());
    for (int s = 0; s < cfg.samples; ++s) {
        auto pt = detail::sample_point(jv, pv, avoid, cfg, rng);
        if (!pt) continue;
        double v;
        try {
            v = eval_numeric(target, *pt);
        } catch (const EvalError&) {
            continue;
        }
        if (std::abs(v) > cfg.nonzero_bound) return ZeroStatus::NonZero;
    }
    return ZeroStatus::Unknown;
}

}  // namespace flatcert
