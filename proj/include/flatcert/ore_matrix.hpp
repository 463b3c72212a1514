// Matrices over K[d/dt]: elementary unimodular actions with logs, the Smith
// (diagonal) reduction with witnesses, hyper-regularity and the right/left
// Smith bases used by the flatness pipeline.
//
// Every unimodular matrix produced here carries its factorization into
// elementary matrices T_{i,j}(p) = I + 1_{i,j} p and diagonal unit scales, so
// inverses are constructed by reversing the log, never decided post hoc.
#pragma once

#include "ore_poly.hpp"

namespace flatcert {

struct InconclusivePivot : Error {
    InconclusivePivot(const std::string& msg, Expr offending)
        : Error(msg + ": " + to_text(offending)), offending(offending) {}
    Expr offending;
};
struct NotHyperRegular : Error {
    using Error::Error;
};

class OreMatrix {
  public:
    OreMatrix() = default;
    OreMatrix(int rows, int cols)
        : rows_(rows), cols_(cols),
          e_(static_cast<std::size_t>(rows) * cols) {}

    static OreMatrix identity(int n) {
        OreMatrix m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = OrePoly::one();
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    OrePoly& at(int i, int j) { return e_[static_cast<std::size_t>(i) * cols_ + j]; }
    const OrePoly& at(int i, int j) const {
        return e_[static_cast<std::size_t>(i) * cols_ + j];
    }

    bool operator==(const OreMatrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && e_ == o.e_;
    }
    bool is_identity() const {
        if (rows_ != cols_) return false;
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j)
                if (i == j ? !at(i, j).is_one() : !at(i, j).is_zero()) return false;
        return true;
    }

    OreMatrix columns(int from, int count) const {
        OreMatrix m(rows_, count);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < count; ++j) m.at(i, j) = at(i, from + j);
        return m;
    }
    OreMatrix rows_slice(int from, int count) const {
        OreMatrix m(count, cols_);
        for (int i = 0; i < count; ++i)
            for (int j = 0; j < cols_; ++j) m.at(i, j) = at(from + i, j);
        return m;
    }

    friend OreMatrix operator*(const OreMatrix& a, const OreMatrix& b) {
        if (a.cols_ != b.rows_)
            throw DimensionMismatch("matrix product dimension mismatch");
        OreMatrix r(a.rows_, b.cols_);
        for (int i = 0; i < a.rows_; ++i)
            for (int k = 0; k < a.cols_; ++k) {
                if (a.at(i, k).is_zero()) continue;
                for (int j = 0; j < b.cols_; ++j) {
                    if (b.at(k, j).is_zero()) continue;
                    r.at(i, j) = r.at(i, j) + a.at(i, k) * b.at(k, j);
                }
            }
        return r;
    }
    friend OreMatrix operator+(const OreMatrix& a, const OreMatrix& b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
            throw DimensionMismatch("matrix sum dimension mismatch");
        OreMatrix r(a.rows_, a.cols_);
        for (std::size_t i = 0; i < a.e_.size(); ++i) r.e_[i] = a.e_[i] + b.e_[i];
        return r;
    }
    friend OreMatrix operator-(const OreMatrix& a, const OreMatrix& b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
            throw DimensionMismatch("matrix difference dimension mismatch");
        OreMatrix r(a.rows_, a.cols_);
        for (std::size_t i = 0; i < a.e_.size(); ++i) r.e_[i] = a.e_[i] - b.e_[i];
        return r;
    }
    bool is_zero() const {
        return std::all_of(e_.begin(), e_.end(),
                           [](const OrePoly& p) { return p.is_zero(); });
    }

    // module action on scalar vectors
    std::vector<Expr> apply(const std::vector<Expr>& v) const {
        if (static_cast<int>(v.size()) != cols_)
            throw DimensionMismatch("matrix apply dimension mismatch");
        std::vector<Expr> r(static_cast<std::size_t>(rows_), kZero);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j)
                if (!at(i, j).is_zero()) r[i] = r[i] + at(i, j).apply(v[j]);
        return r;
    }

    int max_degree() const {
        int d = -1;
        for (auto& p : e_) d = std::max(d, p.degree());
        return d;
    }

  private:
    int rows_ = 0, cols_ = 0;
    std::vector<OrePoly> e_;
};

inline bool canonically_equal(const OreMatrix& a, const OreMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    return (a - b).is_zero();
}

inline OreMatrix mat_mul(const OreMatrix& a, const OreMatrix& b) { return a * b; }
inline std::vector<Expr> mat_apply(const OreMatrix& a, const std::vector<Expr>& v) {
    return a.apply(v);
}

// ---------------------------------------------------------------------------
// Elementary actions

struct ElementaryAction {
    enum class Kind { AddMul, Scale };
    Kind kind = Kind::AddMul;
    int i = 0, j = 0;  // AddMul: matrix I + 1_{i,j} p;  Scale: diagonal unit at i
    OrePoly p;
    Expr u = kOne;

    ElementaryAction inverse() const {
        ElementaryAction a = *this;
        if (kind == Kind::AddMul)
            a.p = -p;
        else
            a.u = kOne / u;
        return a;
    }
};

// row operation: M <- act * M
inline void apply_left(const ElementaryAction& a, OreMatrix& m) {
    if (a.kind == ElementaryAction::Kind::AddMul) {
        for (int c = 0; c < m.cols(); ++c)
            m.at(a.i, c) = m.at(a.i, c) + a.p * m.at(a.j, c);
    } else {
        for (int c = 0; c < m.cols(); ++c)
            m.at(a.i, c) = OrePoly(a.u) * m.at(a.i, c);
    }
}

// column operation: M <- M * act
inline void apply_right(OreMatrix& m, const ElementaryAction& a) {
    if (a.kind == ElementaryAction::Kind::AddMul) {
        for (int r = 0; r < m.rows(); ++r)
            m.at(r, a.j) = m.at(r, a.j) + m.at(r, a.i) * a.p;
    } else {
        for (int r = 0; r < m.rows(); ++r)
            m.at(r, a.i) = m.at(r, a.i) * OrePoly(a.u);
    }
}

// Unimodular matrix together with its factorization mat = product of the
// logged elementary matrices, in matrix-product order.
struct UniMat {
    OreMatrix mat;
    std::vector<ElementaryAction> product;

    static UniMat identity(int n) { return {OreMatrix::identity(n), {}}; }

    static OreMatrix build(int n, const std::vector<ElementaryAction>& product) {
        OreMatrix m = OreMatrix::identity(n);
        for (auto& a : product) apply_right(m, a);
        return m;
    }
    bool log_consistent() const {
        return build(mat.rows(), product) == mat;
    }
};

// inverse from the action log: (A1...Ak)^-1 = Ak^-1 ... A1^-1
inline UniMat unimodular_inverse(const UniMat& u) {
    if (u.mat.rows() != u.mat.cols())
        throw DimensionMismatch("only square matrices have inverses");
    UniMat inv;
    inv.product.reserve(u.product.size());
    for (auto it = u.product.rbegin(); it != u.product.rend(); ++it)
        inv.product.push_back(it->inverse());
    inv.mat = UniMat::build(u.mat.rows(), inv.product);
    return inv;
}

// ---------------------------------------------------------------------------
// Smith decomposition

struct SmithOptions {
    ZeroTestConfig zero;
    bool combine_first = false;
    // applied as A * gauge before reduction; must be unimodular
    std::optional<OreMatrix> right_gauge;
};

struct SmithResult {
    UniMat V;  // left witness
    UniMat U;  // right witness
    std::vector<OrePoly> delta;
    int rank = 0;
    OreMatrix reduced;  // V * A * U
    AssumptionLedger ledger;

    bool hyper_regular() const {
        for (int i = 0; i < static_cast<int>(delta.size()); ++i)
            if (!delta[static_cast<std::size_t>(i)].is_one()) return false;
        return rank == static_cast<int>(delta.size());
    }
    bool verify(const OreMatrix& a) const { return (V.mat * a) * U.mat == reduced; }
};

namespace detail {

enum class EntryStatus { Zero, Usable, Blocked };

inline EntryStatus entry_status(const OrePoly& p, const AssumptionLedger& ledger,
                                const ZeroTestConfig& cfg, Expr* offending) {
    if (p.is_zero()) return EntryStatus::Zero;
    switch (is_zero(p.leading_coeff(), ledger, cfg)) {
        case ZeroStatus::NonZero: return EntryStatus::Usable;
        case ZeroStatus::Zero: return EntryStatus::Zero;  // unreachable: trimmed
        default:
            if (offending) *offending = p.leading_coeff();
            return EntryStatus::Blocked;
    }
}

class SmithWorker {
  public:
    SmithWorker(const OreMatrix& a, const SmithOptions& opts)
        : b_(a), opts_(opts) {
        if (opts.right_gauge) {
            if (opts.right_gauge->rows() != a.cols() ||
                opts.right_gauge->cols() != a.cols())
                throw DimensionMismatch("gauge matrix must be square of size cols");
        }
    }

    SmithResult run() {
        res_.V = UniMat::identity(b_.rows());
        res_.U = UniMat::identity(b_.cols());
        if (opts_.right_gauge) absorb_gauge(*opts_.right_gauge);
        diagonalize(0);
        normalize_units();
        enforce_divisibility();
        finish();
        return std::move(res_);
    }

  private:
    void left(const ElementaryAction& a) {
        apply_left(a, b_);
        apply_left(a, res_.V.mat);
        res_.V.product.insert(res_.V.product.begin(), a);
    }
    void right(const ElementaryAction& a) {
        apply_right(b_, a);
        apply_right(res_.U.mat, a);
        res_.U.product.push_back(a);
    }
    void swap_rows(int i, int j) {
        if (i == j) return;
        using K = ElementaryAction::Kind;
        left({K::AddMul, i, j, OrePoly::one(), kOne});
        left({K::AddMul, j, i, -OrePoly::one(), kOne});
        left({K::AddMul, i, j, OrePoly::one(), kOne});
        left({K::Scale, j, 0, {}, -kOne});
    }
    void swap_cols(int i, int j) {
        if (i == j) return;
        using K = ElementaryAction::Kind;
        right({K::AddMul, i, j, OrePoly::one(), kOne});
        right({K::AddMul, j, i, -OrePoly::one(), kOne});
        right({K::AddMul, i, j, OrePoly::one(), kOne});
        right({K::Scale, i, 0, {}, -kOne});
    }

    void absorb_gauge(const OreMatrix& g) {
        // factor the gauge through its own Smith decomposition so the U log
        // stays a product of elementary actions
        SmithOptions sub;
        sub.zero = opts_.zero;
        SmithWorker w(g, sub);
        SmithResult sg = w.run();
        res_.ledger.merge(sg.ledger);
        if (!sg.hyper_regular())
            throw NotHyperRegular("gauge matrix is not unimodular");
        // V g U = I  =>  g = V^-1 U^-1
        UniMat vi = unimodular_inverse(sg.V);
        UniMat ui = unimodular_inverse(sg.U);
        std::vector<ElementaryAction> acts = vi.product;
        acts.insert(acts.end(), ui.product.begin(), ui.product.end());
        for (auto& a : acts) right(a);
    }

    // one Euclidean-combination pass (combine-first pivot strategy)
    void combine_pass(int t) {
        // rows within each column
        for (int j = t; j < b_.cols(); ++j) {
            int red = -1;
            for (int i = t; i < b_.rows(); ++i) {
                const OrePoly& p = b_.at(i, j);
                if (p.is_zero() || p.degree() < 1) continue;
                if (entry_status(p, res_.ledger, opts_.zero, nullptr) !=
                    EntryStatus::Usable)
                    continue;
                if (red < 0 || better(p, b_.at(red, j))) red = i;
            }
            if (red < 0) continue;
            for (int i = t; i < b_.rows(); ++i) {
                if (i == red) continue;
                const OrePoly& p = b_.at(i, j);
                if (p.is_zero() || p.degree() < b_.at(red, j).degree()) continue;
                auto [q, r] =
                    left_divide(p, b_.at(red, j), res_.ledger, opts_.zero);
                if (q.is_zero()) continue;
                left({ElementaryAction::Kind::AddMul, i, red, -q, kOne});
            }
        }
        // columns within each row
        for (int i = t; i < b_.rows(); ++i) {
            int red = -1;
            for (int j = t; j < b_.cols(); ++j) {
                const OrePoly& p = b_.at(i, j);
                if (p.is_zero() || p.degree() < 1) continue;
                if (entry_status(p, res_.ledger, opts_.zero, nullptr) !=
                    EntryStatus::Usable)
                    continue;
                if (red < 0 || better(p, b_.at(i, red))) red = j;
            }
            if (red < 0) continue;
            for (int j = t; j < b_.cols(); ++j) {
                if (j == red) continue;
                const OrePoly& p = b_.at(i, j);
                if (p.is_zero() || p.degree() < b_.at(i, red).degree()) continue;
                auto [q, r] =
                    right_divide(p, b_.at(i, red), res_.ledger, opts_.zero);
                if (q.is_zero()) continue;
                right({ElementaryAction::Kind::AddMul, red, j, -q, kOne});
            }
        }
    }

    static bool better(const OrePoly& a, const OrePoly& b) {
        if (a.degree() != b.degree()) return a.degree() < b.degree();
        return a.size_metric() < b.size_metric();
    }

    // lowest (degree, size) usable entry in the trailing block, scan order
    std::pair<int, int> find_pivot(int t) {
        int bi = -1, bj = -1;
        bool blocked = false;
        Expr offending = kZero;
        for (int i = t; i < b_.rows(); ++i)
            for (int j = t; j < b_.cols(); ++j) {
                const OrePoly& p = b_.at(i, j);
                if (p.is_zero()) continue;
                Expr off = kZero;
                auto st = entry_status(p, res_.ledger, opts_.zero, &off);
                if (st == EntryStatus::Blocked) {
                    blocked = true;
                    offending = off;
                    continue;
                }
                if (st == EntryStatus::Zero) continue;
                if (bi < 0 || better(p, b_.at(bi, bj))) {
                    bi = i;
                    bj = j;
                }
            }
        if (bi < 0 && blocked)
            throw InconclusivePivot(
                "pivot leading coefficient has unknown zero status; "
                "strengthen the assumption ledger",
                offending);
        return {bi, bj};
    }

    static bool trace_enabled() {
        static bool on = std::getenv("FLATCERT_SMITH_TRACE") != nullptr;
        return on;
    }
    int size_of_block() const {
        int s = 0;
        for (int i = 0; i < b_.rows(); ++i)
            for (int j = 0; j < b_.cols(); ++j)
                s = std::max(s, b_.at(i, j).size_metric());
        return s;
    }

    void diagonalize(int start) {
        int tmax = std::min(b_.rows(), b_.cols());
        for (int t = start; t < tmax; ++t) {
            for (int guard = 0;; ++guard) {
                if (guard > 256) throw Error("Smith reduction did not converge");
                if (trace_enabled()) {
                    fprintf(stderr, "[smith] t=%d guard=%d maxsize=%d\n", t,
                            guard, size_of_block());
                    for (int i = t; i < b_.rows(); ++i)
                        for (int j = t; j < b_.cols(); ++j) {
                            const OrePoly& p = b_.at(i, j);
                            if (p.is_zero()) continue;
                            Expr off = kZero;
                            auto st = entry_status(p, res_.ledger, opts_.zero,
                                                   &off);
                            fprintf(stderr,
                                    "    (%d,%d) deg=%d size=%d st=%d\n", i, j,
                                    p.degree(), p.size_metric(),
                                    static_cast<int>(st));
                        }
                }
                if (opts_.combine_first) combine_pass(t);
                auto [pi, pj] = find_pivot(t);
                if (pi < 0) return;  // trailing block is zero
                swap_rows(t, pi);
                swap_cols(t, pj);
                // monic pivot: divisions by it then introduce no new
                // denominator layers, which keeps entry growth additive
                {
                    Expr lc = b_.at(t, t).leading_coeff();
                    if (!lc.is_one()) {
                        res_.ledger.assume_nonzero(lc);
                        left({ElementaryAction::Kind::Scale, t, 0, {},
                              kOne / lc});
                    }
                }
                bool dirty = false;
                bool progressed = false;
                for (int j = t + 1; j < b_.cols(); ++j) {
                    const OrePoly& p = b_.at(t, j);
                    if (p.is_zero()) continue;
                    auto [q, r] =
                        right_divide(p, b_.at(t, t), res_.ledger, opts_.zero);
                    if (!q.is_zero()) {
                        right({ElementaryAction::Kind::AddMul, t, j, -q, kOne});
                        progressed = true;
                    }
                    if (!b_.at(t, j).is_zero()) dirty = true;
                }
                for (int i = t + 1; i < b_.rows(); ++i) {
                    const OrePoly& p = b_.at(i, t);
                    if (p.is_zero()) continue;
                    auto [q, r] =
                        left_divide(p, b_.at(t, t), res_.ledger, opts_.zero);
                    if (!q.is_zero()) {
                        left({ElementaryAction::Kind::AddMul, i, t, -q, kOne});
                        progressed = true;
                    }
                    if (!b_.at(i, t).is_zero()) dirty = true;
                }
                if (!dirty) break;
                if (!progressed) {
                    // a usable lower-degree entry lets the next iteration
                    // re-pivot; otherwise the leftovers are blocked
                    auto [ni, nj] = find_pivot(t);
                    if (ni >= 0 && better(b_.at(ni, nj), b_.at(t, t))) continue;
                    // leftover entries sit below the pivot degree but their
                    // leading coefficients cannot be certified nonzero, so
                    // no further reduction is sound
                    Expr off = kZero;
                    for (int j = t + 1; j < b_.cols(); ++j)
                        if (!b_.at(t, j).is_zero() &&
                            entry_status(b_.at(t, j), res_.ledger, opts_.zero,
                                         &off) == EntryStatus::Blocked)
                            throw InconclusivePivot(
                                "blocked entry prevents Smith reduction", off);
                    for (int i = t + 1; i < b_.rows(); ++i)
                        if (!b_.at(i, t).is_zero() &&
                            entry_status(b_.at(i, t), res_.ledger, opts_.zero,
                                         &off) == EntryStatus::Blocked)
                            throw InconclusivePivot(
                                "blocked entry prevents Smith reduction", off);
                    throw Error("Smith reduction stalled");
                }
            }
        }
    }

    void normalize_units() {
        int tmax = std::min(b_.rows(), b_.cols());
        for (int t = 0; t < tmax; ++t) {
            const OrePoly& d = b_.at(t, t);
            if (d.is_zero()) continue;
            Expr lc = d.leading_coeff();
            if (lc.is_one()) continue;
            res_.ledger.assume_nonzero(lc);
            left({ElementaryAction::Kind::Scale, t, 0, {}, kOne / lc});
        }
    }

    void enforce_divisibility() {
        int tmax = std::min(b_.rows(), b_.cols());
        for (int guard = 0; guard < 256; ++guard) {
            int bad = -1;
            for (int i = 0; i + 1 < tmax && bad < 0; ++i) {
                const OrePoly& di = b_.at(i, i);
                if (di.is_zero() || di.degree() == 0) continue;
                for (int j = i + 1; j < tmax; ++j) {
                    const OrePoly& dj = b_.at(j, j);
                    if (dj.is_zero()) continue;
                    auto [q, r] = right_divide(dj, di, res_.ledger, opts_.zero);
                    if (!r.is_zero()) {
                        // merge row j into row i and re-reduce from i
                        left({ElementaryAction::Kind::AddMul, i, j,
                              OrePoly::one(), kOne});
                        bad = i;
                        break;
                    }
                }
            }
            if (bad < 0) return;
            diagonalize(bad);
            normalize_units();
        }
        throw Error("divisibility chain enforcement did not converge");
    }

    void finish() {
        int tmax = std::min(b_.rows(), b_.cols());
        res_.delta.clear();
        res_.rank = 0;
        for (int t = 0; t < tmax; ++t) {
            res_.delta.push_back(b_.at(t, t));
            if (!b_.at(t, t).is_zero()) ++res_.rank;
        }
        res_.reduced = b_;
    }

    OreMatrix b_;
    SmithOptions opts_;
    SmithResult res_;
};

}  // namespace detail

inline SmithResult smith_decompose(const OreMatrix& a,
                                   const SmithOptions& opts = {}) {
    detail::SmithWorker w(a, opts);
    return w.run();
}

inline bool is_hyper_regular(const OreMatrix& a, const SmithOptions& opts = {}) {
    return smith_decompose(a, opts).hyper_regular();
}

// V * A * U = (I_rows, 0) for hyper-regular wide matrices
inline std::pair<UniMat, UniMat> right_smith_basis(const OreMatrix& a,
                                                   const SmithOptions& opts = {},
                                                   AssumptionLedger* ledger = nullptr) {
    if (a.rows() > a.cols())
        throw DimensionMismatch("right Smith basis requires rows <= cols");
    SmithResult s = smith_decompose(a, opts);
    if (!s.hyper_regular())
        throw NotHyperRegular("matrix is not hyper-regular");
    if (ledger) ledger->merge(s.ledger);
    return {std::move(s.V), std::move(s.U)};
}

// Q * A * R = (I_cols ; 0) for hyper-regular tall matrices
inline std::pair<UniMat, UniMat> left_smith_basis(const OreMatrix& a,
                                                  const SmithOptions& opts = {},
                                                  AssumptionLedger* ledger = nullptr) {
    if (a.rows() < a.cols())
        throw DimensionMismatch("left Smith basis requires rows >= cols");
    SmithResult s = smith_decompose(a, opts);
    if (!s.hyper_regular())
        throw NotHyperRegular("matrix is not hyper-regular");
    if (ledger) ledger->merge(s.ledger);
    return {std::move(s.V), std::move(s.U)};
}

// ---------------------------------------------------------------------------
// Text form: entries `;`-separated, one row per line

inline std::string to_text(const OreMatrix& m) {
    std::string out;
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            if (j) out += "; ";
            out += to_text(m.at(i, j));
        }
        out += "\n";
    }
    return out;
}

inline OreMatrix parse_matrix(const std::string& text, const ExprSymbols& syms) {
    std::vector<std::vector<OrePoly>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<OrePoly> row;
        std::size_t start = 0;
        while (start <= line.size()) {
            auto semi = line.find(';', start);
            std::string piece = line.substr(
                start, semi == std::string::npos ? std::string::npos : semi - start);
            row.push_back(parse_ore(piece, syms));
            if (semi == std::string::npos) break;
            start = semi + 1;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error("empty matrix text");
    OreMatrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size())
            throw Error("ragged matrix rows in matrix text");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m.at(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    }
    return m;
}

inline OreMatrix parse_matrix(const std::string& text) {
    ExprSymbols syms;
    syms.allow_auto_vars = true;
    return parse_matrix(text, syms);
}

}  // namespace flatcert
