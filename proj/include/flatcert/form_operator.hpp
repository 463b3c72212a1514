// Matrix operators with form-valued Ore entries: each entry is a finite sum
// sum_k eta_k ^ D^k with eta_k a q-form, acting on m-vectors of p-forms by
// (mu kappa)_i = sum_j sum_k eta^{ij}_k ^ L^k(kappa_j).
//
// An OreMatrix lifts to the q = 0 case, which makes H*mu, mu*H and mu^2 one
// composition routine; the matrix exterior defect dgoth is entrywise d of the
// eta's in this normal form.
#pragma once

#include "diff_form.hpp"
#include "ore_matrix.hpp"

namespace flatcert {

// OrePoly acting on forms: p(kappa) = sum a_k L^k(kappa)
inline DiffForm ore_apply(const OrePoly& p, const DiffForm& kappa,
                          const JetWindow& window = {}) {
    DiffForm acc(kappa.degree());
    DiffForm deriv = kappa;
    for (int k = 0; k <= p.degree(); ++k) {
        if (!p.coeff(k).is_zero_canonical())
            acc = acc + p.coeff(k) * deriv;
        if (k < p.degree()) deriv = lie_derivative_form(deriv, window);
    }
    return acc;
}

inline std::vector<DiffForm> mat_apply(const OreMatrix& a,
                                       const std::vector<DiffForm>& v,
                                       const JetWindow& window = {}) {
    if (static_cast<int>(v.size()) != a.cols())
        throw DimensionMismatch("matrix apply dimension mismatch");
    int deg = 0;
    for (auto& f : v)
        if (!f.is_zero()) deg = f.degree();
    std::vector<DiffForm> r(static_cast<std::size_t>(a.rows()), DiffForm(deg));
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            if (!a.at(i, j).is_zero())
                r[i] = r[i] + ore_apply(a.at(i, j), v[j], window);
    return r;
}

class FormOperator {
  public:
    FormOperator() = default;
    FormOperator(int rows, int cols, int q)
        : rows_(rows), cols_(cols), q_(q),
          e_(static_cast<std::size_t>(rows) * cols) {}

    static FormOperator from_matrix(const OreMatrix& m) {
        FormOperator op(m.rows(), m.cols(), 0);
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j) {
                const OrePoly& p = m.at(i, j);
                for (int k = 0; k <= p.degree(); ++k)
                    if (!p.coeff(k).is_zero_canonical())
                        op.add_term(i, j, k, DiffForm::scalar(p.coeff(k)));
            }
        return op;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int degree() const { return q_; }

    const std::vector<DiffForm>& entry(int i, int j) const {
        return e_[static_cast<std::size_t>(i) * cols_ + j];
    }
    // adds eta ^ D^k into entry (i, j)
    void add_term(int i, int j, int k, const DiffForm& eta) {
        if (eta.is_zero()) return;
        if (eta.degree() != q_)
            throw DimensionMismatch("operator entry degree mismatch");
        auto& slot = e_[static_cast<std::size_t>(i) * cols_ + j];
        if (static_cast<int>(slot.size()) <= k)
            slot.resize(static_cast<std::size_t>(k) + 1, DiffForm(q_));
        slot[static_cast<std::size_t>(k)] = slot[static_cast<std::size_t>(k)] + eta;
        while (!slot.empty() && slot.back().is_zero()) slot.pop_back();
    }

    bool is_zero() const {
        return std::all_of(e_.begin(), e_.end(),
                           [](const auto& s) { return s.empty(); });
    }
    bool operator==(const FormOperator& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && q_ == o.q_ && e_ == o.e_;
    }

    friend FormOperator operator+(const FormOperator& a, const FormOperator& b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_ || a.q_ != b.q_)
            throw DimensionMismatch("operator sum shape mismatch");
        FormOperator r = a;
        for (int i = 0; i < b.rows_; ++i)
            for (int j = 0; j < b.cols_; ++j) {
                const auto& slot = b.entry(i, j);
                for (int k = 0; k < static_cast<int>(slot.size()); ++k)
                    r.add_term(i, j, k, slot[static_cast<std::size_t>(k)]);
            }
        return r;
    }
    friend FormOperator operator-(const FormOperator& a) {
        FormOperator r(a.rows_, a.cols_, a.q_);
        for (int i = 0; i < a.rows_; ++i)
            for (int j = 0; j < a.cols_; ++j) {
                const auto& slot = a.entry(i, j);
                for (int k = 0; k < static_cast<int>(slot.size()); ++k)
                    r.add_term(i, j, k, -slot[static_cast<std::size_t>(k)]);
            }
        return r;
    }
    friend FormOperator operator-(const FormOperator& a, const FormOperator& b) {
        return a + (-b);
    }

    // action on vectors of p-forms
    std::vector<DiffForm> apply(const std::vector<DiffForm>& kappa,
                                const JetWindow& window = {}) const {
        if (static_cast<int>(kappa.size()) != cols_)
            throw DimensionMismatch("operator apply dimension mismatch");
        int p = 0;
        for (auto& f : kappa)
            if (!f.is_zero()) p = f.degree();
        std::vector<DiffForm> out(static_cast<std::size_t>(rows_),
                                  DiffForm(p + q_));
        for (int j = 0; j < cols_; ++j) {
            // L^k(kappa_j) computed incrementally
            int kmax = -1;
            for (int i = 0; i < rows_; ++i)
                kmax = std::max(kmax, static_cast<int>(entry(i, j).size()) - 1);
            if (kmax < 0) continue;
            std::vector<DiffForm> lk{kappa[static_cast<std::size_t>(j)]};
            for (int k = 1; k <= kmax; ++k)
                lk.push_back(lie_derivative_form(lk.back(), window));
            for (int i = 0; i < rows_; ++i) {
                const auto& slot = entry(i, j);
                for (int k = 0; k < static_cast<int>(slot.size()); ++k) {
                    const DiffForm& eta = slot[static_cast<std::size_t>(k)];
                    if (eta.is_zero()) continue;
                    out[i] = out[i] + wedge(eta, lk[static_cast<std::size_t>(k)]);
                }
            }
        }
        return out;
    }

    int max_order() const {
        int mx = -1;
        for (auto& slot : e_)
            for (auto& f : slot) mx = std::max(mx, f.max_order());
        return mx;
    }

  private:
    int rows_ = 0, cols_ = 0, q_ = 0;
    std::vector<std::vector<DiffForm>> e_;
};

// composition with the Leibniz expansion of D^k past forms:
// (eta ^ D^k) o (zeta ^ D^r) = sum_s C(k,s) (eta ^ L^s zeta) ^ D^(k+r-s)
inline FormOperator operator_compose(const FormOperator& a, const FormOperator& b,
                                     const JetWindow& window = {}) {
    if (a.cols() != b.rows())
        throw DimensionMismatch("operator composition shape mismatch");
    FormOperator r(a.rows(), b.cols(), a.degree() + b.degree());
    for (int i = 0; i < a.rows(); ++i)
        for (int l = 0; l < a.cols(); ++l) {
            const auto& left = a.entry(i, l);
            if (left.empty()) continue;
            for (int j = 0; j < b.cols(); ++j) {
                const auto& right = b.entry(l, j);
                if (right.empty()) continue;
                for (int rk = 0; rk < static_cast<int>(right.size()); ++rk) {
                    const DiffForm& zeta = right[static_cast<std::size_t>(rk)];
                    if (zeta.is_zero()) continue;
                    int kmax = static_cast<int>(left.size()) - 1;
                    std::vector<DiffForm> lz{zeta};
                    for (int s = 1; s <= kmax; ++s)
                        lz.push_back(lie_derivative_form(lz.back(), window));
                    for (int k = 0; k <= kmax; ++k) {
                        const DiffForm& eta = left[static_cast<std::size_t>(k)];
                        if (eta.is_zero()) continue;
                        Rational binom(1);
                        for (int s = 0; s <= k; ++s) {
                            DiffForm term = wedge(
                                eta, lz[static_cast<std::size_t>(s)]);
                            if (!term.is_zero())
                                r.add_term(i, j, k + rk - s,
                                           Expr::number(binom) * term);
                            binom = binom * (k - s) / (s + 1);
                        }
                    }
                }
            }
        }
    return r;
}

inline FormOperator operator*(const FormOperator& a, const FormOperator& b) {
    return operator_compose(a, b);
}
inline FormOperator operator*(const OreMatrix& h, const FormOperator& b) {
    return operator_compose(FormOperator::from_matrix(h), b);
}
inline FormOperator operator*(const FormOperator& a, const OreMatrix& h) {
    return operator_compose(a, FormOperator::from_matrix(h));
}

// the matrix exterior defect, by value: dgoth(H) kappa = d(H kappa) - H d(kappa)
inline std::vector<DiffForm> dgoth_matrix(const OreMatrix& h,
                                          const std::vector<DiffForm>& kappa,
                                          const JetWindow& window = {}) {
    if (h.rows() != h.cols())
        throw DimensionMismatch("dgoth expects a square matrix");
    std::vector<DiffForm> hk = mat_apply(h, kappa, window);
    std::vector<DiffForm> dk;
    dk.reserve(kappa.size());
    for (auto& f : kappa) dk.push_back(exterior_d(f));
    std::vector<DiffForm> hdk = mat_apply(h, dk, window);
    std::vector<DiffForm> out;
    out.reserve(kappa.size());
    for (std::size_t i = 0; i < kappa.size(); ++i)
        out.push_back(exterior_d(hk[i]) - hdk[i]);
    return out;
}

// In the normal form sum_k eta_k ^ D^k the defect operator is entrywise d:
// dgoth(sum eta_k ^ D^k) = sum (d eta_k) ^ D^k, of degree q+1.
inline FormOperator dgoth_operator(const FormOperator& mu) {
    FormOperator r(mu.rows(), mu.cols(), mu.degree() + 1);
    for (int i = 0; i < mu.rows(); ++i)
        for (int j = 0; j < mu.cols(); ++j) {
            const auto& slot = mu.entry(i, j);
            for (int k = 0; k < static_cast<int>(slot.size()); ++k) {
                DiffForm de = exterior_d(slot[static_cast<std::size_t>(k)]);
                if (!de.is_zero()) r.add_term(i, j, k, de);
            }
        }
    return r;
}

inline FormOperator dgoth_operator(const OreMatrix& h) {
    return dgoth_operator(FormOperator::from_matrix(h));
}

// definitional evaluation (test oracle): dgoth(mu) kappa = d(mu kappa) - (-1)^q mu d(kappa)
inline std::vector<DiffForm> dgoth_apply_definition(
    const FormOperator& mu, const std::vector<DiffForm>& kappa,
    const JetWindow& window = {}) {
    std::vector<DiffForm> mk = mu.apply(kappa, window);
    std::vector<DiffForm> dk;
    dk.reserve(kappa.size());
    for (auto& f : kappa) dk.push_back(exterior_d(f));
    std::vector<DiffForm> mdk = mu.apply(dk, window);
    std::vector<DiffForm> out;
    int sign = (mu.degree() % 2 == 0) ? 1 : -1;
    for (std::size_t i = 0; i < kappa.size(); ++i) {
        DiffForm t = exterior_d(mk[i]);
        out.push_back(sign > 0 ? t - mdk[i] : t + mdk[i]);
    }
    return out;
}

}  // namespace flatcert
