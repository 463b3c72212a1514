// shared helpers for the test suites
#pragma once

#include <random>

#include "flatcert/form_operator.hpp"
#include "flatcert/ore_matrix.hpp"

namespace flatcert::testing {

inline Expr var(const std::string& n, int order = 0) {
    return Expr::jet(ExprPool::instance().var(n), order);
}
inline JetCoord coord(const std::string& n, int order = 0) {
    return JetCoord{ExprPool::instance().var(n), order};
}

// coefficient pool for random Ore matrices: rational-trigonometric in a small
// set of jet variables
inline Expr random_coeff(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> kind(0, 6);
    std::uniform_int_distribution<int> cpick(-3, 3);
    int c = cpick(rng);
    if (c == 0) c = 1;
    switch (kind(rng)) {
        case 0: return Expr::integer(c);
        case 1: return var("w1") * Expr::integer(c);
        case 2: return var("w1", 1) + Expr::integer(c);
        case 3: return sin(var("wth")) * Expr::integer(c);
        case 4: return cos(var("wth")) * Expr::integer(c);
        case 5: return var("w2") + var("w1") * Expr::integer(c);
        default: return Expr::integer(c) + sin(var("wth")) * cos(var("wth"));
    }
}

inline OrePoly random_ore_poly(std::mt19937_64& rng, int maxdeg) {
    std::uniform_int_distribution<int> dpick(0, maxdeg);
    int d = dpick(rng);
    std::vector<Expr> cs;
    std::uniform_int_distribution<int> zero(0, 3);
    for (int k = 0; k <= d; ++k)
        cs.push_back(zero(rng) == 0 ? kZero : random_coeff(rng));
    if (cs.back().is_zero_canonical()) cs.back() = random_coeff(rng);
    return OrePoly::from_coeffs(std::move(cs));
}

inline OreMatrix random_ore_matrix(std::mt19937_64& rng, int rows, int cols,
                                   int maxdeg) {
    OreMatrix m(rows, cols);
    std::uniform_int_distribution<int> zero(0, 4);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            if (zero(rng) != 0) m.at(i, j) = random_ore_poly(rng, maxdeg);
    return m;
}

// random unimodular matrix with its action log
inline UniMat random_unimodular(std::mt19937_64& rng, int n, int actions,
                                int maxdeg = 1) {
    UniMat u = UniMat::identity(n);
    std::uniform_int_distribution<int> idx(0, n - 1);
    std::uniform_int_distribution<int> kind(0, 3);
    for (int t = 0; t < actions; ++t) {
        int i = idx(rng), j = idx(rng);
        if (kind(rng) == 0) {
            std::uniform_int_distribution<int> cpick(1, 3);
            ElementaryAction a{ElementaryAction::Kind::Scale, i, 0, {},
                               Expr::integer(cpick(rng))};
            apply_right(u.mat, a);
            u.product.push_back(a);
        } else {
            if (i == j) j = (j + 1) % n;
            ElementaryAction a{ElementaryAction::Kind::AddMul, i, j,
                               random_ore_poly(rng, maxdeg), kOne};
            apply_right(u.mat, a);
            u.product.push_back(a);
        }
    }
    return u;
}

// numeric comparison of matrices as operators: apply both to random test
// functions and evaluate at random points
inline bool numeric_operator_equal(const OreMatrix& a, const OreMatrix& b,
                                   std::mt19937_64& rng, int npoints = 3,
                                   double tol = 1e-7) {
    if (a.cols() != b.cols() || a.rows() != b.rows()) return false;
    std::uniform_int_distribution<int> cpick(-2, 2);
    std::vector<Expr> g;
    for (int j = 0; j < a.cols(); ++j) {
        std::string tf = "tf" + std::to_string(j);
        g.push_back(var(tf) + Expr::integer(cpick(rng)) * var(tf) * var(tf) +
                    Expr::integer(cpick(rng)));
    }
    std::vector<Expr> av = a.apply(g), bv = b.apply(g);
    std::set<JetCoord> coords;
    std::set<std::string> params;
    auto absorb = [&](const Expr& e) {
        for (auto& c : jet_coords_of(e)) coords.insert(c);
        for (auto& p : params_of(e)) params.insert(p);
    };
    for (auto& e : av) absorb(e);
    for (auto& e : bv) absorb(e);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::uniform_real_distribution<double> up(0.25, 2.0);
    for (int pt = 0; pt < npoints; ++pt) {
        EvalPoint p;
        for (auto& c : coords) p.jets[c] = u(rng);
        for (auto& s : params) p.params[s] = up(rng);
        for (std::size_t i = 0; i < av.size(); ++i) {
            double x, y;
            try {
                x = eval_numeric(av[i], p);
                y = eval_numeric(bv[i], p);
            } catch (const EvalError&) {
                continue;  // pole; try another point
            }
            double scale = std::max({1.0, std::abs(x), std::abs(y)});
            if (std::abs(x - y) > tol * scale) return false;
        }
    }
    return true;
}

// random q=1 form operator over the pool variables
inline FormOperator random_form_operator(std::mt19937_64& rng, int m,
                                         int max_k = 1) {
    FormOperator op(m, m, 1);
    std::uniform_int_distribution<int> kpick(0, max_k);
    std::uniform_int_distribution<int> zero(0, 2);
    std::uniform_int_distribution<int> which(0, 2);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            if (zero(rng) == 0) continue;
            DiffForm eta(1);
            JetCoord c = which(rng) == 0   ? coord("w1")
                         : which(rng) == 1 ? coord("w2")
                                           : coord("wth");
            eta.add(WedgeBasis{{c}}, random_coeff(rng));
            op.add_term(i, j, kpick(rng), eta);
        }
    return op;
}

inline std::vector<DiffForm> random_form_vector(std::mt19937_64& rng, int m,
                                                int degree) {
    std::vector<DiffForm> v;
    std::uniform_int_distribution<int> opick(0, 1);
    for (int i = 0; i < m; ++i) {
        DiffForm f(degree);
        std::vector<JetCoord> pool{coord("w1"), coord("w2"), coord("wth"),
                                   coord("w1", 1)};
        std::shuffle(pool.begin(), pool.end(), rng);
        std::vector<JetCoord> w(pool.begin(), pool.begin() + degree);
        normalize_wedge(w);
        f.add(WedgeBasis{w}, random_coeff(rng));
        std::shuffle(pool.begin(), pool.end(), rng);
        std::vector<JetCoord> w2(pool.begin(), pool.begin() + degree);
        if (normalize_wedge(w2) != 0) f.add(WedgeBasis{w2}, random_coeff(rng));
        v.push_back(f);
    }
    return v;
}

}  // namespace flatcert::testing
