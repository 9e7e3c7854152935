/*
 * exact_rank.hpp — exact rational-arithmetic rank of the symbol.
 *
 * Optional slow path next to the SVD rank: frequencies are given as exact
 * fractions, coefficient entries are converted from double without rounding
 * (every finite double is a binary rational), and the rank is obtained by
 * Gaussian elimination over the rationals. No tolerances involved.
 */

#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "afree/linear_operator.hpp"

namespace afree {

using BigRational = boost::multiprecision::cpp_rational;

// Frequency component p/q.
struct Fraction {
    long long num = 0;
    long long den = 1;
};

namespace detail {

inline int rational_row_echelon_rank(std::vector<std::vector<BigRational>>& m) {
    if (m.empty()) return 0;
    const std::size_t rows = m.size();
    const std::size_t cols = m.front().size();
    std::size_t pivot_row = 0;
    for (std::size_t col = 0; col < cols && pivot_row < rows; ++col) {
        std::size_t sel = pivot_row;
        while (sel < rows && m[sel][col] == 0) ++sel;
        if (sel == rows) continue;
        std::swap(m[sel], m[pivot_row]);
        for (std::size_t r = pivot_row + 1; r < rows; ++r) {
            if (m[r][col] == 0) continue;
            BigRational factor = m[r][col] / m[pivot_row][col];
            for (std::size_t c = col; c < cols; ++c) m[r][c] -= factor * m[pivot_row][c];
        }
        ++pivot_row;
    }
    return static_cast<int>(pivot_row);
}

}  // namespace detail

// Exact rank of symbol(w) for a rational frequency w.
inline int exact_symbol_rank(const LinearOperator& op, const std::vector<Fraction>& w) {
    if (static_cast<int>(w.size()) != op.num_vars())
        throw std::invalid_argument("exact_symbol_rank: frequency dimension != N");
    for (const auto& f : w)
        if (f.den == 0) throw std::invalid_argument("exact_symbol_rank: zero denominator");

    const int l = op.num_equations();
    const int d = op.state_dim();
    std::vector<std::vector<BigRational>> m(static_cast<std::size_t>(l),
                                            std::vector<BigRational>(static_cast<std::size_t>(d), 0));
    for (int i = 0; i < op.num_vars(); ++i) {
        BigRational wi(w[static_cast<std::size_t>(i)].num, w[static_cast<std::size_t>(i)].den);
        if (wi == 0) continue;
        const Eigen::MatrixXd& a = op.coeff(i);
        for (int r = 0; r < l; ++r)
            for (int c = 0; c < d; ++c)
                if (a(r, c) != 0.0)
                    m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] += wi * BigRational(a(r, c));
    }
    return detail::rational_row_echelon_rank(m);
}

}  // namespace afree
