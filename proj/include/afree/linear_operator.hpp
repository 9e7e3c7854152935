/*
 * linear_operator.hpp — constant-coefficient first-order differential
 * constraints and their wave analysis.
 *
 * A constraint sum_i A^(i) d z / d x_i = 0 is represented by its N
 * coefficient matrices (each l x d). The module computes:
 *
 *   symbol(w)          the l x d matrix sum_i w_i A^(i)
 *   z_matrix(z)        the l x N matrix with columns A^(i) z, which turns the
 *                      constraint into a row-wise divergence
 *   numeric_rank       SVD rank with relative singular-value thresholding
 *   check_constant_rank  sampled verdict on whether rank symbol(w) is the
 *                      same for every unit frequency w (evidence, not proof)
 *   in_wave_cone       membership of a state in the wave cone: nonzero z
 *                      whose z-matrix is rank-deficient, together with the
 *                      oscillation directions (null space of the z-matrix)
 */

#pragma once

#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "afree/utils.hpp"

namespace afree {

class LinearOperator {
  public:
    // One matrix per independent variable; all l x d, not all zero.
    explicit LinearOperator(std::vector<Eigen::MatrixXd> coeffs) : coeffs_(std::move(coeffs)) {
        if (coeffs_.empty()) throw std::invalid_argument("LinearOperator: no coefficient matrices");
        l_ = static_cast<int>(coeffs_.front().rows());
        d_ = static_cast<int>(coeffs_.front().cols());
        if (l_ < 1 || d_ < 1) throw std::invalid_argument("LinearOperator: empty coefficient matrix");
        double scale = 0.0;
        for (const auto& a : coeffs_) {
            if (a.rows() != l_ || a.cols() != d_)
                throw std::invalid_argument("LinearOperator: coefficient matrices differ in shape");
            if (!a.allFinite()) throw std::invalid_argument("LinearOperator: non-finite coefficient");
            scale += a.norm();
        }
        if (scale == 0.0) throw std::invalid_argument("LinearOperator: all coefficient matrices are zero");
        coeff_scale_ = scale;
    }

    int num_vars() const { return static_cast<int>(coeffs_.size()); }  // N
    int state_dim() const { return d_; }                               // d
    int num_equations() const { return l_; }                           // l
    const Eigen::MatrixXd& coeff(int i) const { return coeffs_.at(static_cast<std::size_t>(i)); }

    // sum_i ||A^(i)||_F; reference scale for relative residuals.
    double coeff_scale() const { return coeff_scale_; }

    // symbol(w) = sum_i w_i A^(i). Linear in w; w = 0 gives the zero matrix.
    Eigen::MatrixXd symbol(const Eigen::VectorXd& w) const {
        if (w.size() != num_vars()) throw std::invalid_argument("symbol: frequency dimension != N");
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(l_, d_);
        for (int i = 0; i < num_vars(); ++i) s += w[i] * coeffs_[static_cast<std::size_t>(i)];
        return s;
    }

    // Z(z) is l x N with column i equal to A^(i) z, so that the constraint
    // reads div Z = 0 and Z(z) xi = symbol(xi) z for every xi.
    Eigen::MatrixXd z_matrix(const Eigen::VectorXd& z) const {
        if (z.size() != d_) throw std::invalid_argument("z_matrix: state dimension != d");
        Eigen::MatrixXd zm(l_, num_vars());
        for (int i = 0; i < num_vars(); ++i) zm.col(i) = coeffs_[static_cast<std::size_t>(i)] * z;
        return zm;
    }

  private:
    std::vector<Eigen::MatrixXd> coeffs_;
    int l_ = 0;
    int d_ = 0;
    double coeff_scale_ = 0.0;
};

// Count of singular values above rel_tol * sigma_max. The zero matrix has
// rank 0; rel_tol must lie in (0, 1).
inline int numeric_rank(const Eigen::MatrixXd& m, double rel_tol = kDefaultRankTol) {
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw std::invalid_argument("numeric_rank: rel_tol outside (0,1)");
    if (!m.allFinite()) throw std::invalid_argument("numeric_rank: non-finite entries");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) return 0;
    double cut = rel_tol * sv[0];
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > cut) ++r;
    return r;
}

struct ConstantRankReport {
    bool constant = false;
    int rank = -1;                       // common rank when constant
    std::map<int, int> rank_counts;      // observed rank -> number of samples
    // First pair of frequencies with different ranks, when not constant.
    std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> witness;
    std::optional<std::pair<int, int>> witness_ranks;
    int samples_evaluated = 0;
    double rel_tol = kDefaultRankTol;
    // Sampling can only ever provide evidence for constancy, never a proof.
    bool evidence_only = true;
};

// Evaluates numeric_rank(symbol(w)) at n_samples pseudo-random unit
// frequencies plus the 2N signed coordinate directions.
inline ConstantRankReport check_constant_rank(const LinearOperator& op, int n_samples,
                                              double rel_tol = kDefaultRankTol,
                                              std::uint64_t seed = 0) {
    if (n_samples < 1) throw std::invalid_argument("check_constant_rank: n_samples < 1");
    const int n = op.num_vars();
    ConstantRankReport report;
    report.rel_tol = rel_tol;

    std::optional<Eigen::VectorXd> first_freq;
    int first_rank = -1;
    auto visit = [&](const Eigen::VectorXd& w) {
        int r = numeric_rank(op.symbol(w), rel_tol);
        ++report.rank_counts[r];
        ++report.samples_evaluated;
        if (!first_freq) {
            first_freq = w;
            first_rank = r;
        } else if (r != first_rank && !report.witness) {
            report.witness = std::make_pair(*first_freq, w);
            report.witness_ranks = std::make_pair(first_rank, r);
        }
    };

    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e[i] = 1.0;
        visit(e);
        visit(-e);
    }
    std::mt19937_64 rng(seed);
    for (int s = 0; s < n_samples; ++s) visit(random_unit_vector(rng, n));

    report.constant = report.rank_counts.size() == 1;
    if (report.constant) report.rank = report.rank_counts.begin()->first;
    return report;
}

struct WaveConeVerdict {
    bool member = false;
    int z_rank = 0;
    // Orthonormal basis of the numeric null space of the z-matrix; the
    // admissible oscillation directions. Empty when member = false.
    std::vector<Eigen::VectorXd> directions;
    double tolerance_used = kDefaultRankTol;
};

// Wave-cone membership: z != 0 belongs to the cone iff its z-matrix has rank
// below N. The zero state is excluded by definition and rejected.
inline WaveConeVerdict in_wave_cone(const LinearOperator& op, const Eigen::VectorXd& z,
                                    double rel_tol = kDefaultRankTol) {
    if (z.size() != op.state_dim()) throw std::invalid_argument("in_wave_cone: state dimension != d");
    if (z.norm() == 0.0) throw std::invalid_argument("in_wave_cone: zero state excluded from the wave cone");
    const int n = op.num_vars();
    Eigen::MatrixXd zm = op.z_matrix(z);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(zm, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    double smax = sv.size() > 0 ? sv[0] : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (smax > 0.0 && sv[i] > rel_tol * smax) ++rank;

    WaveConeVerdict verdict;
    verdict.z_rank = rank;
    verdict.member = rank < n;
    verdict.tolerance_used = rel_tol;
    if (verdict.member) {
        const Eigen::MatrixXd& v = svd.matrixV();  // N x N
        for (int i = rank; i < n; ++i) verdict.directions.push_back(v.col(i));
    }
    return verdict;
}

// --- builtin operators ------------------------------------------------------

// Divergence constraint on R^n: l = 1, d = N = n, A^(i) = i-th basis row.
inline LinearOperator divergence_operator(int n) {
    if (n < 1) throw std::invalid_argument("divergence_operator: n < 1");
    std::vector<Eigen::MatrixXd> coeffs;
    coeffs.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(1, n);
        a(0, i) = 1.0;
        coeffs.push_back(a);
    }
    return LinearOperator(std::move(coeffs));
}

// Demo without the constant-rank property: A^(1) = diag(1,0), A^(2) =
// diag(0,1), so symbol(w) = diag(w1, w2) drops rank on the axes.
inline LinearOperator axis_scaling_operator() {
    Eigen::MatrixXd a1 = Eigen::MatrixXd::Zero(2, 2);
    Eigen::MatrixXd a2 = Eigen::MatrixXd::Zero(2, 2);
    a1(0, 0) = 1.0;
    a2(1, 1) = 1.0;
    return LinearOperator({a1, a2});
}

}  // namespace afree
