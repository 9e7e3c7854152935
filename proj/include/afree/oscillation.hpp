/*
 * oscillation.hpp — oscillating constraint-compatible fields on the torus.
 *
 * Builds plane-wave laminates between two states along integer wave
 * directions, measures how far a sampled field is from satisfying the
 * differential constraint (spectrally, in L2 and in the Fourier-weighted
 * negative Sobolev norm), projects arbitrary fields onto the constraint
 * kernel, and implements the quantitative reconstruction behind the rigidity
 * phenomenon: when the difference of the two states is outside the wave
 * cone, the volume-fraction field of any exactly constrained field is pinned
 * to its mean by a left-inverse estimate in frequency space.
 */

#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "afree/linear_operator.hpp"
#include "afree/periodic_field.hpp"
#include "afree/spectral.hpp"
#include "afree/utils.hpp"
#include "afree/young_measure.hpp"

namespace afree {

enum class LaminateProfile { square, sine };

struct LaminateSpec {
    Eigen::VectorXd z1;
    Eigen::VectorXd z2;
    double lambda = 0.5;           // volume fraction of z1
    Eigen::VectorXi xi;            // integer wave direction, nonzero
    int oscillations = 1;          // profile repetitions across the torus
    LaminateProfile profile = LaminateProfile::square;
};

namespace detail {

inline double direction_residual(const LinearOperator& op, const Eigen::VectorXd& xi,
                                 const Eigen::VectorXd& diff) {
    double scale = xi.norm() * diff.norm() * op.coeff_scale();
    if (scale == 0.0) return 0.0;
    return (op.symbol(xi) * diff).norm() / scale;
}

}  // namespace detail

// Plane-wave laminate field(x) = z2 + h(oscillations * x.xi) (z1 - z2) with h
// the 1-periodic square wave of duty cycle lambda, or a sine profile
// h = lambda + min(lambda, 1-lambda) sin(2 pi s) staying on the segment.
// Refuses when xi is not a wave direction for z1 - z2: that pair is rigid
// along xi, not approximable.
inline PeriodicField synthesize_laminate(const LinearOperator& op, const LaminateSpec& spec,
                                         const std::vector<int>& dims,
                                         double rel_tol = kDefaultRankTol) {
    const int d = op.state_dim();
    if (spec.z1.size() != d || spec.z2.size() != d)
        throw std::invalid_argument("synthesize_laminate: state dimension != d");
    if (spec.xi.size() != op.num_vars())
        throw std::invalid_argument("synthesize_laminate: direction dimension != N");
    if (spec.xi.isZero()) throw std::invalid_argument("synthesize_laminate: zero direction");
    if (!(spec.lambda >= 0.0 && spec.lambda <= 1.0))
        throw std::invalid_argument("synthesize_laminate: lambda outside [0,1]");
    if (spec.oscillations < 1) throw std::invalid_argument("synthesize_laminate: oscillations < 1");
    Eigen::VectorXd diff = spec.z1 - spec.z2;
    if (diff.norm() == 0.0) throw std::invalid_argument("synthesize_laminate: z1 = z2");
    if (detail::direction_residual(op, spec.xi.cast<double>(), diff) > rel_tol)
        throw std::invalid_argument(
            "synthesize_laminate: direction is not a wave direction for z1 - z2 (rigid pair)");

    GridShape grid(dims);
    if (grid.rank() != op.num_vars()) throw std::invalid_argument("synthesize_laminate: dims rank != N");
    for (int a = 0; a < grid.rank(); ++a) {
        int xa = spec.xi[a];
        if (xa != 0 && dims[static_cast<std::size_t>(a)] < 8 * spec.oscillations * std::abs(xa))
            throw std::invalid_argument("synthesize_laminate: grid does not resolve the oscillation");
    }

    // Exact integer phase on the active axes so duty-cycle node counts (and
    // hence the field mean) are exact whenever lambda * period lands on a
    // node boundary.
    std::int64_t phase_den = 1;
    bool exact_phase = true;
    for (int a = 0; a < grid.rank(); ++a) {
        if (spec.xi[a] == 0) continue;
        std::int64_t n = dims[static_cast<std::size_t>(a)];
        phase_den = std::lcm(phase_den, n);
        if (phase_den > (std::int64_t{1} << 40)) {
            exact_phase = false;
            break;
        }
    }

    PeriodicField field(grid, d);
    const double amp = std::min(spec.lambda, 1.0 - spec.lambda);
    for (std::int64_t node = 0; node < grid.node_count(); ++node) {
        std::vector<int> j = grid.coords(node);
        double frac;
        if (exact_phase) {
            std::int64_t p = 0;
            for (int a = 0; a < grid.rank(); ++a)
                if (spec.xi[a] != 0)
                    p += static_cast<std::int64_t>(spec.xi[a]) * j[static_cast<std::size_t>(a)] *
                         (phase_den / dims[static_cast<std::size_t>(a)]);
            p *= spec.oscillations;
            p %= phase_den;
            if (p < 0) p += phase_den;
            frac = static_cast<double>(p) / static_cast<double>(phase_den);
        } else {
            double s = 0.0;
            for (int a = 0; a < grid.rank(); ++a)
                s += static_cast<double>(spec.xi[a]) * j[static_cast<std::size_t>(a)] /
                     static_cast<double>(dims[static_cast<std::size_t>(a)]);
            s *= spec.oscillations;
            frac = s - std::floor(s);
        }
        if (spec.profile == LaminateProfile::square) {
            field.value(node) = frac < spec.lambda ? spec.z1 : spec.z2;
        } else {
            double h = spec.lambda + amp * std::sin(2.0 * M_PI * frac);
            field.value(node) = spec.z2 + h * diff;
        }
    }
    return field;
}

struct ConstraintResidual {
    double l2 = 0.0;
    double negative_sobolev = 0.0;
};

// Spectral residual of the constraint: per nonzero frequency k the residual
// coefficient is symbol(2 pi k) zhat(k); the zero mode carries none
// (constants are always compatible).
inline ConstraintResidual constraint_residual(const LinearOperator& op, const PeriodicField& field) {
    if (field.components() != op.state_dim())
        throw std::invalid_argument("constraint_residual: field components != d");
    if (field.grid().rank() != op.num_vars())
        throw std::invalid_argument("constraint_residual: grid rank != N");
    for (int n : field.grid().dims())
        if (n < 2) throw std::invalid_argument("constraint_residual: all dims must be >= 2");

    SpectralField spec = forward_dft(field);
    const GridShape& grid = spec.grid;
    double l2_sq = 0.0;
    double sob_sq = 0.0;
    Eigen::VectorXd w(grid.rank());
    for (std::int64_t mode = 1; mode < grid.node_count(); ++mode) {
        std::vector<int> k = grid.signed_frequency(mode);
        double k_sq = 0.0;
        for (int a = 0; a < grid.rank(); ++a) {
            w[a] = 2.0 * M_PI * k[static_cast<std::size_t>(a)];
            k_sq += w[a] * w[a];
        }
        Eigen::MatrixXd sym = op.symbol(w);
        Eigen::VectorXcd zh = spec.coeff(mode);
        Eigen::VectorXd re = sym * zh.real();
        Eigen::VectorXd im = sym * zh.imag();
        double r_sq = re.squaredNorm() + im.squaredNorm();
        l2_sq += r_sq;
        sob_sq += r_sq / k_sq;
    }
    return {std::sqrt(l2_sq), std::sqrt(sob_sq)};
}

namespace detail {

// Canonical primitive integer direction of a nonzero lattice frequency: the
// symbol kernel is homogeneous in k, so projectors are shared along rays.
inline std::vector<int> primitive_direction(std::vector<int> k) {
    std::int64_t g = 0;
    for (int v : k) g = std::gcd(g, static_cast<std::int64_t>(std::abs(v)));
    if (g > 1)
        for (int& v : k) v /= static_cast<int>(g);
    for (int v : k) {
        if (v > 0) break;
        if (v < 0) {
            for (int& u : k) u = -u;
            break;
        }
    }
    return k;
}

inline Eigen::MatrixXd kernel_projector(const LinearOperator& op, const std::vector<int>& k_prim,
                                        double tol = kKernelTol) {
    const int d = op.state_dim();
    Eigen::VectorXd w(op.num_vars());
    for (int a = 0; a < op.num_vars(); ++a) w[a] = static_cast<double>(k_prim[static_cast<std::size_t>(a)]);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(op.symbol(w), Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    double smax = sv.size() > 0 ? sv[0] : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (smax > 0.0 && sv[i] > tol * smax) ++rank;
    if (rank >= d) return Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd null_basis = svd.matrixV().rightCols(d - rank);
    return null_basis * null_basis.transpose();
}

}  // namespace detail

namespace detail {

// On an even axis the index n/2 stands for both +n/2 and -n/2: aliased
// modes whose oscillation direction the grid cannot resolve.
inline bool has_nyquist_component(const GridShape& grid, std::int64_t mode) {
    std::vector<int> idx = grid.coords(mode);
    for (int a = 0; a < grid.rank(); ++a) {
        int n = grid.dims()[static_cast<std::size_t>(a)];
        if (n % 2 == 0 && idx[static_cast<std::size_t>(a)] == n / 2) return true;
    }
    return false;
}

}  // namespace detail

// Orthogonal projection of every nonzero Fourier mode onto the symbol
// kernel; the mean (zero mode) is kept. Modes with a Nyquist component are
// zeroed instead: their oscillation direction is ambiguous on the grid, and
// projecting the two aliases differently would break conjugate symmetry.
// Output satisfies the constraint to spectral accuracy; idempotent and
// L2-nonexpansive.
inline PeriodicField project_afree(const LinearOperator& op, const PeriodicField& field) {
    if (field.components() != op.state_dim())
        throw std::invalid_argument("project_afree: field components != d");
    if (field.grid().rank() != op.num_vars())
        throw std::invalid_argument("project_afree: grid rank != N");

    SpectralField spec = forward_dft(field);
    const GridShape& grid = spec.grid;

    // Projectors are cached per primitive direction (one SVD per ray, shared
    // between k and -k).
    std::map<std::vector<int>, Eigen::MatrixXd> cache;
    std::vector<const Eigen::MatrixXd*> projector(static_cast<std::size_t>(grid.node_count()), nullptr);
    for (std::int64_t mode = 1; mode < grid.node_count(); ++mode) {
        if (detail::has_nyquist_component(grid, mode)) continue;
        std::vector<int> prim = detail::primitive_direction(grid.signed_frequency(mode));
        auto it = cache.find(prim);
        if (it == cache.end()) it = cache.emplace(prim, detail::kernel_projector(op, prim)).first;
        projector[static_cast<std::size_t>(mode)] = &it->second;
    }
    parallel_for(grid.node_count() - 1, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            std::int64_t mode = i + 1;
            auto out = spec.coeff(mode);
            const Eigen::MatrixXd* p = projector[static_cast<std::size_t>(mode)];
            if (p == nullptr) {
                out.setZero();
                continue;
            }
            Eigen::VectorXcd zh = spec.coeff(mode);
            Eigen::VectorXd re = (*p) * zh.real();
            Eigen::VectorXd im = (*p) * zh.imag();
            for (int c = 0; c < spec.components; ++c) out[c] = {re[c], im[c]};
        }
    });
    return inverse_dft(spec);
}

struct SegmentDecomposition {
    PeriodicField lambda_field;  // scalar, clamped to [0,1]
    PeriodicField e_field;       // off-segment remainder
};

// Per node: lambda is the orthogonal projection parameter onto the segment
// [z2, z1] clamped to [0,1]; e is the remainder z - lambda z1 - (1-lambda) z2.
inline SegmentDecomposition segment_decompose(const PeriodicField& field, const Eigen::VectorXd& z1,
                                              const Eigen::VectorXd& z2) {
    if (z1.size() != field.components() || z2.size() != field.components())
        throw std::invalid_argument("segment_decompose: state dimension mismatch");
    Eigen::VectorXd dir = z1 - z2;
    double len_sq = dir.squaredNorm();
    if (len_sq == 0.0) throw std::invalid_argument("segment_decompose: z1 = z2");

    SegmentDecomposition out{PeriodicField(field.grid(), 1), PeriodicField(field.grid(), field.components())};
    for (std::int64_t node = 0; node < field.node_count(); ++node) {
        double lam = (field.value(node) - z2).dot(dir) / len_sq;
        lam = std::min(1.0, std::max(0.0, lam));
        out.lambda_field.value(node)[0] = lam;
        out.e_field.value(node) = field.value(node) - lam * z1 - (1.0 - lam) * z2;
    }
    return out;
}

struct RigidityReport {
    double left_inverse_min_sv = 0.0;  // smallest singular value of Z2 - Z1
    double kappa = 0.0;                // sigma_max / sigma_min of Z2 - Z1
    PeriodicField lambda_field;
    double lambda_mean = 0.0;
    double reconstruction_error = 0.0;  // grid L2 of (lambda - <lambda>) - lambda_rec
    double e_norm = 0.0;
    double residual_norm = 0.0;
    double grid_h = 0.0;
};

// Quantitative rigidity reconstruction. With ztilde = z_matrix(z2 - z1) of
// full rank N (z2 - z1 outside the wave cone), an exactly constrained field
// satisfies ztilde grad(lambda) = div E nodewise in frequency space, so the
// oscillating part of lambda is recovered through the left inverse
// L = (ztilde^T ztilde)^{-1} ztilde^T. The reported reconstruction error is
// the departure from that identity; it vanishes with the constraint residual.
inline RigidityReport rigidity_reconstruct(const LinearOperator& op, const Eigen::VectorXd& z1,
                                           const Eigen::VectorXd& z2, const PeriodicField& field,
                                           double rel_tol = kDefaultRankTol) {
    const int n = op.num_vars();
    const int l = op.num_equations();
    if (field.components() != op.state_dim())
        throw std::invalid_argument("rigidity_reconstruct: field components != d");
    if (field.grid().rank() != n) throw std::invalid_argument("rigidity_reconstruct: grid rank != N");
    for (int na : field.grid().dims())
        if (na < 4) throw std::invalid_argument("rigidity_reconstruct: all dims must be >= 4");

    Eigen::MatrixXd ztilde = op.z_matrix(z2 - z1);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ztilde);
    const auto& sv = svd.singularValues();
    double smax = sv.size() > 0 ? sv[0] : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (smax > 0.0 && sv[i] > rel_tol * smax) ++rank;
    if (rank < n)
        throw std::invalid_argument("rigidity_reconstruct: difference in wave cone: no left inverse");

    RigidityReport report;
    report.left_inverse_min_sv = sv[n - 1];
    report.kappa = sv[0] / sv[n - 1];
    report.grid_h = field.grid().max_spacing();

    SegmentDecomposition dec = segment_decompose(field, z1, z2);
    report.lambda_field = dec.lambda_field;
    report.lambda_mean = dec.lambda_field.mean()[0];
    report.e_norm = dec.e_field.l2_norm();
    report.residual_norm = constraint_residual(op, field).l2;

    // E(x) = z_matrix(e(x)), stored row-major as an l*N component field.
    PeriodicField e_matrix_field(field.grid(), l * n);
    for (std::int64_t node = 0; node < field.node_count(); ++node) {
        Eigen::MatrixXd em = op.z_matrix(dec.e_field.value(node));
        for (int j = 0; j < l; ++j)
            for (int i = 0; i < n; ++i) e_matrix_field.value(node)[j * n + i] = em(j, i);
    }
    SpectralField e_hat = forward_dft(e_matrix_field);

    // Least-squares recovery of each oscillating lambda mode.
    Eigen::MatrixXd left_inverse = (ztilde.transpose() * ztilde).inverse() * ztilde.transpose();
    SpectralField lambda_rec;
    lambda_rec.grid = field.grid();
    lambda_rec.components = 1;
    lambda_rec.data.assign(static_cast<std::size_t>(field.node_count()), {0.0, 0.0});
    const GridShape& grid = field.grid();
    for (std::int64_t mode = 1; mode < grid.node_count(); ++mode) {
        std::vector<int> k = grid.signed_frequency(mode);
        Eigen::VectorXcd div_e = Eigen::VectorXcd::Zero(l);
        double k_sq = 0.0;
        Eigen::VectorXcd eh = e_hat.coeff(mode);
        for (int i = 0; i < n; ++i) {
            std::complex<double> ik(0.0, 2.0 * M_PI * k[static_cast<std::size_t>(i)]);
            k_sq += std::norm(ik);
            for (int j = 0; j < l; ++j) div_e[j] += ik * eh[j * n + i];
        }
        Eigen::VectorXcd u = (left_inverse * div_e.real()).cast<std::complex<double>>() +
                             std::complex<double>(0.0, 1.0) *
                                 (left_inverse * div_e.imag()).cast<std::complex<double>>();
        std::complex<double> lam_hat = 0.0;
        for (int i = 0; i < n; ++i) {
            std::complex<double> ik(0.0, 2.0 * M_PI * k[static_cast<std::size_t>(i)]);
            lam_hat += u[i] * std::conj(ik);
        }
        lambda_rec.coeff(mode)[0] = lam_hat / k_sq;
    }
    PeriodicField lambda_rec_field = inverse_dft(lambda_rec);

    double err_sq = 0.0;
    for (std::int64_t node = 0; node < field.node_count(); ++node) {
        double diff = dec.lambda_field.value(node)[0] - report.lambda_mean - lambda_rec_field.value(node)[0];
        err_sq += diff * diff;
    }
    report.reconstruction_error = std::sqrt(err_sq / static_cast<double>(field.node_count()));
    return report;
}

enum class FeasibilityVerdict { oscillation_constructible, rigid };

struct FeasibilityResult {
    FeasibilityVerdict verdict = FeasibilityVerdict::rigid;
    WaveConeVerdict cone;
    std::optional<Eigen::VectorXi> direction;   // rationalized wave direction
    std::optional<LaminateSpec> laminate;       // ready-to-synthesize spec
};

namespace detail {

// Nearest small integer vector to a real null direction that still
// annihilates the difference state; the torus needs integer frequencies.
inline std::optional<Eigen::VectorXi> rationalize_direction(const LinearOperator& op,
                                                            const Eigen::VectorXd& direction,
                                                            const Eigen::VectorXd& diff, double rel_tol,
                                                            int max_den = 24) {
    double inf_norm = direction.lpNorm<Eigen::Infinity>();
    if (inf_norm == 0.0) return std::nullopt;
    Eigen::VectorXd unit = direction / inf_norm;
    for (int q = 1; q <= max_den; ++q) {
        Eigen::VectorXi cand(direction.size());
        for (Eigen::Index i = 0; i < direction.size(); ++i)
            cand[i] = static_cast<int>(std::lround(q * unit[i]));
        if (cand.isZero()) continue;
        if (direction_residual(op, cand.cast<double>(), diff) <= rel_tol) {
            std::int64_t g = 0;
            for (Eigen::Index i = 0; i < cand.size(); ++i)
                g = std::gcd(g, static_cast<std::int64_t>(std::abs(cand[i])));
            if (g > 1) cand /= static_cast<int>(g);
            return cand;
        }
    }
    return std::nullopt;
}

}  // namespace detail

// Dichotomy of the rigidity theorem: a pair of distinct states supports
// one-dimensional oscillations iff its difference lies in the wave cone.
inline FeasibilityResult oscillation_feasibility(const LinearOperator& op, const Eigen::VectorXd& z1,
                                                 const Eigen::VectorXd& z2,
                                                 double rel_tol = kDefaultRankTol) {
    Eigen::VectorXd diff = z2 - z1;
    if (diff.norm() == 0.0) throw std::invalid_argument("oscillation_feasibility: z1 = z2");
    FeasibilityResult result;
    result.cone = in_wave_cone(op, diff, rel_tol);
    if (!result.cone.member) {
        result.verdict = FeasibilityVerdict::rigid;
        return result;
    }
    result.verdict = FeasibilityVerdict::oscillation_constructible;
    for (const auto& dir : result.cone.directions) {
        auto cand = detail::rationalize_direction(op, dir, diff, rel_tol);
        if (cand) {
            result.direction = *cand;
            LaminateSpec spec;
            spec.z1 = z1;
            spec.z2 = z2;
            spec.lambda = 0.5;
            spec.xi = *cand;
            spec.oscillations = 1;
            spec.profile = LaminateProfile::square;
            result.laminate = spec;
            break;
        }
    }
    return result;
}

// Young measure generated by a sampled field: every node value is a sample.
inline DiscreteYoungMeasure field_young_measure(const PeriodicField& field, double cluster_tol) {
    std::vector<Eigen::VectorXd> samples;
    samples.reserve(static_cast<std::size_t>(field.node_count()));
    for (std::int64_t node = 0; node < field.node_count(); ++node) samples.emplace_back(field.value(node));
    return empirical_measure(samples, cluster_tol);
}

}  // namespace afree
