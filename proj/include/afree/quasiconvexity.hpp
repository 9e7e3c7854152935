/*
 * quasiconvexity.hpp — numerical probing of constraint quasiconvexity.
 *
 * The inequality under test: g(z) <= average of g(z + w) over all smooth
 * zero-mean periodic fields w compatible with the constraint. The probe
 * parametrizes w by real cosine/sine coefficients over the symbol-kernel
 * basis up to a frequency cutoff (admissibility holds by construction),
 * minimizes the grid average by projected gradient descent inside a
 * coefficient ball, and reports the gap best - g(z).
 *
 * Semantics are asymmetric by nature: a clearly negative gap certifies the
 * inequality fails at z (up to discretization); a nonnegative outcome is
 * sampling evidence only, and results are flagged accordingly.
 */

#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "afree/linear_operator.hpp"
#include "afree/oscillation.hpp"
#include "afree/periodic_field.hpp"
#include "afree/spectral.hpp"
#include "afree/utils.hpp"
#include "afree/young_measure.hpp"

namespace afree {

// Scalar test function with gradient and a declared (unverified) growth
// exponent |g(w)| <= C (1 + |w|^p).
struct GFunction {
    std::string name;
    double growth_p = 2.0;
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

inline GFunction g_linear(const Eigen::VectorXd& c) {
    return {"linear", 1.0, [c](const Eigen::VectorXd& z) { return c.dot(z); },
            [c](const Eigen::VectorXd&) { return c; }};
}

inline GFunction g_norm_sq() {
    return {"norm_sq", 2.0, [](const Eigen::VectorXd& z) { return z.squaredNorm(); },
            [](const Eigen::VectorXd& z) -> Eigen::VectorXd { return 2.0 * z; }};
}

inline GFunction g_neg_norm_sq() {
    return {"neg_norm_sq", 2.0, [](const Eigen::VectorXd& z) { return -z.squaredNorm(); },
            [](const Eigen::VectorXd& z) -> Eigen::VectorXd { return -2.0 * z; }};
}

// g(y) = -(c.y)^2, concave along c.
inline GFunction g_neg_dir_sq(const Eigen::VectorXd& c) {
    return {"neg_dir_sq", 2.0,
            [c](const Eigen::VectorXd& z) {
                double s = c.dot(z);
                return -s * s;
            },
            [c](const Eigen::VectorXd& z) -> Eigen::VectorXd { return -2.0 * c.dot(z) * c; }};
}

// Convex quadratic |M z + b|^2.
inline GFunction g_convex_quadratic(const Eigen::MatrixXd& m, const Eigen::VectorXd& b) {
    return {"convex_quadratic", 2.0,
            [m, b](const Eigen::VectorXd& z) { return (m * z + b).squaredNorm(); },
            [m, b](const Eigen::VectorXd& z) -> Eigen::VectorXd { return 2.0 * m.transpose() * (m * z + b); }};
}

// Kernel bases of the symbol over the lattice cutoff box. Bases are real
// (the symbol is a real matrix), so the modes stored for -k coincide with
// the conjugates of those for k and real fields are parametrizable directly.
struct AFreeBasis {
    struct Mode {
        Eigen::VectorXi k;
        Eigen::MatrixXd basis;  // d x m, orthonormal columns spanning ker symbol(2 pi k)
    };
    int cutoff = 0;
    std::vector<Mode> modes;            // every k with 0 < |k|_inf <= cutoff and m > 0
    std::vector<std::size_t> canonical;  // indices of modes with first nonzero k-component > 0
};

// Null space of the symbol at every lattice frequency in the cutoff box.
// Frequencies with a trivial kernel are omitted; under constant rank every
// stored mode has kernel dimension d - r.
inline AFreeBasis afree_basis(const LinearOperator& op, int cutoff_k, double tol = kKernelTol) {
    if (cutoff_k < 1) throw std::invalid_argument("afree_basis: cutoff < 1");
    const int n = op.num_vars();
    const int d = op.state_dim();
    AFreeBasis out;
    out.cutoff = cutoff_k;

    std::vector<int> k(static_cast<std::size_t>(n), -cutoff_k);
    while (true) {
        bool zero = true;
        bool canonical = false;
        for (int a = 0; a < n; ++a) {
            if (k[static_cast<std::size_t>(a)] != 0) {
                zero = false;
                canonical = k[static_cast<std::size_t>(a)] > 0;
                break;
            }
        }
        if (!zero && canonical) {
            Eigen::VectorXd w(n);
            for (int a = 0; a < n; ++a) w[a] = 2.0 * M_PI * k[static_cast<std::size_t>(a)];
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(op.symbol(w), Eigen::ComputeFullV);
            const auto& sv = svd.singularValues();
            double smax = sv.size() > 0 ? sv[0] : 0.0;
            int rank = 0;
            for (Eigen::Index i = 0; i < sv.size(); ++i)
                if (smax > 0.0 && sv[i] > tol * smax) ++rank;
            if (rank < d) {
                Eigen::VectorXi kv(n);
                for (int a = 0; a < n; ++a) kv[a] = k[static_cast<std::size_t>(a)];
                Eigen::MatrixXd basis = svd.matrixV().rightCols(d - rank);
                out.canonical.push_back(out.modes.size());
                out.modes.push_back({kv, basis});
                out.modes.push_back({-kv, basis});
            }
        }
        // odometer over the box
        int a = n - 1;
        while (a >= 0) {
            if (++k[static_cast<std::size_t>(a)] <= cutoff_k) break;
            k[static_cast<std::size_t>(a)] = -cutoff_k;
            --a;
        }
        if (a < 0) break;
    }
    return out;
}

struct ProbeConfig {
    int cutoff_k = 3;
    std::vector<int> dims;  // empty: 16 nodes per axis
    int restarts = 16;
    int max_iters = 200;
    double step0 = 0.25;
    double step_growth = 1.5;
    double armijo = 1e-4;
    double step_tol = 1e-10;   // stationarity threshold on the projected step
    double max_amplitude = 8.0;  // coefficient-vector 2-norm bound (t_max)
    std::uint64_t seed = 0;
};

struct ProbeResult {
    double base_value = 0.0;
    double best_value = 0.0;
    double gap = 0.0;  // best - base, <= 0 (the zero field is always admissible)
    PeriodicField witness;
    int restarts_used = 0;
    int restarts_abandoned = 0;
    bool converged = false;
    double witness_mean_norm = 0.0;
    double witness_residual = 0.0;  // spectral constraint residual of the witness
    int coefficient_count = 0;
    // A nonnegative-looking gap is only evidence; the search space is finite.
    bool evidence_only = true;
};

// The probe objective J(theta) = grid average of g(z + w_theta), where
// w_theta is the real test field with cosine/sine coefficients theta over
// the canonical half of the basis (per canonical mode: m cosine then m sine
// coefficients). Zero-mean and constraint admissibility hold for every
// theta by construction. Non-finite g values surface as std::domain_error.
class ProbeObjective {
  public:
    ProbeObjective(GFunction g, Eigen::VectorXd z, const LinearOperator& op, int cutoff_k,
                   std::vector<int> dims)
        : g_(std::move(g)), z_(std::move(z)), basis_(afree_basis(op, cutoff_k)), grid_(dims),
          d_(op.state_dim()) {
        if (z_.size() != op.state_dim())
            throw std::invalid_argument("ProbeObjective: base point dimension != d");
        if (static_cast<int>(dims.size()) != op.num_vars())
            throw std::invalid_argument("ProbeObjective: dims rank != N");
        for (int na : dims)
            if (na < 4 * cutoff_k)
                throw std::invalid_argument("ProbeObjective: dims must be >= 4K per axis");
        offsets_.resize(basis_.canonical.size());
        total_ = 0;
        for (std::size_t ci = 0; ci < basis_.canonical.size(); ++ci) {
            offsets_[ci] = static_cast<std::size_t>(total_);
            total_ += 2 * static_cast<int>(basis_.modes[basis_.canonical[ci]].basis.cols());
        }
    }

    int coefficient_count() const { return total_; }
    const AFreeBasis& basis() const { return basis_; }
    const GridShape& grid() const { return grid_; }

    PeriodicField synthesize(const Eigen::VectorXd& theta) const {
        check_size(theta);
        SpectralField spec;
        spec.grid = grid_;
        spec.components = d_;
        spec.data.assign(static_cast<std::size_t>(grid_.node_count()) * static_cast<std::size_t>(d_),
                         {0.0, 0.0});
        for (std::size_t ci = 0; ci < basis_.canonical.size(); ++ci) {
            const auto& mode = basis_.modes[basis_.canonical[ci]];
            const int m = static_cast<int>(mode.basis.cols());
            std::int64_t plus = mode_index(mode.k);
            std::int64_t minus = mode_index(-mode.k);
            for (int j = 0; j < m; ++j) {
                double a = theta[static_cast<Eigen::Index>(offsets_[ci]) + j];
                double b = theta[static_cast<Eigen::Index>(offsets_[ci]) + m + j];
                std::complex<double> half(0.5 * a, -0.5 * b);
                for (int c = 0; c < d_; ++c) {
                    spec.coeff(plus)[c] += half * mode.basis(c, j);
                    spec.coeff(minus)[c] += std::conj(half) * mode.basis(c, j);
                }
            }
        }
        return inverse_dft(spec);
    }

    double value(const Eigen::VectorXd& theta) const { return value_of_field(synthesize(theta)); }

    double value_of_field(const PeriodicField& w) const {
        double acc = 0.0;
        for (std::int64_t node = 0; node < w.node_count(); ++node) {
            double v = g_.value(z_ + w.value(node));
            if (!std::isfinite(v)) throw std::domain_error("probe objective: g non-finite");
            acc += v;
        }
        return acc / static_cast<double>(w.node_count());
    }

    // Chain rule through the synthesis: one forward transform of the
    // pointwise gradient field gives every coefficient derivative.
    Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const {
        PeriodicField w = synthesize(theta);
        PeriodicField grad_field(w.grid(), w.components());
        for (std::int64_t node = 0; node < w.node_count(); ++node) {
            Eigen::VectorXd gv = g_.gradient(z_ + w.value(node));
            if (!gv.allFinite()) throw std::domain_error("probe objective: gradient non-finite");
            grad_field.value(node) = gv;
        }
        SpectralField ghat = forward_dft(grad_field);
        Eigen::VectorXd out(total_);
        for (std::size_t ci = 0; ci < basis_.canonical.size(); ++ci) {
            const auto& mode = basis_.modes[basis_.canonical[ci]];
            const int m = static_cast<int>(mode.basis.cols());
            Eigen::VectorXcd gh = ghat.coeff(mode_index(mode.k));
            for (int j = 0; j < m; ++j) {
                std::complex<double> inner = 0.0;
                for (int c = 0; c < d_; ++c) inner += gh[c] * mode.basis(c, j);
                out[static_cast<Eigen::Index>(offsets_[ci]) + j] = inner.real();
                out[static_cast<Eigen::Index>(offsets_[ci]) + m + j] = -inner.imag();
            }
        }
        return out;
    }

  private:
    void check_size(const Eigen::VectorXd& theta) const {
        if (theta.size() != total_) throw std::invalid_argument("ProbeObjective: coefficient size mismatch");
    }
    std::int64_t mode_index(const Eigen::VectorXi& k) const {
        std::vector<int> idx(static_cast<std::size_t>(k.size()));
        for (Eigen::Index a = 0; a < k.size(); ++a) {
            int n = grid_.dims()[static_cast<std::size_t>(a)];
            idx[static_cast<std::size_t>(a)] = k[a] >= 0 ? k[a] : k[a] + n;
        }
        return grid_.flat(idx);
    }

    GFunction g_;
    Eigen::VectorXd z_;
    AFreeBasis basis_;
    GridShape grid_;
    int d_ = 0;
    std::vector<std::size_t> offsets_;
    int total_ = 0;
};

// Minimizes the grid average of g(z + w) over the admissible test-field
// parametrization, from `restarts` random starts plus the zero field, with
// projected gradient descent and backtracking line search inside the
// coefficient ball of radius max_amplitude.
inline ProbeResult probe_quasiconvexity(const GFunction& g, const Eigen::VectorXd& z,
                                        const LinearOperator& op, const ProbeConfig& config) {
    const int n = op.num_vars();
    std::vector<int> dims = config.dims;
    if (dims.empty()) dims.assign(static_cast<std::size_t>(n), 16);

    ProbeObjective objective(g, z, op, config.cutoff_k, dims);
    const int total = objective.coefficient_count();

    ProbeResult result;
    result.base_value = g.value(z);
    if (!std::isfinite(result.base_value))
        throw std::domain_error("probe_quasiconvexity: g non-finite at base point");
    result.coefficient_count = total;
    // The zero field is admissible and gives exactly the base value.
    result.best_value = result.base_value;
    Eigen::VectorXd best_coeffs = Eigen::VectorXd::Zero(total);
    bool best_converged = true;

    auto project = [&](Eigen::VectorXd& theta) {
        double norm = theta.norm();
        if (norm > config.max_amplitude) theta *= config.max_amplitude / norm;
    };

    for (int restart = 0; restart <= config.restarts && total > 0; ++restart) {
        ++result.restarts_used;
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(total);
        if (restart > 0) {
            std::mt19937_64 rng(config.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(restart));
            std::normal_distribution<double> gauss(0.0, 1.0);
            for (int i = 0; i < total; ++i) theta[i] = gauss(rng);
            double norm = theta.norm();
            if (norm > 0.0) theta *= 0.5 * config.max_amplitude / norm;
        }
        try {
            double value = objective.value(theta);
            double step = config.step0;
            bool converged = false;
            for (int iter = 0; iter < config.max_iters; ++iter) {
                Eigen::VectorXd grad = objective.gradient(theta);
                bool accepted = false;
                for (int halving = 0; halving < 50; ++halving) {
                    Eigen::VectorXd cand = theta - step * grad;
                    project(cand);
                    Eigen::VectorXd move = theta - cand;
                    if (move.norm() <= config.step_tol * (1.0 + theta.norm())) {
                        converged = true;
                        break;
                    }
                    double cand_value = objective.value(cand);
                    if (cand_value <= value - config.armijo * grad.dot(move)) {
                        theta = cand;
                        value = cand_value;
                        step *= config.step_growth;
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                if (converged || !accepted) {
                    converged = converged || !accepted;
                    break;
                }
            }
            if (value < result.best_value) {
                result.best_value = value;
                best_coeffs = theta;
                best_converged = converged;
            }
        } catch (const std::domain_error&) {
            ++result.restarts_abandoned;
        }
    }

    result.gap = result.best_value - result.base_value;
    result.converged = best_converged;
    result.witness = objective.synthesize(best_coeffs);
    result.witness_mean_norm = result.witness.mean().norm();
    result.witness_residual = constraint_residual(op, result.witness).l2;
    return result;
}

struct LambdaConvexityResult {
    double min_slack = 0.0;
    double worst_lambda = 0.0;
    double worst_t = 0.0;
};

// Necessary condition along a single wave direction: for zbar in the wave
// cone the square-wave two-point field with duty cycle lambda and amplitude
// t is admissible, so quasiconvexity forces
//   lambda g(z + (1-lambda) t zbar) + (1-lambda) g(z - lambda t zbar) >= g(z).
inline LambdaConvexityResult lambda_convexity_check(const GFunction& g, const Eigen::VectorXd& z,
                                                    const LinearOperator& op, const Eigen::VectorXd& zbar,
                                                    const std::vector<double>& t_grid,
                                                    const std::vector<double>& lambda_grid,
                                                    double rel_tol = kDefaultRankTol) {
    WaveConeVerdict verdict = in_wave_cone(op, zbar, rel_tol);
    if (!verdict.member) throw std::invalid_argument("lambda_convexity_check: zbar not in wave cone");
    if (t_grid.empty() || lambda_grid.empty())
        throw std::invalid_argument("lambda_convexity_check: empty grid");

    LambdaConvexityResult result;
    double base = g.value(z);
    bool first = true;
    for (double lam : lambda_grid) {
        for (double t : t_grid) {
            double slack = lam * g.value(z + (1.0 - lam) * t * zbar) +
                           (1.0 - lam) * g.value(z - lam * t * zbar) - base;
            if (first || slack < result.min_slack) {
                result.min_slack = slack;
                result.worst_lambda = lam;
                result.worst_t = t;
                first = false;
            }
        }
    }
    return result;
}

// Report on the generability conditions for a homogeneous discrete measure:
// (i) the barycenter of a homogeneous measure is constant, hence trivially
// compatible with the constraint; (ii) every discrete measure has finite
// p-moments; (iii) the Jensen inequality against a library of candidate
// functions, with violations probed for quasiconvexity at the barycenter.
struct GenerabilityReport {
    bool barycenter_afree = true;
    std::string barycenter_note;
    double p_exponent = 2.0;
    double p_moment_value = 0.0;
    bool moment_finite = true;
    std::string moment_note;
    struct JensenEntry {
        std::string name;
        double growth_p = 2.0;
        double jensen_gap = 0.0;
        bool flagged = false;  // negative gap: condition (iii) violated pending qc status of g
        std::optional<ProbeResult> probe;
        bool probe_certified_not_qc = false;
    };
    std::vector<JensenEntry> entries;
    bool condition_iii_flagged = false;
    double gap_tol = 1e-10;
};

inline GenerabilityReport check_fonseca_muller(const DiscreteYoungMeasure& nu, const LinearOperator& op,
                                               double p, const std::vector<GFunction>& g_library,
                                               const ProbeConfig& probe_config = {},
                                               double gap_tol = 1e-10) {
    if (!nu.homogeneous())
        throw std::invalid_argument("check_fonseca_muller: only homogeneous measures are supported");
    if (nu.dim() != op.state_dim())
        throw std::invalid_argument("check_fonseca_muller: measure dimension != d");

    GenerabilityReport report;
    report.gap_tol = gap_tol;
    report.barycenter_afree = true;
    report.barycenter_note = "homogeneous measure: barycenter is a constant field, constants satisfy the constraint";
    report.p_exponent = p;
    report.p_moment_value = nu.p_moment(p);
    report.moment_finite = std::isfinite(report.p_moment_value);
    report.moment_note = "finite support: the p-moment condition is automatically satisfied";

    Eigen::VectorXd bary = nu.barycenter();
    for (const auto& g : g_library) {
        GenerabilityReport::JensenEntry entry;
        entry.name = g.name;
        entry.growth_p = g.growth_p;
        entry.jensen_gap = nu.jensen_gap(g.value);
        entry.flagged = entry.jensen_gap < -gap_tol;
        if (entry.flagged) {
            entry.probe = probe_quasiconvexity(g, bary, op, probe_config);
            entry.probe_certified_not_qc = entry.probe->gap < -gap_tol;
            report.condition_iii_flagged = true;
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace afree
