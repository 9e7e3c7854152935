/*
 * afree — command-line experiments for linearly constrained fields.
 *
 * Subcommands: rank-check, wave-cone, laminate, rigidity, qc-probe,
 * euler-counterexample, mvs-check. Every run writes a manifest echo of its
 * inputs next to the JSON reports; identical manifests reproduce
 * byte-identical reports.
 */

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "afree/euler.hpp"
#include "afree/exact_rank.hpp"
#include "afree/io.hpp"
#include "afree/linear_operator.hpp"
#include "afree/oscillation.hpp"
#include "afree/quasiconvexity.hpp"
#include "afree/utils.hpp"
#include "afree/young_measure.hpp"

namespace fs = std::filesystem;
using namespace afree;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNegative = 1;  // semantic "no" (non-member, non-constant, rigid, ...)
constexpr int kExitError = 2;     // malformed input or degenerate parameters

Eigen::VectorXd parse_vector(const std::string& csv) {
    std::vector<double> values;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        values.push_back(std::stod(tok));
    }
    if (values.empty()) throw ParseError("empty vector: '" + csv + "'");
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
    return v;
}

std::vector<int> parse_ints(const std::string& csv) {
    std::vector<int> values;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        values.push_back(std::stoi(tok));
    }
    if (values.empty()) throw ParseError("empty list: '" + csv + "'");
    return values;
}

struct Manifest {
    std::string command;
    std::vector<std::pair<std::string, std::string>> params;

    void add(const std::string& key, const std::string& value) { params.emplace_back(key, value); }
    void add(const std::string& key, double value) { params.emplace_back(key, format_double(value)); }
    void add(const std::string& key, std::int64_t value) { params.emplace_back(key, std::to_string(value)); }

    void write(const fs::path& out_dir) const {
        JsonWriter w;
        w.begin_object();
        w.field("command", command);
        w.field("version", kVersion);
        w.field("threads", static_cast<std::int64_t>(thread_budget()));
        w.key("parameters").begin_object();
        for (const auto& [key, value] : params) w.field(key, value);
        w.end_object();
        w.end_object();
        atomic_write_file(out_dir / "manifest.json", w.str());
    }
};

// Integrand grammar: "norm-sq", "neg-norm-sq", "linear:c1,c2,...",
// "neg-dir-sq:c1,c2,...", "quadratic-form:q11,q12,...;b1,...;c0" (Q row-major).
GFunction parse_gfunction(const std::string& spec, int d) {
    std::string name = spec;
    std::string args;
    if (auto pos = spec.find(':'); pos != std::string::npos) {
        name = spec.substr(0, pos);
        args = spec.substr(pos + 1);
    }
    if (name == "norm-sq") return g_norm_sq();
    if (name == "neg-norm-sq") return g_neg_norm_sq();
    if (name == "linear") {
        Eigen::VectorXd c = parse_vector(args);
        if (c.size() != d) throw ParseError("linear g: coefficient dimension != d");
        return g_linear(c);
    }
    if (name == "neg-dir-sq") {
        Eigen::VectorXd c = parse_vector(args);
        if (c.size() != d) throw ParseError("neg-dir-sq g: coefficient dimension != d");
        return g_neg_dir_sq(c);
    }
    if (name == "quadratic-form") {
        std::vector<std::string> parts;
        std::stringstream ss(args);
        std::string tok;
        while (std::getline(ss, tok, ';')) parts.push_back(tok);
        if (parts.size() != 3) throw ParseError("quadratic-form g: expected Q;b;c");
        Eigen::VectorXd q_flat = parse_vector(parts[0]);
        Eigen::VectorXd b = parse_vector(parts[1]);
        double c0 = std::stod(parts[2]);
        if (q_flat.size() != static_cast<Eigen::Index>(d) * d || b.size() != d)
            throw ParseError("quadratic-form g: dimension mismatch");
        Eigen::MatrixXd q(d, d);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) q(r, c) = q_flat[r * d + c];
        GFunction g;
        g.name = "quadratic_form";
        g.growth_p = 2.0;
        g.value = [q, b, c0](const Eigen::VectorXd& z) { return z.dot(q * z) + b.dot(z) + c0; };
        g.gradient = [q, b](const Eigen::VectorXd& z) -> Eigen::VectorXd {
            return (q + q.transpose()) * z + b;
        };
        return g;
    }
    throw ParseError("unknown g spec: '" + spec + "'");
}

// --- rank-check --------------------------------------------------------------

int cmd_rank_check(const std::string& op_spec, int samples, double tol, std::uint64_t seed,
                   const fs::path& out_dir) {
    LinearOperator op = resolve_operator(op_spec);
    ConstantRankReport report = check_constant_rank(op, samples, tol, seed);

    JsonWriter w;
    w.begin_object();
    w.field("operator", op_spec);
    w.field("N", op.num_vars());
    w.field("d", op.state_dim());
    w.field("l", op.num_equations());
    w.field("constant", report.constant);
    w.field("rank", report.rank);
    w.field("samples_evaluated", report.samples_evaluated);
    w.field("rel_tol", report.rel_tol);
    w.field("evidence_only", report.evidence_only);
    w.key("rank_counts").begin_object();
    for (const auto& [observed_rank, count] : report.rank_counts)
        w.field(std::to_string(observed_rank), static_cast<std::int64_t>(count));
    w.end_object();
    if (report.witness) {
        w.key("witness").begin_object();
        w.field("frequency_a", report.witness->first);
        w.field("rank_a", report.witness_ranks->first);
        w.field("frequency_b", report.witness->second);
        w.field("rank_b", report.witness_ranks->second);
        w.end_object();
    }
    w.end_object();
    atomic_write_file(out_dir / "rank_check.json", w.str());

    Manifest manifest;
    manifest.command = "rank-check";
    manifest.add("operator", op_spec);
    manifest.add("samples", static_cast<std::int64_t>(samples));
    manifest.add("tol", tol);
    manifest.add("seed", static_cast<std::int64_t>(seed));
    manifest.write(out_dir);

    std::cout << (report.constant ? "constant rank r = " + std::to_string(report.rank)
                                  : "rank is not constant")
              << " (" << report.samples_evaluated << " samples, evidence only)\n";
    return report.constant ? kExitOk : kExitNegative;
}

// --- wave-cone ---------------------------------------------------------------

int cmd_wave_cone(const std::string& op_spec, const std::string& state_csv, double tol,
                  const fs::path& out_dir) {
    LinearOperator op = resolve_operator(op_spec);
    Eigen::VectorXd z = parse_vector(state_csv);
    if (z.size() != op.state_dim()) throw ParseError("state dimension != d");
    WaveConeVerdict verdict = in_wave_cone(op, z, tol);

    JsonWriter w;
    w.begin_object();
    w.field("operator", op_spec);
    w.field("state", z);
    w.field("member", verdict.member);
    w.field("z_rank", verdict.z_rank);
    w.field("tolerance", verdict.tolerance_used);
    w.key("directions").begin_array();
    for (const auto& dir : verdict.directions) {
        w.begin_array();
        for (Eigen::Index i = 0; i < dir.size(); ++i) w.value(dir[i]);
        w.end_array();
    }
    w.end_array();
    w.end_object();
    atomic_write_file(out_dir / "wave_cone.json", w.str());

    Manifest manifest;
    manifest.command = "wave-cone";
    manifest.add("operator", op_spec);
    manifest.add("state", state_csv);
    manifest.add("tol", tol);
    manifest.write(out_dir);

    std::cout << (verdict.member ? "member of the wave cone" : "not a wave cone member")
              << " (z-matrix rank " << verdict.z_rank << ")\n";
    return verdict.member ? kExitOk : kExitNegative;
}

// --- laminate ----------------------------------------------------------------

int cmd_laminate(const std::string& op_spec, const LaminateSpec& spec, const std::vector<int>& dims,
                 double cluster_tol, const fs::path& out_dir, const Manifest& manifest) {
    LinearOperator op = resolve_operator(op_spec);
    PeriodicField field;
    try {
        field = synthesize_laminate(op, spec, dims);
    } catch (const std::invalid_argument& e) {
        if (std::string(e.what()).find("rigid") != std::string::npos) {
            std::cerr << "rigid pair: " << e.what() << "\n";
            manifest.write(out_dir);
            return kExitNegative;
        }
        throw;
    }
    atomic_write_file(out_dir / "field.csv", field_to_csv(field));

    DiscreteYoungMeasure nu = field_young_measure(field, cluster_tol);
    atomic_write_file(out_dir / "young_measure.json", measure_to_json_string(nu));

    ConstraintResidual residual = constraint_residual(op, field);
    DiscreteYoungMeasure target = DiscreteYoungMeasure::two_point(spec.z1, spec.z2, spec.lambda);
    double distance = measure_distance(nu, target);

    JsonWriter w;
    w.begin_object();
    w.field("operator", op_spec);
    w.field("lambda", spec.lambda);
    w.field("oscillations", static_cast<std::int64_t>(spec.oscillations));
    w.field("profile", spec.profile == LaminateProfile::square ? "square" : "sine");
    w.field("xi", spec.xi);
    w.field("field_l2_norm", field.l2_norm());
    w.field("residual_l2", residual.l2);
    w.field("residual_negative_sobolev", residual.negative_sobolev);
    w.field("residual_l2_relative", residual.l2 / field.l2_norm());
    w.field("measure_distance_to_target", distance);
    w.field("mean", field.mean());
    w.end_object();
    atomic_write_file(out_dir / "residual.json", w.str());
    manifest.write(out_dir);

    std::cout << "laminate synthesized: relative residual " << residual.l2 / field.l2_norm()
              << ", distance to target measure " << distance << "\n";
    return kExitOk;
}

// --- rigidity ----------------------------------------------------------------

// Smooth segment field lambda(x) z1 + (1 - lambda(x)) z2 with a random
// band-limited fraction, projected onto the constraint. The standard input
// for the reconstruction experiment.
PeriodicField smooth_lambda_field(const LinearOperator& op, const Eigen::VectorXd& z1,
                                  const Eigen::VectorXd& z2, const std::vector<int>& dims,
                                  double amplitude, std::uint64_t seed) {
    GridShape grid(dims);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    struct Wave {
        std::vector<int> k;
        double a, b;
    };
    std::vector<Wave> waves;
    for (int w = 0; w < 3; ++w) {
        Wave wave;
        wave.k.resize(dims.size());
        bool nonzero = false;
        for (std::size_t axis = 0; axis < dims.size(); ++axis) {
            wave.k[axis] = static_cast<int>(std::lround(uni(rng)));
            nonzero = nonzero || wave.k[axis] != 0;
        }
        if (!nonzero) wave.k[0] = 1;
        wave.a = uni(rng);
        wave.b = uni(rng);
        waves.push_back(wave);
    }
    PeriodicField field(grid, static_cast<int>(z1.size()));
    for (std::int64_t node = 0; node < grid.node_count(); ++node) {
        std::vector<int> j = grid.coords(node);
        double lam = 0.5;
        for (const auto& wave : waves) {
            double phase = 0.0;
            for (std::size_t axis = 0; axis < dims.size(); ++axis)
                phase += 2.0 * M_PI * wave.k[axis] * j[axis] / dims[axis];
            lam += amplitude / 3.0 * (wave.a * std::sin(phase) + wave.b * std::cos(phase));
        }
        lam = std::min(1.0, std::max(0.0, lam));
        field.value(node) = lam * z1 + (1.0 - lam) * z2;
    }
    return project_afree(op, field);
}

int cmd_rigidity(const std::string& op_spec, const std::string& z1_csv, const std::string& z2_csv,
                 const fs::path& field_path, const std::vector<int>& demo_dims, double demo_amplitude,
                 std::uint64_t seed, const fs::path& out_dir) {
    LinearOperator op = resolve_operator(op_spec);
    Eigen::VectorXd z1 = parse_vector(z1_csv);
    Eigen::VectorXd z2 = parse_vector(z2_csv);
    PeriodicField field;
    if (!field_path.empty()) {
        field = load_field_csv(field_path);
    } else {
        if (demo_dims.empty()) throw ParseError("rigidity: need --field or --demo-dims");
        field = smooth_lambda_field(op, z1, z2, demo_dims, demo_amplitude, seed);
        atomic_write_file(out_dir / "field.csv", field_to_csv(field));
    }

    RigidityReport report;
    try {
        report = rigidity_reconstruct(op, z1, z2, field);
    } catch (const std::invalid_argument& e) {
        if (std::string(e.what()).find("wave cone") != std::string::npos) {
            std::cerr << e.what() << "\n";
            return kExitNegative;
        }
        throw;
    }

    JsonWriter w;
    w.begin_object();
    w.field("operator", op_spec);
    w.field("z1", z1);
    w.field("z2", z2);
    w.field("left_inverse_min_sv", report.left_inverse_min_sv);
    w.field("kappa", report.kappa);
    w.field("lambda_mean", report.lambda_mean);
    w.field("reconstruction_error", report.reconstruction_error);
    w.field("e_norm", report.e_norm);
    w.field("residual_norm", report.residual_norm);
    w.field("grid_h", report.grid_h);
    w.end_object();
    atomic_write_file(out_dir / "rigidity.json", w.str());
    atomic_write_file(out_dir / "lambda_field.csv", field_to_csv(report.lambda_field));

    Manifest manifest;
    manifest.command = "rigidity";
    manifest.add("operator", op_spec);
    manifest.add("z1", z1_csv);
    manifest.add("z2", z2_csv);
    manifest.add("field", field_path.empty() ? "demo-smooth" : field_path.string());
    if (field_path.empty()) {
        std::string dims_txt;
        for (int n : demo_dims) dims_txt += (dims_txt.empty() ? "" : ",") + std::to_string(n);
        manifest.add("demo_dims", dims_txt);
        manifest.add("demo_amplitude", demo_amplitude);
        manifest.add("seed", static_cast<std::int64_t>(seed));
    }
    manifest.write(out_dir);

    std::cout << "rigidity reconstruction: error " << report.reconstruction_error << ", e-norm "
              << report.e_norm << ", kappa " << report.kappa << "\n";
    return kExitOk;
}

// --- qc-probe ------------------------------------------------------------------

int cmd_qc_probe(const std::string& op_spec, const std::string& g_spec, const std::string& z_csv,
                 const ProbeConfig& config, double tol, const fs::path& out_dir) {
    LinearOperator op = resolve_operator(op_spec);
    Eigen::VectorXd z = parse_vector(z_csv);
    if (z.size() != op.state_dim()) throw ParseError("base point dimension != d");
    GFunction g = parse_gfunction(g_spec, op.state_dim());

    ProbeResult result = probe_quasiconvexity(g, z, op, config);
    atomic_write_file(out_dir / "witness.csv", field_to_csv(result.witness));

    bool violation = result.gap < -tol;
    JsonWriter w;
    w.begin_object();
    w.field("operator", op_spec);
    w.field("g", g_spec);
    w.field("z", z);
    w.field("base_value", result.base_value);
    w.field("best_value", result.best_value);
    w.field("gap", result.gap);
    w.field("violation_certified", violation);
    w.field("evidence_only_when_nonnegative", result.evidence_only);
    w.field("restarts_used", static_cast<std::int64_t>(result.restarts_used));
    w.field("restarts_abandoned", static_cast<std::int64_t>(result.restarts_abandoned));
    w.field("converged", result.converged);
    w.field("coefficient_count", static_cast<std::int64_t>(result.coefficient_count));
    w.field("witness_mean_norm", result.witness_mean_norm);
    w.field("witness_residual", result.witness_residual);
    w.field("witness_csv", "witness.csv");
    w.end_object();
    atomic_write_file(out_dir / "probe.json", w.str());

    Manifest manifest;
    manifest.command = "qc-probe";
    manifest.add("operator", op_spec);
    manifest.add("g", g_spec);
    manifest.add("z", z_csv);
    manifest.add("cutoff", static_cast<std::int64_t>(config.cutoff_k));
    manifest.add("restarts", static_cast<std::int64_t>(config.restarts));
    manifest.add("max_amplitude", config.max_amplitude);
    manifest.add("seed", static_cast<std::int64_t>(config.seed));
    manifest.add("tol", tol);
    manifest.write(out_dir);

    std::cout << (violation ? "quasiconvexity violation certified" : "no violation found (evidence only)")
              << ": gap " << result.gap << "\n";
    return violation ? kExitNegative : kExitOk;
}

// --- euler-counterexample ------------------------------------------------------

int cmd_euler_counterexample(const PressureLaw& pressure, std::optional<double> gamma_opt,
                             std::optional<std::pair<double, double>> gamma_range, int scan_steps,
                             int test_degree, bool alt_q2, const fs::path& out_dir,
                             Manifest manifest) {
    double gamma;
    std::optional<GammaSearchResult> search;
    if (gamma_opt) {
        gamma = *gamma_opt;
        if (!(gamma > 0.0) || gamma == 1.0) {
            std::cerr << "degenerate gamma: must be positive and != 1\n";
            return kExitError;
        }
    } else {
        search = counterexample_search(pressure, gamma_range->first, gamma_range->second, scan_steps);
        gamma = search->gamma;
    }

    CounterexampleResult states = counterexample_states(pressure, gamma, alt_q2);
    LinearOperator op = build_euler_operator();

    // (b) the difference leaves the wave cone
    WaveConeVerdict cone = wave_cone_euler(SubsolutionState::unpack(states.zdiff));

    // (c) laminate synthesis refuses the pair
    bool laminate_refused = false;
    std::string refusal_message;
    try {
        LaminateSpec spec;
        spec.z1 = states.z1.pack();
        spec.z2 = states.z2.pack();
        spec.xi = Eigen::Vector4i(0, 1, 0, 0);
        synthesize_laminate(op, spec, {2, 16, 2, 2});
    } catch (const std::invalid_argument& e) {
        laminate_refused = true;
        refusal_message = e.what();
    }
    FeasibilityResult feasibility = oscillation_feasibility(op, states.z1.pack(), states.z2.pack());

    // (a) the two-point measure is a measure-valued subsolution
    DiscreteYoungMeasure nu_tilde =
        DiscreteYoungMeasure::two_point(states.z1.pack(), states.z2.pack(), 0.5);
    AveragedCellFields averaged = average_fields(nu_tilde, MeasureKind::subsolution, pressure);
    WeakFormReport weak =
        weak_form_residual(MeasureFamily::homogeneous(nu_tilde, MeasureKind::subsolution), pressure,
                           InitialData::constant(averaged.rho, averaged.m), test_degree);

    // preimage measure on phase space; its averaged Euler forms also vanish
    Eigen::Vector4d phase1(1.0, 1.0, 0.0, 0.0);
    Eigen::Vector4d phase2(gamma, 1.0 / std::sqrt(gamma), 0.0, 0.0);
    DiscreteYoungMeasure nu = DiscreteYoungMeasure::two_point(phase1, phase2, 0.5);
    AveragedCellFields euler_avg = average_fields(nu, MeasureKind::euler_phase, pressure);
    WeakFormReport weak_euler =
        weak_form_residual(MeasureFamily::homogeneous(nu, MeasureKind::euler_phase), pressure,
                           InitialData::constant(euler_avg.rho, euler_avg.m), test_degree);

    // Jensen diagnostics from the separating candidate.
    GFunction separating = separating_function(states.z1, states.z2);
    double jensen = nu_tilde.jensen_gap(separating.value);
    Eigen::VectorXd midpoint = 0.5 * (states.z1.pack() + states.z2.pack());
    std::mt19937_64 dir_rng(2);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    double min_slack = std::numeric_limits<double>::infinity();
    int directions_sampled = 0;
    for (int trial = 0; trial < 50; ++trial) {
        SubsolutionState zbar;
        zbar.rho = uni(dir_rng);
        zbar.u11 = uni(dir_rng);
        zbar.u22 = uni(dir_rng);
        zbar.q = -zbar.u11;  // diagonal z-matrix with a zero entry: a cone direction
        LambdaConvexityResult slack = lambda_convexity_check(separating, midpoint, op, zbar.pack(),
                                                             {0.25, 0.5, 1.0}, {0.25, 0.5, 0.75});
        min_slack = std::min(min_slack, slack.min_slack);
        ++directions_sampled;
    }

    bool certified = weak.max_residual <= 1e-12 && !cone.member && laminate_refused &&
                     feasibility.verdict == FeasibilityVerdict::rigid;
    bool inconclusive = states.verdict == CounterexampleVerdict::inconclusive;

    JsonWriter w;
    w.begin_object();
    w.key("pressure").begin_object();
    w.field("kappa", pressure.kappa());
    w.field("gamma_exp", pressure.gamma_exp());
    w.end_object();
    w.field("gamma", gamma);
    if (search) {
        w.key("gamma_search").begin_object();
        w.field("abs_det", search->abs_det);
        w.field("steps", static_cast<std::int64_t>(scan_steps));
        w.end_object();
    }
    w.field("alt_q2", alt_q2);
    w.field("z1", Eigen::VectorXd(states.z1.pack()));
    w.field("z2", Eigen::VectorXd(states.z2.pack()));
    w.field("zdiff", Eigen::VectorXd(states.zdiff));
    w.field("det_numeric", states.det_numeric);
    w.field("det_formula", states.det_formula);
    w.field("det_ratio", states.det_ratio);
    w.field("det_note",
            "det_numeric is the direct expansion of the difference z-matrix; det_formula is a "
            "reference closed form reported for comparison; no tolerance is asserted between them");
    w.field("verdict", states.verdict == CounterexampleVerdict::rigid ? "rigid" : "inconclusive");
    w.key("wave_cone").begin_object();
    w.field("member", cone.member);
    w.field("z_rank", cone.z_rank);
    w.end_object();
    w.field("laminate_refused", laminate_refused);
    w.field("laminate_refusal_message", refusal_message);
    w.field("feasibility",
            feasibility.verdict == FeasibilityVerdict::rigid ? "rigid" : "oscillation_constructible");
    w.key("weak_form_subsolution").begin_object();
    w.field("max_residual", weak.max_residual);
    w.field("continuity_max", weak.continuity_max);
    w.field("momentum_max", weak.momentum_max);
    w.field("tests_evaluated", static_cast<std::int64_t>(weak.tests_evaluated));
    w.field("test_degree", static_cast<std::int64_t>(test_degree));
    w.end_object();
    w.key("weak_form_euler_preimage").begin_object();
    w.field("max_residual", weak_euler.max_residual);
    w.field("tests_evaluated", static_cast<std::int64_t>(weak_euler.tests_evaluated));
    w.end_object();
    w.key("jensen").begin_object();
    w.field("separating_gap", jensen);
    w.field("expected_pure_bump_magnitude", states.zdiff.squaredNorm() / 4.0);
    w.field("lambda_convexity_min_slack", min_slack);
    w.field("directions_sampled", static_cast<std::int64_t>(directions_sampled));
    w.field("caveat",
            "a negative Jensen gap rules out generability only if the candidate is quasiconvex "
            "for the relaxation operator; the directional probe supports but cannot prove that");
    w.end_object();
    w.field("certified", certified);
    w.end_object();
    atomic_write_file(out_dir / "counterexample.json", w.str());

    atomic_write_file(out_dir / "nu_tilde.json", measure_to_json_string(nu_tilde));
    atomic_write_file(out_dir / "nu.json", measure_to_json_string(nu));

    manifest.write(out_dir);

    std::cout << "gamma " << gamma << ": det_numeric " << states.det_numeric << ", det_formula "
              << states.det_formula << ", ratio " << states.det_ratio << "\n"
              << "subsolution residual " << weak.max_residual << ", cone member "
              << (cone.member ? "yes" : "no") << ", laminate refused "
              << (laminate_refused ? "yes" : "no") << "\n";
    if (inconclusive) {
        std::cout << "advisory: |det| below tolerance at this gamma; move gamma\n";
        return kExitNegative;
    }
    return certified ? kExitOk : kExitNegative;
}

// --- mvs-check -------------------------------------------------------------------

int cmd_mvs_check(const fs::path& measure_path, const std::string& initial_csv, double horizon,
                  int test_degree, const PressureLaw& pressure, double tol, const fs::path& out_dir) {
    MeasureFamily family = load_measure_family(measure_path, horizon);
    family.validate();

    InitialData initial;
    if (initial_csv.empty()) {
        // default: the barycentric (rho, m) of the first cell
        AveragedCellFields avg = average_fields(family.cells.front(), family.kind, pressure);
        initial = InitialData::constant(avg.rho, avg.m);
    } else {
        Eigen::VectorXd given = parse_vector(initial_csv);
        if (given.size() != 4) throw ParseError("initial data must be rho0,m1,m2,m3");
        initial = InitialData::constant(given[0], Eigen::Vector3d(given[1], given[2], given[3]));
    }

    WeakFormReport report = weak_form_residual(family, pressure, initial, test_degree);
    bool pass = report.max_residual <= tol;

    JsonWriter w;
    w.begin_object();
    w.field("measure", measure_path.string());
    w.field("kind", family.kind == MeasureKind::subsolution ? "subsolution" : "euler");
    w.field("T", family.horizon);
    w.key("grid").begin_array();
    for (int n : family.grid) w.value(n);
    w.end_array();
    w.field("test_degree", static_cast<std::int64_t>(test_degree));
    w.field("max_residual", report.max_residual);
    w.field("continuity_max", report.continuity_max);
    w.field("momentum_max", report.momentum_max);
    w.field("tests_evaluated", static_cast<std::int64_t>(report.tests_evaluated));
    w.field("tol", tol);
    w.field("pass", pass);
    w.end_object();
    atomic_write_file(out_dir / "mvs_check.json", w.str());

    Manifest manifest;
    manifest.command = "mvs-check";
    manifest.add("measure", measure_path.string());
    manifest.add("initial", initial_csv.empty() ? "barycenter" : initial_csv);
    manifest.add("T", horizon);
    manifest.add("test_degree", static_cast<std::int64_t>(test_degree));
    manifest.add("tol", tol);
    manifest.write(out_dir);

    std::cout << "max weak-form residual " << report.max_residual << " over "
              << report.tests_evaluated << " tests: " << (pass ? "pass" : "fail") << "\n";
    return pass ? kExitOk : kExitNegative;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"afree: wave cones, oscillation synthesis, rigidity and quasiconvexity probes"};
    app.require_subcommand(1);

    std::string op_spec = "euler";
    std::string out_dir = "out";
    double tol = kDefaultRankTol;
    std::uint64_t seed = 0;

    // rank-check
    auto* rank = app.add_subcommand("rank-check", "sampled constant-rank verdict for an operator");
    int samples = 10000;
    rank->add_option("--operator", op_spec, "operator file or builtin name");
    rank->add_option("--samples", samples, "random unit frequencies to sample");
    rank->add_option("--tol", tol, "relative singular value tolerance");
    rank->add_option("--seed", seed, "sampling seed");
    rank->add_option("--out", out_dir, "output directory");

    // wave-cone
    auto* cone = app.add_subcommand("wave-cone", "wave cone membership of a state");
    std::string state_csv;
    cone->add_option("--operator", op_spec, "operator file or builtin name");
    cone->add_option("--state", state_csv, "state vector, comma separated")->required();
    cone->add_option("--tol", tol, "relative rank tolerance");
    cone->add_option("--out", out_dir, "output directory");

    // laminate
    auto* lam = app.add_subcommand("laminate", "synthesize a two-state oscillation");
    std::string z1_csv, z2_csv, xi_csv, dims_csv, profile = "square";
    double lambda = 0.5;
    int oscillations = 1;
    double cluster_tol = 1e-9;
    lam->add_option("--operator", op_spec, "operator file or builtin name");
    lam->add_option("--z1", z1_csv, "first state")->required();
    lam->add_option("--z2", z2_csv, "second state")->required();
    lam->add_option("--lambda", lambda, "volume fraction of z1");
    lam->add_option("--xi", xi_csv, "integer wave direction")->required();
    lam->add_option("--oscillations", oscillations, "profile repetitions");
    lam->add_option("--profile", profile, "square or sine");
    lam->add_option("--dims", dims_csv, "grid sizes per axis")->required();
    lam->add_option("--cluster-tol", cluster_tol, "atom clustering tolerance");
    lam->add_option("--out", out_dir, "output directory");

    // rigidity
    auto* rig = app.add_subcommand("rigidity", "volume-fraction reconstruction for a rigid pair");
    std::string field_path;
    std::string demo_dims_csv;
    double demo_amplitude = 0.3;
    rig->add_option("--operator", op_spec, "operator file or builtin name");
    rig->add_option("--z1", z1_csv, "first state")->required();
    rig->add_option("--z2", z2_csv, "second state")->required();
    rig->add_option("--field", field_path, "field CSV (as written by laminate)");
    rig->add_option("--demo-dims", demo_dims_csv, "generate a projected smooth-fraction field on this grid");
    rig->add_option("--demo-amplitude", demo_amplitude, "fraction oscillation amplitude for the demo field");
    rig->add_option("--seed", seed, "seed for the demo field");
    rig->add_option("--out", out_dir, "output directory");

    // qc-probe
    auto* probe = app.add_subcommand("qc-probe", "numerical quasiconvexity probe at a base point");
    std::string g_spec = "norm-sq";
    ProbeConfig probe_config;
    std::string probe_dims_csv;
    probe->add_option("--operator", op_spec, "operator file or builtin name");
    probe->add_option("--g", g_spec,
                      "integrand (norm-sq, neg-norm-sq, linear:..., neg-dir-sq:..., quadratic-form:...)");
    probe->add_option("--z", state_csv, "base point")->required();
    probe->add_option("--cutoff", probe_config.cutoff_k, "frequency cutoff K");
    probe->add_option("--dims", probe_dims_csv, "grid sizes (default 16 per axis)");
    probe->add_option("--restarts", probe_config.restarts, "random restarts");
    probe->add_option("--max-iters", probe_config.max_iters, "descent iterations per restart");
    probe->add_option("--max-amplitude", probe_config.max_amplitude, "coefficient ball radius");
    probe->add_option("--seed", probe_config.seed, "restart seed");
    probe->add_option("--tol", tol, "violation threshold on the gap");
    probe->add_option("--out", out_dir, "output directory");

    // euler-counterexample
    auto* ce = app.add_subcommand("euler-counterexample",
                                  "two-state measure-valued subsolution not generated by oscillations");
    double kappa = 1.0, gamma_exp = 2.0;
    double gamma = 0.0;
    std::string gamma_range_str;
    int scan_steps = 60;
    int test_degree = 4;
    bool alt_q2 = false;
    ce->add_option("--kappa", kappa, "pressure coefficient");
    ce->add_option("--gamma-exp", gamma_exp, "pressure exponent");
    ce->add_option("--gamma", gamma, "density of the second state");
    ce->add_option("--gamma-range", gamma_range_str, "scan range lo:hi for gamma");
    ce->add_option("--steps", scan_steps, "scan steps for the range");
    ce->add_option("--test-degree", test_degree, "trig degree for the weak forms");
    ce->add_flag("--alt-q2", alt_q2, "use q2 = p(gamma) + gamma/3 instead of the lift-consistent value");
    ce->add_option("--out", out_dir, "output directory");

    // mvs-check
    auto* mvs = app.add_subcommand("mvs-check", "weak-form residual of a measure family");
    std::string measure_path, initial_csv;
    double horizon = 1.0;
    double mvs_tol = 1e-12;
    mvs->add_option("--measure", measure_path, "measure or family JSON file")->required();
    mvs->add_option("--initial", initial_csv, "initial data rho0,m1,m2,m3 (default: barycenter)");
    mvs->add_option("--T", horizon, "time horizon");
    mvs->add_option("--test-degree", test_degree, "trig degree for the weak forms");
    mvs->add_option("--kappa", kappa, "pressure coefficient (euler-phase measures)");
    mvs->add_option("--gamma-exp", gamma_exp, "pressure exponent (euler-phase measures)");
    mvs->add_option("--tol", mvs_tol, "pass threshold on the max residual");
    mvs->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        fs::path out(out_dir);
        if (rank->parsed()) return cmd_rank_check(op_spec, samples, tol, seed, out);
        if (cone->parsed()) return cmd_wave_cone(op_spec, state_csv, tol, out);
        if (lam->parsed()) {
            LaminateSpec spec;
            spec.z1 = parse_vector(z1_csv);
            spec.z2 = parse_vector(z2_csv);
            spec.lambda = lambda;
            std::vector<int> xi = parse_ints(xi_csv);
            spec.xi = Eigen::Map<const Eigen::VectorXi>(xi.data(), static_cast<Eigen::Index>(xi.size()));
            spec.oscillations = oscillations;
            if (profile == "square")
                spec.profile = LaminateProfile::square;
            else if (profile == "sine")
                spec.profile = LaminateProfile::sine;
            else
                throw ParseError("profile must be square or sine");
            Manifest manifest;
            manifest.command = "laminate";
            manifest.add("operator", op_spec);
            manifest.add("z1", z1_csv);
            manifest.add("z2", z2_csv);
            manifest.add("lambda", lambda);
            manifest.add("xi", xi_csv);
            manifest.add("oscillations", static_cast<std::int64_t>(oscillations));
            manifest.add("profile", profile);
            manifest.add("dims", dims_csv);
            return cmd_laminate(op_spec, spec, parse_ints(dims_csv), cluster_tol, out, manifest);
        }
        if (rig->parsed()) {
            std::vector<int> demo_dims;
            if (!demo_dims_csv.empty()) demo_dims = parse_ints(demo_dims_csv);
            return cmd_rigidity(op_spec, z1_csv, z2_csv, field_path, demo_dims, demo_amplitude, seed, out);
        }
        if (probe->parsed()) {
            if (!probe_dims_csv.empty()) probe_config.dims = parse_ints(probe_dims_csv);
            return cmd_qc_probe(op_spec, g_spec, state_csv, probe_config, tol, out);
        }
        if (ce->parsed()) {
            PressureLaw pressure(kappa, gamma_exp);
            std::optional<double> gamma_opt;
            std::optional<std::pair<double, double>> range;
            if (!gamma_range_str.empty()) {
                auto pos = gamma_range_str.find(':');
                if (pos == std::string::npos) throw ParseError("gamma range must be lo:hi");
                range = std::make_pair(std::stod(gamma_range_str.substr(0, pos)),
                                       std::stod(gamma_range_str.substr(pos + 1)));
            } else {
                if (gamma == 0.0) gamma = 2.0;
                gamma_opt = gamma;
            }
            Manifest manifest;
            manifest.command = "euler-counterexample";
            manifest.add("kappa", kappa);
            manifest.add("gamma_exp", gamma_exp);
            if (gamma_opt) manifest.add("gamma", *gamma_opt);
            if (range) manifest.add("gamma_range", gamma_range_str);
            manifest.add("steps", static_cast<std::int64_t>(scan_steps));
            manifest.add("test_degree", static_cast<std::int64_t>(test_degree));
            manifest.add("alt_q2", alt_q2 ? "true" : "false");
            return cmd_euler_counterexample(pressure, gamma_opt, range, scan_steps, test_degree,
                                            alt_q2, out, manifest);
        }
        if (mvs->parsed()) {
            PressureLaw pressure(kappa, gamma_exp);
            return cmd_mvs_check(measure_path, initial_csv, horizon, test_degree, pressure, mvs_tol, out);
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
