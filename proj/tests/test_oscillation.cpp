#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "afree/oscillation.hpp"
#include "test_helpers.hpp"

using namespace afree;

namespace {

Eigen::VectorXd vec2(double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}

// A rank-4 "identity" subsolution-like state for the 4-variable operator
// used in rigidity tests: z-matrix diag(1,1,1,1).
Eigen::VectorXd euler_identity_state() {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(10);
    z[0] = 1.0;  // rho
    z[9] = 1.0;  // q
    return z;
}

// Singular state with exact wave direction e1 (space axis 1): q = -U11
// zeroes the second diagonal entry of the z-matrix.
Eigen::VectorXd euler_singular_state() {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(10);
    z[0] = 1.0;   // rho
    z[4] = 0.5;   // U11
    z[7] = 0.25;  // U22
    z[9] = -0.5;  // q = -U11
    return z;
}

LinearOperator euler_like_operator() {
    // Local copy of the 4x10 relaxation matrices, kept independent of the
    // euler module so these tests only exercise oscillation-lab machinery.
    Eigen::MatrixXd a0 = Eigen::MatrixXd::Zero(4, 10), a1 = Eigen::MatrixXd::Zero(4, 10),
                    a2 = Eigen::MatrixXd::Zero(4, 10), a3 = Eigen::MatrixXd::Zero(4, 10);
    a0(0, 0) = a0(1, 1) = a0(2, 2) = a0(3, 3) = 1;
    a1(0, 1) = a1(1, 4) = a1(1, 9) = a1(2, 5) = a1(3, 6) = 1;
    a2(0, 2) = a2(1, 5) = a2(2, 7) = a2(2, 9) = a2(3, 8) = 1;
    a3(0, 3) = a3(1, 6) = a3(2, 8) = a3(3, 9) = 1;
    a3(3, 4) = a3(3, 7) = -1;
    return LinearOperator({a0, a1, a2, a3});
}

}  // namespace

TEST_CASE("square laminate produces exact stripes", "[oscillation]") {
    LinearOperator div2 = divergence_operator(2);
    LaminateSpec spec;
    spec.z1 = vec2(0.0, 1.0);
    spec.z2 = vec2(0.0, -1.0);
    spec.lambda = 0.5;
    spec.xi = Eigen::Vector2i(1, 0);
    PeriodicField field = synthesize_laminate(div2, spec, {16, 4});

    // Only the two states appear, in exact proportion.
    std::int64_t count1 = 0;
    for (std::int64_t node = 0; node < field.node_count(); ++node) {
        bool is_z1 = field.value(node) == spec.z1;
        bool is_z2 = field.value(node) == spec.z2;
        REQUIRE((is_z1 || is_z2));
        if (is_z1) ++count1;
    }
    CHECK(count1 == field.node_count() / 2);
    CHECK(field.mean().norm() < 1e-15);

    DiscreteYoungMeasure nu = field_young_measure(field, 1e-9);
    REQUIRE(nu.support_size() == 2);
    CHECK(nu.atoms()[0].weight == Catch::Approx(0.5));

    CHECK(constraint_residual(div2, field).l2 <= 1e-10 * field.l2_norm());
}

TEST_CASE("square laminate mean is exact for resolution-aligned fractions", "[oscillation]") {
    LinearOperator div2 = divergence_operator(2);
    LaminateSpec spec;
    spec.z1 = vec2(0.0, 3.0);
    spec.z2 = vec2(0.0, -1.0);
    spec.lambda = 0.25;
    spec.xi = Eigen::Vector2i(1, 0);
    spec.oscillations = 2;  // period 16 nodes on a 32 grid; lambda * 16 = 4 nodes
    PeriodicField field = synthesize_laminate(div2, spec, {32, 4});
    Eigen::VectorXd expected = spec.lambda * spec.z1 + (1.0 - spec.lambda) * spec.z2;
    CHECK((field.mean() - expected).norm() <= 1e-14);
}

TEST_CASE("sine laminate along a wave direction is an exact solution", "[oscillation]") {
    LinearOperator div2 = divergence_operator(2);
    LaminateSpec spec;
    spec.z1 = vec2(0.0, 1.0);
    spec.z2 = vec2(0.0, -1.0);
    spec.lambda = 0.5;
    spec.xi = Eigen::Vector2i(1, 0);
    spec.profile = LaminateProfile::sine;
    PeriodicField field = synthesize_laminate(div2, spec, {32, 8});
    ConstraintResidual r = constraint_residual(div2, field);
    CHECK(r.l2 <= 1e-12 * field.l2_norm());
    CHECK(r.negative_sobolev <= 1e-12 * field.l2_norm());
    // Sine stays on the segment.
    Eigen::VectorXd dir = spec.z1 - spec.z2;
    for (std::int64_t node = 0; node < field.node_count(); ++node) {
        Eigen::VectorXd rel = field.value(node) - spec.z2;
        double s = rel.dot(dir) / dir.squaredNorm();
        CHECK((rel - s * dir).norm() < 1e-14);
        CHECK(s >= -1e-14);
        CHECK(s <= 1.0 + 1e-14);
    }
}

TEST_CASE("laminate refuses a non-wave direction", "[oscillation]") {
    LinearOperator div2 = divergence_operator(2);
    LaminateSpec spec;
    spec.z1 = vec2(1.0, 0.0);
    spec.z2 = vec2(-1.0, 0.0);
    spec.xi = Eigen::Vector2i(1, 0);  // symbol(xi) (z1-z2) = 2 != 0
    CHECK_THROWS_WITH(synthesize_laminate(div2, spec, {16, 4}),
                      Catch::Matchers::ContainsSubstring("rigid"));
}

TEST_CASE("laminate requires the grid to resolve the oscillation", "[oscillation]") {
    LinearOperator div2 = divergence_operator(2);
    LaminateSpec spec;
    spec.z1 = vec2(0.0, 1.0);
    spec.z2 = vec2(0.0, -1.0);
    spec.xi = Eigen::Vector2i(1, 0);
    spec.oscillations = 4;
    CHECK_THROWS_WITH(synthesize_laminate(div2, spec, {16, 4}),
                      Catch::Matchers::ContainsSubstring("resolve"));
}

TEST_CASE("singular state laminate for the 4-variable relaxation", "[oscillation]") {
    LinearOperator op = euler_like_operator();
    Eigen::VectorXd zbar = euler_singular_state();
    LaminateSpec spec;
    spec.z2 = euler_identity_state();
    spec.z1 = spec.z2 + zbar;
    spec.lambda = 0.5;
    spec.xi = Eigen::Vector4i(0, 1, 0, 0);
    PeriodicField field = synthesize_laminate(op, spec, {2, 16, 2, 2});
    CHECK(constraint_residual(op, field).l2 <= 1e-10 * field.l2_norm());

    DiscreteYoungMeasure nu = field_young_measure(field, 1e-9);
    CHECK(nu.support_size() == 2);
}

TEST_CASE("constant fields have zero residual", "[oscillation]") {
    LinearOperator div3 = divergence_operator(3);
    PeriodicField field(GridShape({4, 4, 4}), 3);
    Eigen::VectorXd c(3);
    c << 1.0, 2.0, -0.5;
    for (std::int64_t node = 0; node < field.node_count(); ++node) field.value(node) = c;
    ConstraintResidual r = constraint_residual(div3, field);
    CHECK(r.l2 <= 1e-13 * field.l2_norm());
    CHECK(r.negative_sobolev <= 1e-13 * field.l2_norm());
}

TEST_CASE("spectral residual matches a central-difference divergence oracle", "[oscillation][oracle]") {
    std::mt19937_64 rng(101);
    LinearOperator op = afree::testing::random_operator(rng, 2, 3, 2);

    struct Mode {
        Eigen::Vector2i k;
        Eigen::VectorXd a, b;
    };
    std::vector<Mode> modes;
    for (int k1 = 0; k1 <= 2; ++k1)
        for (int k2 = -2; k2 <= 2; ++k2) {
            if (k1 == 0 && k2 <= 0) continue;
            modes.push_back({Eigen::Vector2i(k1, k2), afree::testing::random_vector(rng, 3, 0.5),
                             afree::testing::random_vector(rng, 3, 0.5)});
        }

    auto evaluate = [&](int n) {
        PeriodicField field(GridShape({n, n}), 3);
        for (std::int64_t node = 0; node < field.node_count(); ++node) {
            std::vector<int> j = field.grid().coords(node);
            double x1 = static_cast<double>(j[0]) / n;
            double x2 = static_cast<double>(j[1]) / n;
            Eigen::VectorXd v = Eigen::VectorXd::Zero(3);
            for (const auto& mode : modes) {
                double phase = 2.0 * M_PI * (mode.k[0] * x1 + mode.k[1] * x2);
                v += std::cos(phase) * mode.a + std::sin(phase) * mode.b;
            }
            field.value(node) = v;
        }

        double l2_spec = constraint_residual(op, field).l2;

        // Central-difference divergence of the nodewise z-matrix field.
        const GridShape& grid = field.grid();
        double acc = 0.0;
        for (std::int64_t node = 0; node < grid.node_count(); ++node) {
            std::vector<int> j = grid.coords(node);
            Eigen::VectorXd div = Eigen::VectorXd::Zero(2);
            for (int axis = 0; axis < 2; ++axis) {
                std::vector<int> jp = j, jm = j;
                jp[static_cast<std::size_t>(axis)] = (j[static_cast<std::size_t>(axis)] + 1) % n;
                jm[static_cast<std::size_t>(axis)] = (j[static_cast<std::size_t>(axis)] + n - 1) % n;
                Eigen::MatrixXd zp = op.z_matrix(field.value(grid.flat(jp)));
                Eigen::MatrixXd zm = op.z_matrix(field.value(grid.flat(jm)));
                div += (zp.col(axis) - zm.col(axis)) * (0.5 * n);
            }
            acc += div.squaredNorm();
        }
        double l2_fd = std::sqrt(acc / static_cast<double>(grid.node_count()));

        // Triangle-inequality bound from the known mode content: per mode and
        // axis the spectral and FD multipliers differ by |2 pi k - n sin(2 pi k/n)|.
        double bound = 0.0;
        for (const auto& mode : modes) {
            double coeff_norm = 0.5 * std::sqrt(mode.a.squaredNorm() + mode.b.squaredNorm());
            for (int axis = 0; axis < 2; ++axis) {
                double w = 2.0 * M_PI * mode.k[axis];
                double fd = n * std::sin(w / n);
                bound += 2.0 * std::abs(w - fd) * op.coeff(axis).norm() * coeff_norm;
            }
        }
        struct Out {
            double spec, fd, bound;
        };
        return Out{l2_spec, l2_fd, bound};
    };

    auto coarse = evaluate(32);
    auto fine = evaluate(64);
    CHECK(std::abs(coarse.spec - coarse.fd) <= coarse.bound + 1e-12);
    CHECK(std::abs(fine.spec - fine.fd) <= fine.bound + 1e-12);
    // Discretization error decays with the grid.
    CHECK(std::abs(fine.spec - fine.fd) < std::abs(coarse.spec - coarse.fd));
    CHECK(std::abs(coarse.spec - coarse.fd) <= 0.05 * coarse.spec);
}

TEST_CASE("projection onto the constraint kernel", "[oscillation]") {
    std::mt19937_64 rng(102);
    LinearOperator div3 = divergence_operator(3);
    PeriodicField field(GridShape({8, 8, 8}), 3);
    for (std::int64_t node = 0; node < field.node_count(); ++node)
        field.value(node) = afree::testing::random_vector(rng, 3);

    PeriodicField projected = project_afree(div3, field);
    double scale = field.l2_norm();

    CHECK(constraint_residual(div3, projected).l2 <= 1e-10 * scale);
    CHECK((projected.mean() - field.mean()).norm() <= 1e-13 * scale);
    CHECK(projected.l2_norm() <= field.l2_norm() + 1e-12);

    // Idempotent.
    PeriodicField twice = project_afree(div3, projected);
    double diff = 0.0;
    for (std::int64_t node = 0; node < field.node_count(); ++node)
        diff = std::max(diff, (twice.value(node) - projected.value(node)).norm());
    CHECK(diff <= 1e-12 * scale);
}

TEST_CASE("projection zeroes a mode orthogonal to the kernel", "[oscillation]") {
    // For the divergence constraint the kernel at frequency k is k-perp, so a
    // mode pointing along k is annihilated.
    LinearOperator div2 = divergence_operator(2);
    GridShape grid({16, 16});
    PeriodicField field(grid, 2);
    Eigen::Vector2d khat = Eigen::Vector2d(1.0, 2.0).normalized();
    for (std::int64_t node = 0; node < grid.node_count(); ++node) {
        std::vector<int> j = grid.coords(node);
        double phase = 2.0 * M_PI * (1.0 * j[0] + 2.0 * j[1]) / 16.0;
        field.value(node) = std::cos(phase) * khat;
    }
    PeriodicField projected = project_afree(div2, field);
    CHECK(projected.l2_norm() <= 1e-12);

    // And an already compatible field is untouched.
    PeriodicField tangent(grid, 2);
    Eigen::Vector2d kperp(-khat[1], khat[0]);
    for (std::int64_t node = 0; node < grid.node_count(); ++node) {
        std::vector<int> j = grid.coords(node);
        double phase = 2.0 * M_PI * (1.0 * j[0] + 2.0 * j[1]) / 16.0;
        tangent.value(node) = std::sin(phase) * kperp;
    }
    PeriodicField kept = project_afree(div2, tangent);
    double diff = 0.0;
    for (std::int64_t node = 0; node < grid.node_count(); ++node)
        diff = std::max(diff, (kept.value(node) - tangent.value(node)).norm());
    CHECK(diff <= 1e-12);
}

TEST_CASE("segment decomposition basics", "[oscillation]") {
    Eigen::VectorXd z1 = vec2(1.0, 0.0);
    Eigen::VectorXd z2 = vec2(0.0, 1.0);
    GridShape grid({8, 8});

    PeriodicField constant(grid, 2);
    for (std::int64_t node = 0; node < grid.node_count(); ++node) constant.value(node) = z1;
    SegmentDecomposition dec = segment_decompose(constant, z1, z2);
    for (std::int64_t node = 0; node < grid.node_count(); ++node) {
        CHECK(dec.lambda_field.value(node)[0] == 1.0);
        CHECK(dec.e_field.value(node).norm() == 0.0);
    }

    CHECK_THROWS_AS(segment_decompose(constant, z1, z1), std::invalid_argument);
}

TEST_CASE("segment decomposition recovers orthogonal noise exactly", "[oscillation]") {
    Eigen::VectorXd z1 = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd z2 = Eigen::VectorXd::Zero(3);
    z1[0] = 2.0;  // segment along e0
    GridShape grid({8, 4});

    std::mt19937_64 rng(103);
    PeriodicField field(grid, 3);
    std::vector<double> lams, noise;
    for (std::int64_t node = 0; node < grid.node_count(); ++node) {
        double lam = 0.25 + 0.5 * std::uniform_real_distribution<double>(0, 1)(rng);
        double eta = std::uniform_real_distribution<double>(-1, 1)(rng);
        Eigen::VectorXd v = lam * z1 + (1.0 - lam) * z2;
        v[1] = eta;  // orthogonal to z1 - z2
        field.value(node) = v;
        lams.push_back(lam);
        noise.push_back(eta);
    }
    SegmentDecomposition dec = segment_decompose(field, z1, z2);
    for (std::int64_t node = 0; node < grid.node_count(); ++node) {
        CHECK(dec.lambda_field.value(node)[0] ==
              Catch::Approx(lams[static_cast<std::size_t>(node)]).margin(1e-14));
        CHECK(dec.e_field.value(node)[1] ==
              Catch::Approx(noise[static_cast<std::size_t>(node)]).margin(1e-14));
        CHECK(std::abs(dec.e_field.value(node)[0]) < 1e-14);
    }

    // Square laminate decomposes with zero remainder.
    LinearOperator div2 = divergence_operator(2);
    LaminateSpec spec;
    spec.z1 = vec2(0.0, 1.0);
    spec.z2 = vec2(0.0, -1.0);
    spec.xi = Eigen::Vector2i(1, 0);
    spec.lambda = 0.5;
    PeriodicField lam_field = synthesize_laminate(div2, spec, {16, 4});
    SegmentDecomposition lam_dec = segment_decompose(lam_field, spec.z1, spec.z2);
    for (std::int64_t node = 0; node < lam_field.node_count(); ++node) {
        double lam = lam_dec.lambda_field.value(node)[0];
        CHECK((lam == 0.0 || lam == 1.0));
        CHECK(lam_dec.e_field.value(node).norm() == 0.0);
    }
}

TEST_CASE("rigidity reconstruction is exact for constant fields", "[rigidity]") {
    LinearOperator op = euler_like_operator();
    Eigen::VectorXd z2 = Eigen::VectorXd::Zero(10);
    Eigen::VectorXd z1 = euler_identity_state();  // difference has full-rank z-matrix
    GridShape grid({4, 4, 4, 4});
    PeriodicField field(grid, 10);
    for (std::int64_t node = 0; node < grid.node_count(); ++node)
        field.value(node) = 0.5 * (z1 + z2);
    RigidityReport report = rigidity_reconstruct(op, z1, z2, field);
    CHECK(report.lambda_mean == Catch::Approx(0.5));
    CHECK(report.reconstruction_error <= 1e-13);
    CHECK(report.e_norm <= 1e-13);
    CHECK(report.left_inverse_min_sv == Catch::Approx(1.0));
}

TEST_CASE("rigidity reconstruction refuses wave-cone pairs", "[rigidity]") {
    LinearOperator op = euler_like_operator();
    Eigen::VectorXd z1 = Eigen::VectorXd::Zero(10);
    Eigen::VectorXd z2 = euler_singular_state();  // difference z-matrix is singular
    PeriodicField field(GridShape({4, 4, 4, 4}), 10);
    CHECK_THROWS_WITH(rigidity_reconstruct(op, z1, z2, field),
                      Catch::Matchers::ContainsSubstring("wave cone"));
}

TEST_CASE("rigidity bound holds for a projected smooth-fraction field", "[rigidity]") {
    LinearOperator op = euler_like_operator();
    Eigen::VectorXd z2 = Eigen::VectorXd::Zero(10);
    Eigen::VectorXd z1 = euler_identity_state();
    GridShape grid({6, 6, 6, 6});

    PeriodicField field(grid, 10);
    for (std::int64_t node = 0; node < grid.node_count(); ++node) {
        std::vector<int> j = grid.coords(node);
        double lam = 0.5 + 0.2 * std::sin(2.0 * M_PI * j[0] / 6.0) * std::cos(2.0 * M_PI * j[1] / 6.0) +
                     0.1 * std::sin(2.0 * M_PI * j[3] / 6.0);
        field.value(node) = lam * z1 + (1.0 - lam) * z2;
    }
    PeriodicField constrained = project_afree(op, field);
    RigidityReport report = rigidity_reconstruct(op, z1, z2, constrained);
    CHECK(report.residual_norm <= 1e-10 * constrained.l2_norm());
    CHECK(report.reconstruction_error <= report.kappa * (report.e_norm + 2.0 * report.grid_h));
}

TEST_CASE("forcing a laminate onto a rigid pair destroys it", "[rigidity]") {
    // Square profile between states whose difference is outside the cone,
    // then projected onto the constraint: the off-segment remainder stays
    // bounded below under refinement, the signature of rigidity.
    LinearOperator op = euler_like_operator();
    Eigen::VectorXd z2 = Eigen::VectorXd::Zero(10);
    Eigen::VectorXd z1 = euler_identity_state();

    auto e_norm_at = [&](int n) {
        GridShape grid({2, n, 2, 2});
        PeriodicField field(grid, 10);
        for (std::int64_t node = 0; node < grid.node_count(); ++node) {
            std::vector<int> j = grid.coords(node);
            field.value(node) = (j[1] < n / 2) ? z1 : z2;
        }
        PeriodicField constrained = project_afree(op, field);
        SegmentDecomposition dec = segment_decompose(constrained, z1, z2);
        return dec.e_field.l2_norm();
    };

    double coarse = e_norm_at(16);
    double fine = e_norm_at(32);
    double scale = (z1 - z2).norm();
    CHECK(coarse > 0.02 * scale);
    CHECK(fine > 0.5 * coarse);
}

TEST_CASE("oscillation feasibility returns a usable laminate spec", "[oscillation]") {
    LinearOperator div2 = divergence_operator(2);
    Eigen::VectorXd z1 = vec2(1.0, 1.0);
    Eigen::VectorXd z2 = vec2(0.0, -1.0);
    FeasibilityResult result = oscillation_feasibility(div2, z1, z2);
    CHECK(result.verdict == FeasibilityVerdict::oscillation_constructible);
    REQUIRE(result.direction.has_value());
    REQUIRE(result.laminate.has_value());

    // The returned spec synthesizes a compatible field directly.
    std::vector<int> dims(2);
    for (int a = 0; a < 2; ++a)
        dims[static_cast<std::size_t>(a)] = std::max(8, 16 * std::abs((*result.direction)[a]));
    PeriodicField field = synthesize_laminate(div2, *result.laminate, dims);
    CHECK(constraint_residual(div2, field).l2 <= 1e-10 * field.l2_norm());

    CHECK_THROWS_AS(oscillation_feasibility(div2, z1, z1), std::invalid_argument);
}

TEST_CASE("laminate young measure converges to the two-point target", "[oscillation][property]") {
    LinearOperator div2 = divergence_operator(2);
    LaminateSpec spec;
    spec.z1 = vec2(0.0, 1.0);
    spec.z2 = vec2(0.0, -1.0);
    spec.lambda = 1.0 / std::sqrt(2.0);  // not resolution-aligned
    spec.xi = Eigen::Vector2i(1, 0);
    DiscreteYoungMeasure target = DiscreteYoungMeasure::two_point(spec.z1, spec.z2, spec.lambda);

    double previous = std::numeric_limits<double>::infinity();
    for (int n : {32, 64, 128}) {
        PeriodicField field = synthesize_laminate(div2, spec, {n, 4});
        double dist = measure_distance(field_young_measure(field, 1e-9), target);
        CHECK(dist <= 2.0 * (spec.z1 - spec.z2).norm() / n);
        CHECK(dist <= previous);
        previous = dist;
    }
}

TEST_CASE("sine laminate of the singular relaxation pair is exact", "[oscillation]") {
    LinearOperator op = euler_like_operator();
    LaminateSpec spec;
    spec.z2 = euler_identity_state();
    spec.z1 = spec.z2 + euler_singular_state();
    spec.lambda = 0.3;
    spec.xi = Eigen::Vector4i(0, 1, 0, 0);
    spec.profile = LaminateProfile::sine;
    PeriodicField field = synthesize_laminate(op, spec, {2, 16, 2, 2});
    CHECK(constraint_residual(op, field).l2 <= 1e-10 * field.l2_norm());
}

TEST_CASE("laminate young measure weights track the duty cycle", "[oscillation]") {
    LinearOperator div2 = divergence_operator(2);
    LaminateSpec spec;
    spec.z1 = vec2(0.0, 1.0);
    spec.z2 = vec2(0.0, -1.0);
    spec.lambda = 0.25;
    spec.xi = Eigen::Vector2i(1, 0);
    PeriodicField field = synthesize_laminate(div2, spec, {64, 4});
    DiscreteYoungMeasure nu = field_young_measure(field, 1e-9);
    REQUIRE(nu.support_size() == 2);
    for (const auto& atom : nu.atoms()) {
        if (atom.point == spec.z1)
            CHECK(atom.weight == Catch::Approx(0.25));
        else
            CHECK(atom.weight == Catch::Approx(0.75));
    }
}
