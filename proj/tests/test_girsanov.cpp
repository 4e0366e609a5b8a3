#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "crystalwalk/girsanov.hpp"
#include "test_util.hpp"

using namespace cryst;

namespace {

struct Pipeline {
    BuiltLattice built;
    StationaryMeasure m;
    Realization realization;

    explicit Pipeline(const std::string& name, double p = 0.5)
        : built(builtin(name, p)),
          m(stationary_measure(built.lattice.quotient, built.kernel)),
          realization(modified_harmonic_realization(built.lattice, built.kernel, m, 0)) {}

    FreeEnergyContext context(const Eigen::MatrixXd* frame = nullptr) const {
        return make_free_energy_context(built.lattice, built.kernel, m, realization, frame);
    }
};

double changed_harmonicity_residual(const Pipeline& pipe, const ChangedKernel& changed) {
    double worst = 0.0;
    for (int x = 0; x < pipe.built.lattice.quotient.vertex_count(); ++x) {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(pipe.built.lattice.rank);
        for (int dart : pipe.built.lattice.quotient.outgoing[x])
            sum += changed.prob.prob[dart] * pipe.realization.increment.row(dart).transpose();
        worst = std::max(worst, sum.lpNorm<Eigen::Infinity>());
    }
    return worst;
}

}  // namespace

TEST_CASE("free energy is 1 at lambda = 0 and its gradient there is rho") {
    for (const char* name : {"hexagonal", "dice", "square"}) {
        Pipeline pipe(name);
        FreeEnergyContext ctx = pipe.context();
        Eigen::VectorXd rho =
            asymptotic_direction(pipe.built.lattice, pipe.built.kernel, pipe.m);
        for (int x = 0; x < pipe.built.lattice.quotient.vertex_count(); ++x) {
            CHECK(free_energy(ctx, x, Eigen::VectorXd::Zero(2)) ==
                  doctest::Approx(1.0).epsilon(1e-14));
            Eigen::VectorXd grad = free_energy_gradient(ctx, x, Eigen::VectorXd::Zero(2));
            CHECK((grad - rho).lpNorm<Eigen::Infinity>() < 1e-12);
        }
    }
}

TEST_CASE("bouquet free energy in the orthonormal frame matches the closed form") {
    double p = 0.7;
    Pipeline pipe("bouquet1", p);
    AlbaneseMetric alb =
        albanese(pipe.built.lattice, pipe.built.kernel, pipe.m, pipe.realization);
    FreeEnergyContext ctx = pipe.context(&alb.to_orthonormal);
    double root = std::sqrt(4 * p * (1 - p));
    for (double lambda : {-1.3, 0.0, 0.4, 2.0}) {
        Eigen::VectorXd l(1);
        l << lambda;
        double expected = p * std::exp(lambda / root) + (1 - p) * std::exp(-lambda / root);
        CHECK(free_energy(ctx, 0, l) == doctest::Approx(expected).epsilon(1e-13));
    }

    // Symmetric bouquet has zero gradient at 0.
    Pipeline fair("bouquet1", 0.5);
    FreeEnergyContext fair_ctx = fair.context();
    CHECK(std::abs(free_energy_gradient(fair_ctx, 0, Eigen::VectorXd::Zero(1))(0)) < 1e-15);

    // And unit Hessian at 0 in the orthonormal frame.
    AlbaneseMetric fair_alb =
        albanese(fair.built.lattice, fair.built.kernel, fair.m, fair.realization);
    FreeEnergyContext fair_on = fair.context(&fair_alb.to_orthonormal);
    CHECK(free_energy_hessian(fair_on, 0, Eigen::VectorXd::Zero(1))(0, 0) ==
          doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("gradient and Hessian match central finite differences") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> gauss(0.0, 0.8);
    for (const char* name : {"hexagonal", "dice", "square", "bouquet1"}) {
        Pipeline pipe(name, 0.6);
        FreeEnergyContext ctx = pipe.context();
        for (int x = 0; x < pipe.built.lattice.quotient.vertex_count(); ++x) {
            for (int trial = 0; trial < 50; ++trial) {
                Eigen::VectorXd lambda(ctx.dim);
                for (int k = 0; k < ctx.dim; ++k) lambda(k) = gauss(rng);
                Eigen::VectorXd g = free_energy_gradient(ctx, x, lambda);
                Eigen::VectorXd g_fd = testutil::fd_gradient(ctx, x, lambda);
                CHECK((g - g_fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
                Eigen::MatrixXd h = free_energy_hessian(ctx, x, lambda);
                Eigen::MatrixXd h_fd = testutil::fd_hessian(ctx, x, lambda);
                CHECK((h - h_fd).norm() <= 1e-6 * std::max(1.0, h.norm()));
            }
        }
    }
}

TEST_CASE("Hessian is positive definite at random points") {
    std::mt19937_64 rng(37);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (const char* name : {"hexagonal", "dice", "square"}) {
        Pipeline pipe(name);
        FreeEnergyContext ctx = pipe.context();
        for (int trial = 0; trial < 100; ++trial) {
            Eigen::VectorXd lambda(2);
            lambda << gauss(rng), gauss(rng);
            int x = trial % pipe.built.lattice.quotient.vertex_count();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(
                free_energy_hessian(ctx, x, lambda));
            CHECK(eigen.eigenvalues().minCoeff() > 0.0);
        }
    }
}

TEST_CASE("free energy overflow guard") {
    Pipeline pipe("bouquet1", 0.4);
    FreeEnergyContext ctx = pipe.context();
    Eigen::VectorXd huge(1);
    huge << 1e4;
    CHECK_THROWS_AS(free_energy(ctx, 0, huge), NumericalError);
}

TEST_CASE("bouquet minimizer closed form") {
    for (double p : {0.2, 1.0 / 3, 0.6667, 0.9}) {
        Pipeline pipe("bouquet1", p);
        AlbaneseMetric alb =
            albanese(pipe.built.lattice, pipe.built.kernel, pipe.m, pipe.realization);
        FreeEnergyContext ctx = pipe.context(&alb.to_orthonormal);
        VertexMinimum vm = minimize_free_energy(ctx, 0);
        double expected_lambda = std::sqrt(p * (1 - p)) * std::log((1 - p) / p);
        CHECK(vm.lambda(0) == doctest::Approx(expected_lambda).epsilon(1e-10));
        CHECK(vm.f_min == doctest::Approx(std::sqrt(4 * p * (1 - p))).epsilon(1e-12));
        CHECK(vm.gradient_norm <= 1e-12);
        CHECK(vm.monotone);
    }
}

TEST_CASE("hexagonal changed kernel (uniform) and its invariants") {
    // The three increments at each hexagonal vertex sum to zero, so the
    // p-harmonicity condition forces the uniform changed kernel; both
    // vertices share F* = (3/4)^{1/3} and exp(M_p) = 2^{2/3}/sqrt(3).
    Pipeline pipe("hexagonal");
    ChangedKernel changed =
        change_kernel(pipe.built.lattice, pipe.built.kernel, pipe.m, pipe.realization);
    for (double q : changed.prob.prob) CHECK(q == doctest::Approx(1.0 / 3).epsilon(1e-11));
    for (const VertexMinimum& vm : changed.minimizers.vertex) {
        CHECK(vm.f_min == doctest::Approx(std::pow(0.75, 1.0 / 3)).epsilon(1e-12));
        CHECK(vm.gradient_norm <= 1e-12);
    }
    // lambda*(x1) = (log(2/3), log 2) in generator-dual coordinates.
    CHECK(changed.minimizers.vertex[0].lambda(0) ==
          doctest::Approx(std::log(2.0 / 3)).epsilon(1e-10));
    CHECK(changed.minimizers.vertex[0].lambda(1) == doctest::Approx(std::log(2.0)).epsilon(1e-10));

    CHECK(changed.stationary.weight(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::exp(changed.m_p) ==
          doctest::Approx(std::pow(2.0, 2.0 / 3) / std::sqrt(3.0)).epsilon(1e-11));
    CHECK(changed_harmonicity_residual(pipe, changed) < 1e-10);
    CHECK(is_symmetric(pipe.built.lattice.quotient, changed.prob, changed.stationary));
    Eigen::VectorXd rho_changed =
        asymptotic_direction(pipe.built.lattice, changed.prob, changed.stationary);
    CHECK(rho_changed.lpNorm<Eigen::Infinity>() < 1e-10);

    // g0 of the changed walk: metric entries (6, 3, 6) on the generators.
    CHECK(changed.albanese_changed.metric(0, 0) == doctest::Approx(6.0).epsilon(1e-10));
    CHECK(changed.albanese_changed.metric(0, 1) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(changed.albanese_changed.metric(1, 1) == doctest::Approx(6.0).epsilon(1e-10));
}

TEST_CASE("dice changed kernel golden values") {
    Pipeline pipe("dice");
    ChangedKernel changed =
        change_kernel(pipe.built.lattice, pipe.built.kernel, pipe.m, pipe.realization);
    double s3 = std::sqrt(3.0);
    double a = (3 - s3) / 8;       // e1, e3, e4, e6
    double b = (s3 - 1) / 4;       // e2, e5
    const double expected[6] = {a, b, a, a, b, a};
    for (int edge = 0; edge < 6; ++edge) {
        CHECK(changed.prob.prob[2 * edge] == doctest::Approx(expected[edge]).epsilon(1e-11));
        CHECK(changed.prob.prob[2 * edge + 1] == doctest::Approx(1.0 / 3).epsilon(1e-11));
    }
    CHECK(changed.minimizers.vertex[0].f_min == doctest::Approx((s3 + 1) / 3).epsilon(1e-12));
    CHECK(changed.minimizers.vertex[1].f_min ==
          doctest::Approx(3 * std::pow(6.0, -2.0 / 3)).epsilon(1e-12));
    CHECK(changed.minimizers.vertex[2].f_min ==
          doctest::Approx(3 * std::pow(6.0, -2.0 / 3)).epsilon(1e-12));

    CHECK(changed.stationary.weight(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(changed.stationary.weight(1) == doctest::Approx(0.25).epsilon(1e-12));

    // Rate from the defining formula: exp(M_p) = 12^{1/6} / sqrt(sqrt(3)+1).
    CHECK(std::exp(changed.m_p) ==
          doctest::Approx(std::pow(12.0, 1.0 / 6) / std::sqrt(s3 + 1)).epsilon(1e-11));

    // gamma_p of the changed walk is nonzero while its image under rho_R is 0.
    CycleBasis basis = cycle_basis(pipe.built.lattice);
    DirectionReport dir = homological_direction(pipe.built.lattice, changed.prob,
                                                changed.stationary, basis);
    for (double c : dir.homology_coords)
        CHECK(c == doctest::Approx((5 - 3 * s3) / 48).epsilon(1e-10));
    CHECK(dir.asymptotic.lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK_FALSE(is_symmetric(pipe.built.lattice.quotient, changed.prob, changed.stationary));
    CHECK(changed_harmonicity_residual(pipe, changed) < 1e-10);
}

TEST_CASE("measure change is the identity on symmetric inputs") {
    Pipeline square("square");
    ChangedKernel changed =
        change_kernel(square.built.lattice, square.built.kernel, square.m, square.realization);
    for (int e = 0; e < 4; ++e)
        CHECK(changed.prob.prob[e] == doctest::Approx(square.built.kernel.prob[e]).epsilon(1e-15));
    CHECK(changed.m_p == doctest::Approx(0.0).epsilon(1e-14));
    for (const VertexMinimum& vm : changed.minimizers.vertex) {
        CHECK(vm.lambda.norm() <= 1e-12);
        CHECK(vm.f_min == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK((changed.albanese_changed.gram -
           albanese(square.built.lattice, square.built.kernel, square.m, square.realization).gram)
              .lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("changed kernel is independent of the evaluation frame") {
    std::mt19937_64 rng(41);
    for (const char* name : {"hexagonal", "dice", "bouquet1"}) {
        Pipeline pipe(name, 0.8);
        for (int trial = 0; trial < 5; ++trial) {
            TransitionKernel kernel = testutil::random_kernel(pipe.built.lattice.quotient, rng);
            StationaryMeasure m = stationary_measure(pipe.built.lattice.quotient, kernel);
            Realization real =
                modified_harmonic_realization(pipe.built.lattice, kernel, m, 0);
            ChangedKernel sigma =
                change_kernel(pipe.built.lattice, kernel, m, real, EvalFrame::SigmaDual);
            ChangedKernel ortho =
                change_kernel(pipe.built.lattice, kernel, m, real, EvalFrame::Orthonormal);
            for (int e = 0; e < pipe.built.lattice.quotient.dart_count(); ++e)
                CHECK(sigma.prob.prob[e] == doctest::Approx(ortho.prob.prob[e]).epsilon(1e-10));
            CHECK(sigma.m_p == doctest::Approx(ortho.m_p).epsilon(1e-10));
        }
    }
}

TEST_CASE("interpolation family") {
    Pipeline pipe("dice");
    const QuotientGraph& g = pipe.built.lattice.quotient;

    // eps = 1 returns the original kernel.
    TransitionKernel p1 = interpolation_family(g, pipe.built.kernel, pipe.m, 1.0);
    for (int e = 0; e < g.dart_count(); ++e)
        CHECK(p1.prob[e] == doctest::Approx(pipe.built.kernel.prob[e]).epsilon(1e-15));

    // eps = 0 satisfies detailed balance with respect to m, and m stays
    // stationary along the whole family.
    TransitionKernel p0 = interpolation_family(g, pipe.built.kernel, pipe.m, 0.0);
    CHECK(is_symmetric(g, p0, pipe.m));
    for (double eps : {0.0, 0.25, 0.5, 0.9}) {
        TransitionKernel pe = interpolation_family(g, pipe.built.kernel, pipe.m, eps);
        for (int x = 0; x < g.vertex_count(); ++x) {
            double sum = 0.0;
            for (int dart : g.outgoing[x]) sum += pe.prob[dart];
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
        }
        StationaryMeasure me = stationary_measure(g, pe);
        CHECK((me.weight - pipe.m.weight).lpNorm<Eigen::Infinity>() < 1e-12);

        // rho_R(gamma_{p_eps}) = eps * rho_R(gamma_p).
        Eigen::VectorXd rho_eps = asymptotic_direction(pipe.built.lattice, pe, me);
        Eigen::VectorXd rho =
            asymptotic_direction(pipe.built.lattice, pipe.built.kernel, pipe.m);
        CHECK((rho_eps - eps * rho).lpNorm<Eigen::Infinity>() < 1e-12);
    }
    CHECK_THROWS_AS(interpolation_family(g, pipe.built.kernel, pipe.m, 1.5), ValidationError);
}
