#include "crystalwalk/girsanov.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace cryst {

namespace {

constexpr double kExponentLimit = 700.0;
constexpr double kGradientTolerance = 1e-12;
constexpr int kMaxNewtonIterations = 200;

double checked_exp(double arg) {
    if (std::abs(arg) > kExponentLimit)
        throw NumericalError("free energy exponent out of double range");
    return std::exp(arg);
}

}  // namespace

FreeEnergyContext make_free_energy_context(const CrystalLattice& lattice,
                                           const TransitionKernel& kernel,
                                           const StationaryMeasure& m,
                                           const Realization& realization,
                                           const Eigen::MatrixXd* frame) {
    const QuotientGraph& graph = lattice.quotient;
    FreeEnergyContext ctx;
    ctx.dim = lattice.rank;
    ctx.terms.resize(graph.vertex_count());
    for (int x = 0; x < graph.vertex_count(); ++x) {
        for (int dart : graph.outgoing[x]) {
            Eigen::VectorXd w = realization.increment.row(dart).transpose();
            if (frame) w = (*frame) * w;
            ctx.terms[x].emplace_back(kernel.prob[dart], std::move(w));
        }
    }
    ctx.rho = asymptotic_direction(lattice, kernel, m);
    if (frame) ctx.rho = (*frame) * ctx.rho;
    return ctx;
}

double free_energy(const FreeEnergyContext& ctx, int x, const Eigen::VectorXd& lambda) {
    double f = 0.0;
    for (const auto& [p, w] : ctx.terms[x]) f += p * checked_exp(lambda.dot(w));
    return f;
}

Eigen::VectorXd free_energy_gradient(const FreeEnergyContext& ctx, int x,
                                     const Eigen::VectorXd& lambda) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(ctx.dim);
    for (const auto& [p, w] : ctx.terms[x]) g += p * checked_exp(lambda.dot(w)) * w;
    return g;
}

Eigen::MatrixXd free_energy_hessian(const FreeEnergyContext& ctx, int x,
                                    const Eigen::VectorXd& lambda) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(ctx.dim, ctx.dim);
    for (const auto& [p, w] : ctx.terms[x]) h += p * checked_exp(lambda.dot(w)) * (w * w.transpose());
    return h;
}

VertexMinimum minimize_free_energy(const FreeEnergyContext& ctx, int x) {
    VertexMinimum result;
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(ctx.dim);
    double f = free_energy(ctx, x, lambda);
    for (int it = 0; it < kMaxNewtonIterations; ++it) {
        Eigen::VectorXd grad = free_energy_gradient(ctx, x, lambda);
        result.gradient_norm = grad.norm();
        if (result.gradient_norm <= kGradientTolerance) {
            result.lambda = lambda;
            result.f_min = f;
            result.iterations = it;
            return result;
        }
        Eigen::MatrixXd hess = free_energy_hessian(ctx, x, lambda);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        if (ldlt.info() != Eigen::Success)
            throw NumericalError("free energy Hessian factorization failed");
        Eigen::VectorXd step = ldlt.solve(grad);
        Eigen::VectorXd candidate = lambda - step;
        double f_candidate = free_energy(ctx, x, candidate);
        // Once the Newton decrement falls below the evaluation noise of F,
        // the decrease test is meaningless; take the full step and let the
        // gradient contract quadratically.
        if (grad.dot(step) > 1e-13 * std::max(f, 1.0)) {
            double scale = 1.0;
            while (f_candidate > f && scale > 1e-16) {
                scale *= 0.5;
                candidate = lambda - scale * step;
                f_candidate = free_energy(ctx, x, candidate);
            }
            if (f_candidate > f) result.monotone = false;
        }
        lambda = candidate;
        f = f_candidate;
    }
    throw NumericalError("free energy minimization did not converge in 200 iterations");
}

MinimizerResult minimize_all(const FreeEnergyContext& ctx) {
    MinimizerResult all;
    all.vertex.reserve(ctx.terms.size());
    for (int x = 0; x < static_cast<int>(ctx.terms.size()); ++x)
        all.vertex.push_back(minimize_free_energy(ctx, x));
    return all;
}

ChangedKernel change_kernel(const CrystalLattice& lattice, const TransitionKernel& kernel,
                            const StationaryMeasure& m, const Realization& realization,
                            EvalFrame frame) {
    const QuotientGraph& graph = lattice.quotient;

    Eigen::MatrixXd frame_matrix;
    const Eigen::MatrixXd* frame_ptr = nullptr;
    if (frame == EvalFrame::Orthonormal) {
        frame_matrix = albanese(lattice, kernel, m, realization).to_orthonormal;
        frame_ptr = &frame_matrix;
    }
    FreeEnergyContext ctx = make_free_energy_context(lattice, kernel, m, realization, frame_ptr);

    ChangedKernel changed;
    changed.minimizers = minimize_all(ctx);

    changed.prob.prob.resize(graph.dart_count());
    for (int x = 0; x < graph.vertex_count(); ++x) {
        const VertexMinimum& vm = changed.minimizers.vertex[x];
        double row_sum = 0.0;
        for (std::size_t k = 0; k < graph.outgoing[x].size(); ++k) {
            int dart = graph.outgoing[x][k];
            const auto& [p, w] = ctx.terms[x][k];
            changed.prob.prob[dart] = p * std::exp(vm.lambda.dot(w)) / vm.f_min;
            row_sum += changed.prob.prob[dart];
        }
        if (std::abs(row_sum - 1.0) > 1e-12)
            throw NumericalError("changed kernel row sum drifted from 1");
        for (int dart : graph.outgoing[x]) changed.prob.prob[dart] /= row_sum;
    }

    changed.stationary = stationary_measure(graph, changed.prob);

    // M_p uses the original stationary measure and the frame-invariant
    // pairing lambda*(x)[rho_R(gamma_p)].
    changed.m_p = 0.0;
    for (int x = 0; x < graph.vertex_count(); ++x) {
        const VertexMinimum& vm = changed.minimizers.vertex[x];
        changed.m_p += m.weight(x) * (vm.lambda.dot(ctx.rho) - std::log(vm.f_min));
    }

    // The realization is harmonic for the changed kernel (the minimizer's
    // first-order condition), so the changed Albanese metric reuses it.
    changed.albanese_changed = albanese(lattice, changed.prob, changed.stationary, realization);
    return changed;
}

TransitionKernel interpolation_family(const QuotientGraph& graph, const TransitionKernel& kernel,
                                      const StationaryMeasure& m, double eps) {
    if (eps < 0.0 || eps > 1.0) throw ValidationError("interpolation requires 0 <= eps <= 1");
    TransitionKernel out;
    out.prob.resize(graph.dart_count());
    for (const Dart& d : graph.darts) {
        double reversed = kernel.prob[d.inverse] * m.weight(d.terminus) / m.weight(d.origin);
        double p0 = 0.5 * (kernel.prob[d.id] + reversed);
        double q = 0.5 * (kernel.prob[d.id] - reversed);
        out.prob[d.id] = p0 + eps * q;
        if (!(out.prob[d.id] > 0.0))
            throw NumericalError("interpolated kernel non-positive on a dart");
    }
    return out;
}

}  // namespace cryst
