#pragma once

#include <random>
#include <vector>

#include "crystalwalk/girsanov.hpp"
#include "crystalwalk/lattice.hpp"

namespace testutil {

// Random strictly positive kernel on an existing quotient (probabilities in
// [0.1, 1] before row normalization, so increments stay well scaled).
inline cryst::TransitionKernel random_kernel(const cryst::QuotientGraph& graph,
                                             std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.1, 1.0);
    cryst::TransitionKernel kernel;
    kernel.prob.resize(graph.dart_count());
    for (double& p : kernel.prob) p = unit(rng);
    for (int x = 0; x < graph.vertex_count(); ++x) {
        double sum = 0.0;
        for (int dart : graph.outgoing[x]) sum += kernel.prob[dart];
        for (int dart : graph.outgoing[x]) kernel.prob[dart] /= sum;
    }
    return kernel;
}

// Central finite differences of the free energy, the independent oracle for
// the analytic gradient.
inline Eigen::VectorXd fd_gradient(const cryst::FreeEnergyContext& ctx, int x,
                                   const Eigen::VectorXd& lambda, double h = 1e-5) {
    Eigen::VectorXd g(ctx.dim);
    for (int i = 0; i < ctx.dim; ++i) {
        Eigen::VectorXd up = lambda, down = lambda;
        up(i) += h;
        down(i) -= h;
        g(i) = (cryst::free_energy(ctx, x, up) - cryst::free_energy(ctx, x, down)) / (2 * h);
    }
    return g;
}

inline Eigen::MatrixXd fd_hessian(const cryst::FreeEnergyContext& ctx, int x,
                                  const Eigen::VectorXd& lambda, double h = 1e-5) {
    Eigen::MatrixXd m(ctx.dim, ctx.dim);
    for (int j = 0; j < ctx.dim; ++j) {
        Eigen::VectorXd up = lambda, down = lambda;
        up(j) += h;
        down(j) -= h;
        m.col(j) = (cryst::free_energy_gradient(ctx, x, up) -
                    cryst::free_energy_gradient(ctx, x, down)) /
                   (2 * h);
    }
    return m;
}

}  // namespace testutil
