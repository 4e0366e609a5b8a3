#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "crystalwalk/harmonic.hpp"
#include "crystalwalk/lattice.hpp"
#include "crystalwalk/stationary.hpp"

namespace cryst {

// Coordinates used for the dual variable lambda. SigmaDual pairs lambda
// directly with sigma coordinates; Orthonormal pairs it with coordinates in
// the Albanese orthonormal frame. The changed kernel is the same either way,
// since it depends on lambda only through the pairing lambda[dPhi0].
enum class EvalFrame { SigmaDual, Orthonormal };

// Per-vertex exponential-moment data: the outgoing (probability, increment)
// pairs, increments expressed in the evaluation frame.
struct FreeEnergyContext {
    int dim = 0;
    std::vector<std::vector<std::pair<double, Eigen::VectorXd>>> terms;  // per vertex
    Eigen::VectorXd rho;  // asymptotic direction in the evaluation frame
};

FreeEnergyContext make_free_energy_context(const CrystalLattice& lattice,
                                           const TransitionKernel& kernel,
                                           const StationaryMeasure& m,
                                           const Realization& realization,
                                           const Eigen::MatrixXd* frame = nullptr);

// F_x(lambda) = sum_{e in E_x} p(e) exp(lambda[dPhi0(e)]). Throws
// NumericalError if any exponent magnitude exceeds 700.
double free_energy(const FreeEnergyContext& ctx, int x, const Eigen::VectorXd& lambda);
Eigen::VectorXd free_energy_gradient(const FreeEnergyContext& ctx, int x,
                                     const Eigen::VectorXd& lambda);
Eigen::MatrixXd free_energy_hessian(const FreeEnergyContext& ctx, int x,
                                    const Eigen::VectorXd& lambda);

struct VertexMinimum {
    Eigen::VectorXd lambda;
    double f_min = 0.0;
    int iterations = 0;
    double gradient_norm = 0.0;
    bool monotone = true;  // F decreased at every accepted Newton step
};

struct MinimizerResult {
    std::vector<VertexMinimum> vertex;
};

// Damped Newton from lambda = 0, halving the step while F fails to decrease;
// stops at ||grad|| <= 1e-12 or 200 iterations (then throws NumericalError).
VertexMinimum minimize_free_energy(const FreeEnergyContext& ctx, int x);
MinimizerResult minimize_all(const FreeEnergyContext& ctx);

struct ChangedKernel {
    TransitionKernel prob;          // the changed transition probability
    StationaryMeasure stationary;   // its invariant measure
    double m_p = 0.0;  // exponential rate relating the two n-step kernels
    AlbaneseMetric albanese_changed;
    MinimizerResult minimizers;
};

// Exponential change of measure: p(e) exp(lambda*(o(e))[dPhi0(e)]) / F*.
// Recomputes the stationary measure, M_p with the original m, and the
// Albanese metric of the changed walk on the same realization (which is
// harmonic for it).
ChangedKernel change_kernel(const CrystalLattice& lattice, const TransitionKernel& kernel,
                            const StationaryMeasure& m, const Realization& realization,
                            EvalFrame frame = EvalFrame::SigmaDual);

// p_eps = p0 + eps*q interpolating the m-symmetrization p0 and p = p_1.
TransitionKernel interpolation_family(const QuotientGraph& graph, const TransitionKernel& kernel,
                                      const StationaryMeasure& m, double eps);

}  // namespace cryst
