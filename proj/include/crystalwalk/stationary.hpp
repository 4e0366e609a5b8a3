#pragma once

#include <vector>

#include <Eigen/Dense>

#include "crystalwalk/lattice.hpp"

namespace cryst {

struct StationaryMeasure {
    Eigen::VectorXd weight;  // per vertex, positive, sums to 1
};

// Unique normalized solution of m(x) = sum_{e in E_x} p(inverse(e)) m(t(e)).
// Dense solve with one row replaced by the normalization; the residual of the
// replaced row is verified afterwards.
StationaryMeasure stationary_measure(const QuotientGraph& graph, const TransitionKernel& kernel);

// Cross-check oracle for the dense solve. Iterates the lazy adjoint operator
// (I + P^T)/2 so periodic quotients converge too.
StationaryMeasure stationary_measure_power(const QuotientGraph& graph,
                                           const TransitionKernel& kernel,
                                           int max_iterations = 100000,
                                           double tolerance = 1e-15);

// Dart weights mtilde(e) = p(e) m(o(e)).
std::vector<double> dart_weights(const QuotientGraph& graph, const TransitionKernel& kernel,
                                 const StationaryMeasure& m);

// Spanning tree plus one fundamental cycle per cotree edge. Deterministic:
// BFS from the first vertex preferring zero-voltage darts, then lowest id;
// cotree edges in edge-id order. Cycles run cotree dart first, then the tree
// path from its terminus back to its origin.
struct CycleBasis {
    std::vector<int> tree_darts;    // forward dart ids of tree edges
    std::vector<int> cotree_darts;  // forward dart ids of cotree edges, id order
    std::vector<std::vector<int>> cycles;
};

CycleBasis cycle_basis(const CrystalLattice& lattice);

struct DirectionReport {
    std::vector<double> edge_flow;        // mtilde per dart
    std::vector<double> homology_coords;  // gamma_p on the cotree cycle basis
    Eigen::VectorXd asymptotic;           // rho_R(gamma_p) in sigma coordinates
};

DirectionReport homological_direction(const CrystalLattice& lattice, const TransitionKernel& kernel,
                                      const StationaryMeasure& m, const CycleBasis& basis);

// rho_R(gamma_p) = sum over darts of mtilde(e) * voltage(e).
Eigen::VectorXd asymptotic_direction(const CrystalLattice& lattice, const TransitionKernel& kernel,
                                     const StationaryMeasure& m);

bool is_symmetric(const QuotientGraph& graph, const TransitionKernel& kernel,
                  const StationaryMeasure& m, double tolerance = 1e-12);

// Exact E[(1/n) sum_{i=1..n} f(e_i)] for the quotient chain started from the
// given vertex distribution, by iterating the distribution on V0.
double expected_edge_average(const QuotientGraph& graph, const TransitionKernel& kernel,
                             const std::vector<double>& f, long long n,
                             const Eigen::VectorXd& start);

}  // namespace cryst
