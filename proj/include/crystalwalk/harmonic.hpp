#pragma once

#include <vector>

#include <Eigen/Dense>

#include "crystalwalk/lattice.hpp"
#include "crystalwalk/stationary.hpp"

namespace cryst {

// 1-form on the quotient: omega(inverse(e)) = -omega(e).
struct OneForm {
    std::vector<double> value;  // per dart
};

// Coboundary df(e) = f(t(e)) - f(o(e)).
OneForm difference(const QuotientGraph& graph, const std::vector<double>& f);

// Sum of omega along a connected dart path (t(e_i) == o(e_{i+1})).
double line_integral(const QuotientGraph& graph, const OneForm& omega,
                     const std::vector<int>& path);

// <<omega, eta>>_p = sum mtilde(e) omega(e) eta(e) - <gamma_p,omega><gamma_p,eta>,
// with <gamma_p, omega> = sum mtilde(e) omega(e).
double energy_inner(const QuotientGraph& graph, const std::vector<double>& mtilde,
                    const OneForm& omega, const OneForm& eta);

// Modified harmonic realization: vertex positions on the fundamental domain
// (sigma coordinates, base pinned to 0) and the per-dart increments
// dPhi0(e) = position(t(e)) - position(o(e)) + voltage(e).
struct Realization {
    int base = 0;
    Eigen::MatrixXd position;   // vertices x rank
    Eigen::MatrixXd increment;  // darts x rank
};

// Solves sum_{e in E_x} p(e) dPhi0(e) = rho_R(gamma_p) for all x with
// position(base) = 0; verifies the discarded row's residual (<= 1e-10).
Realization modified_harmonic_realization(const CrystalLattice& lattice,
                                          const TransitionKernel& kernel,
                                          const StationaryMeasure& m, int base = 0);

struct AlbaneseMetric {
    Eigen::MatrixXd gram;            // G_ij = <<omega_i, omega_j>>_p
    Eigen::MatrixXd metric;          // gram^{-1}; <sigma_i, sigma_j>_{g0}
    Eigen::MatrixXd to_orthonormal;  // lower triangular T with T G T^T = I
};

// Gram matrix of the coordinate forms of the realization, its inverse, and
// the Gram-Schmidt transform (u_1 first, positive diagonal).
AlbaneseMetric albanese(const CrystalLattice& lattice, const TransitionKernel& kernel,
                        const StationaryMeasure& m, const Realization& realization);

// Coordinates of sum_i w_i sigma_i in the frame dual to the orthonormalized
// forms: c = T w. Its Euclidean norm is the g0-length of the vector.
Eigen::VectorXd to_orthonormal_coords(const AlbaneseMetric& metric, const Eigen::VectorXd& w);

}  // namespace cryst
