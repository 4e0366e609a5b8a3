#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "crystalwalk/girsanov.hpp"
#include "crystalwalk/harmonic.hpp"
#include "crystalwalk/lattice.hpp"

namespace cryst {

// xoshiro256++, seeded per walker via SplitMix64 on (master seed, walker
// index). Streams are independent of worker count and iteration order.
struct WalkerRng {
    std::uint64_t s[4];

    static WalkerRng keyed(std::uint64_t master_seed, std::uint64_t walker_index);
    std::uint64_t next();
    double next_unit();  // [0, 1)
};

enum class KernelChoice { Original, Changed, Interpolated };

struct WalkConfig {
    long long walkers = 0;
    long long steps = 0;
    std::uint64_t seed = 0;
    KernelChoice kernel_choice = KernelChoice::Original;
    double epsilon = 1.0;                 // for Interpolated
    std::vector<double> time_grid = {1.0};
    int threads = 0;                      // 0 = hardware concurrency

    void validate() const;
};

struct CltStats {
    Eigen::VectorXd empirical_mean;
    Eigen::MatrixXd empirical_cov;
    Eigen::VectorXd stderr_mean;
    long long sample_count = 0;
};

// Scaled path map at time t from the recorded positions xi_0..xi_n: linear
// interpolation between xi_[nt] and xi_[nt]+1, minus n t drift, over sqrt(n).
Eigen::VectorXd scaled_path_point(const std::vector<Eigen::VectorXd>& xi, long long n, double t,
                                  const Eigen::VectorXd& drift);

// Endpoint statistics of the scaled walk: each walker runs `steps` steps from
// (base, 0); the endpoint (position(vertex) + cell - steps*centering) is
// scaled by steps^{-1/2} and mapped through `frame`. Deterministic for fixed
// (seed, config) regardless of thread count.
CltStats simulate_endpoint_stats(const CrystalLattice& lattice, const TransitionKernel& kernel,
                                 const Realization& realization, const Eigen::MatrixXd& frame,
                                 const Eigen::VectorXd& centering, const WalkConfig& config,
                                 std::vector<Eigen::VectorXd>* endpoints = nullptr);

// Average of xi_n / n over walkers, in sigma coordinates.
Eigen::VectorXd drift_estimate(const CrystalLattice& lattice, const TransitionKernel& kernel,
                               const Realization& realization, const WalkConfig& config);

// Drift-interpolation experiment: builds p_eps with eps = steps^{-1/2}, its
// modified harmonic realization and the eps = 0 Albanese frame, then returns
// uncentered scaled endpoint statistics in that frame.
struct InterpolatedCltResult {
    CltStats stats;
    Eigen::VectorXd target_mean;  // rho_R(gamma_p) in the eps = 0 frame
};

InterpolatedCltResult interpolated_clt_experiment(const CrystalLattice& lattice, const TransitionKernel& kernel,
                           const StationaryMeasure& m, long long steps, long long walkers,
                           std::uint64_t seed, int threads = 0);

// Single-trajectory time average (1/n) sum f(e_i).
double ergodic_edge_average(const CrystalLattice& lattice, const TransitionKernel& kernel,
                            const std::vector<double>& f, long long n, std::uint64_t seed,
                            int start_vertex = 0);

}  // namespace cryst
