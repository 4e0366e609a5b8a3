#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "crystalwalk/girsanov.hpp"
#include "crystalwalk/harmonic.hpp"
#include "crystalwalk/lattice.hpp"

namespace cryst {

// Key for a covering vertex (quotient vertex, cell).
struct CellKey {
    int vertex = 0;
    std::vector<long long> cell;
    bool operator==(const CellKey& other) const {
        return vertex == other.vertex && cell == other.cell;
    }
};

struct CellKeyHash {
    std::size_t operator()(const CellKey& k) const {
        std::uint64_t h = 0x9e3779b97f4a7c15ull ^ static_cast<std::uint64_t>(k.vertex);
        for (long long c : k.cell) {
            h ^= static_cast<std::uint64_t>(c) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

// Exact n-step distribution on the covering lattice.
struct CellDistribution {
    long long n = 0;
    std::unordered_map<CellKey, double, CellKeyHash> mass;

    double total_mass() const;
    double at(const LatticeState& state) const;  // 0 when outside the support
};

// Forward dynamic programming; n = 0 is the point mass at start. `prune`
// drops states below the threshold (exploratory use only; keep 0 in tests so
// ratio scans see the full support). Throws when the support would exceed
// `max_states`.
CellDistribution n_step(const CrystalLattice& lattice, const TransitionKernel& kernel,
                        const LatticeState& start, long long n,
                        std::size_t max_states = 50000000, double prune = 0.0);

struct RatioBand {
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    std::size_t support_size = 0;
};

// Extremes of p_changed(n,x,y) / (p(n,x,y) exp(n M_p)) over the step-n support.
RatioBand measure_change_ratio(const CrystalLattice& lattice, const TransitionKernel& kernel,
                          const ChangedKernel& changed, const LatticeState& start, long long n);

// Right-hand side of the exact bouquet identity:
// p(n,x,y) exp(lambda*[Phi0(y)-Phi0(x)]) F*(lambda*)^{-n}, with lambda* in
// sigma-dual coordinates. Requires a one-vertex quotient.
double bouquet_explicit(const CrystalLattice& lattice, const TransitionKernel& kernel,
                        const VertexMinimum& minimum, const Realization& realization,
                        const LatticeState& x, const LatticeState& y, long long n);

}  // namespace cryst
