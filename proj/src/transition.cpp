#include "crystalwalk/transition.hpp"

#include <cmath>
#include <limits>

namespace cryst {

double CellDistribution::total_mass() const {
    double total = 0.0;
    for (const auto& [key, p] : mass) total += p;
    return total;
}

double CellDistribution::at(const LatticeState& state) const {
    auto it = mass.find(CellKey{state.vertex, state.cell});
    return it == mass.end() ? 0.0 : it->second;
}

CellDistribution n_step(const CrystalLattice& lattice, const TransitionKernel& kernel,
                        const LatticeState& start, long long n, std::size_t max_states,
                        double prune) {
    if (n < 0) throw ValidationError("n_step requires n >= 0");
    CellDistribution dist;
    LatticeState s = start;
    s.cell.resize(lattice.rank, 0);
    dist.mass[CellKey{s.vertex, s.cell}] = 1.0;
    for (long long step = 0; step < n; ++step) {
        std::unordered_map<CellKey, double, CellKeyHash> next;
        next.reserve(dist.mass.size() * 2);
        for (const auto& [key, p] : dist.mass) {
            for (int dart : lattice.quotient.outgoing[key.vertex]) {
                CellKey moved;
                moved.vertex = lattice.quotient.darts[dart].terminus;
                moved.cell = key.cell;
                for (int k = 0; k < lattice.rank; ++k) moved.cell[k] += lattice.voltage[dart][k];
                next[std::move(moved)] += p * kernel.prob[dart];
            }
            if (next.size() > max_states)
                throw NumericalError("n_step support exceeds the configured memory budget");
        }
        if (prune > 0.0) {
            for (auto it = next.begin(); it != next.end();) {
                it = (it->second < prune) ? next.erase(it) : std::next(it);
            }
        }
        dist.mass = std::move(next);
    }
    dist.n = n;
    return dist;
}

RatioBand measure_change_ratio(const CrystalLattice& lattice, const TransitionKernel& kernel,
                          const ChangedKernel& changed, const LatticeState& start, long long n) {
    if (n < 1) throw ValidationError("measure_change_ratio requires n >= 1");
    CellDistribution original = n_step(lattice, kernel, start, n);
    CellDistribution tilted = n_step(lattice, changed.prob, start, n);
    double rate = std::exp(static_cast<double>(n) * changed.m_p);
    RatioBand band;
    band.min_ratio = std::numeric_limits<double>::infinity();
    band.max_ratio = -std::numeric_limits<double>::infinity();
    for (const auto& [key, p] : original.mass) {
        if (!(p > 0.0)) continue;
        auto it = tilted.mass.find(key);
        double q = it == tilted.mass.end() ? 0.0 : it->second;
        double ratio = q / (p * rate);
        band.min_ratio = std::min(band.min_ratio, ratio);
        band.max_ratio = std::max(band.max_ratio, ratio);
        ++band.support_size;
    }
    if (band.support_size == 0) throw NumericalError("measure_change_ratio: empty support");
    return band;
}

double bouquet_explicit(const CrystalLattice& lattice, const TransitionKernel& kernel,
                        const VertexMinimum& minimum, const Realization& realization,
                        const LatticeState& x, const LatticeState& y, long long n) {
    if (lattice.quotient.vertex_count() != 1)
        throw ValidationError("bouquet_explicit requires a one-vertex quotient");
    CellDistribution dist = n_step(lattice, kernel, x, n);
    double p_nxy = dist.at(y);
    Eigen::VectorXd displacement(lattice.rank);
    for (int k = 0; k < lattice.rank; ++k) {
        long long xc = k < static_cast<int>(x.cell.size()) ? x.cell[k] : 0;
        long long yc = k < static_cast<int>(y.cell.size()) ? y.cell[k] : 0;
        displacement(k) = realization.position(y.vertex, k) - realization.position(x.vertex, k) +
                          static_cast<double>(yc - xc);
    }
    return p_nxy * std::exp(minimum.lambda.dot(displacement)) *
           std::pow(minimum.f_min, -static_cast<double>(n));
}

}  // namespace cryst
