#include "crystalwalk/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace cryst {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

// Flattened per-vertex stepping tables: cumulative probabilities in dart-id
// order, terminus and voltage per slot.
struct StepTables {
    int rank;
    std::vector<int> offset;         // per vertex, into the flat arrays
    std::vector<int> count;          // darts per vertex
    std::vector<double> cumulative;  // prefix sums per vertex row
    std::vector<int> terminus;
    std::vector<long long> voltage;  // rank entries per slot

    StepTables(const CrystalLattice& lattice, const TransitionKernel& kernel)
        : rank(lattice.rank) {
        const QuotientGraph& g = lattice.quotient;
        offset.resize(g.vertex_count());
        count.resize(g.vertex_count());
        for (int x = 0; x < g.vertex_count(); ++x) {
            offset[x] = static_cast<int>(terminus.size());
            count[x] = static_cast<int>(g.outgoing[x].size());
            double acc = 0.0;
            for (int dart : g.outgoing[x]) {
                acc += kernel.prob[dart];
                cumulative.push_back(acc);
                terminus.push_back(g.darts[dart].terminus);
                for (int k = 0; k < rank; ++k) voltage.push_back(lattice.voltage[dart][k]);
            }
            cumulative.back() = 1.0;  // guard against accumulated rounding
        }
    }

    int pick(int vertex, double u) const {
        int base = offset[vertex];
        int n = count[vertex];
        for (int k = 0; k < n - 1; ++k) {
            if (u < cumulative[base + k]) return base + k;
        }
        return base + n - 1;
    }
};

struct BlockMoments {
    Eigen::VectorXd sum;
    Eigen::MatrixXd sum_outer;
    long long count = 0;
};

constexpr long long kWalkerBlock = 4096;

// Runs `body` for every walker block on `threads` workers; blocks are
// combined in index order afterwards, so results do not depend on the
// scheduling.
template <typename Body>
void run_blocks(long long walkers, int threads, const Body& body) {
    long long blocks = (walkers + kWalkerBlock - 1) / kWalkerBlock;
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = static_cast<int>(std::max<long long>(1, std::min<long long>(threads, blocks)));
    std::atomic<long long> next_block{0};
    auto worker = [&]() {
        for (;;) {
            long long b = next_block.fetch_add(1);
            if (b >= blocks) return;
            long long lo = b * kWalkerBlock;
            long long hi = std::min(walkers, lo + kWalkerBlock);
            body(b, lo, hi);
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
}

}  // namespace

WalkerRng WalkerRng::keyed(std::uint64_t master_seed, std::uint64_t walker_index) {
    std::uint64_t state = master_seed ^ (0x632be59bd9b4e019ull * (walker_index + 1));
    WalkerRng rng;
    for (auto& word : rng.s) word = splitmix64(state);
    return rng;
}

std::uint64_t WalkerRng::next() {
    std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
    std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
}

double WalkerRng::next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

void WalkConfig::validate() const {
    if (walkers < 1) throw ValidationError("walkers must be positive");
    if (steps < 1) throw ValidationError("steps must be positive");
    if (kernel_choice == KernelChoice::Interpolated && (epsilon < 0.0 || epsilon > 1.0))
        throw ValidationError("epsilon must lie in [0, 1]");
    double prev = 0.0;
    for (double t : time_grid) {
        if (t < prev || t > 1.0) throw ValidationError("time grid must be sorted within [0, 1]");
        prev = t;
    }
}

Eigen::VectorXd scaled_path_point(const std::vector<Eigen::VectorXd>& xi, long long n, double t,
                                  const Eigen::VectorXd& drift) {
    double nt = static_cast<double>(n) * t;
    long long floor_nt = static_cast<long long>(std::floor(nt));
    if (floor_nt >= n) floor_nt = n - 1;
    double frac = nt - static_cast<double>(floor_nt);
    Eigen::VectorXd value = xi[floor_nt] + frac * (xi[floor_nt + 1] - xi[floor_nt]) - nt * drift;
    return value / std::sqrt(static_cast<double>(n));
}

CltStats simulate_endpoint_stats(const CrystalLattice& lattice, const TransitionKernel& kernel,
                                 const Realization& realization, const Eigen::MatrixXd& frame,
                                 const Eigen::VectorXd& centering, const WalkConfig& config,
                                 std::vector<Eigen::VectorXd>* endpoints) {
    config.validate();
    const int d = lattice.rank;
    StepTables tables(lattice, kernel);
    const long long n = config.steps;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));

    long long blocks = (config.walkers + kWalkerBlock - 1) / kWalkerBlock;
    std::vector<BlockMoments> partial(blocks);
    if (endpoints) endpoints->assign(config.walkers, Eigen::VectorXd());

    run_blocks(config.walkers, config.threads, [&](long long block, long long lo, long long hi) {
        BlockMoments& acc = partial[block];
        acc.sum = Eigen::VectorXd::Zero(d);
        acc.sum_outer = Eigen::MatrixXd::Zero(d, d);
        std::vector<long long> cell(d);
        Eigen::VectorXd raw(d), mapped(d);
        for (long long w = lo; w < hi; ++w) {
            WalkerRng rng = WalkerRng::keyed(config.seed, static_cast<std::uint64_t>(w));
            int vertex = realization.base;
            std::fill(cell.begin(), cell.end(), 0);
            for (long long step = 0; step < n; ++step) {
                int slot = tables.pick(vertex, rng.next_unit());
                vertex = tables.terminus[slot];
                const long long* v = &tables.voltage[static_cast<std::size_t>(slot) * d];
                for (int k = 0; k < d; ++k) cell[k] += v[k];
            }
            for (int k = 0; k < d; ++k) {
                raw(k) = (realization.position(vertex, k) + static_cast<double>(cell[k]) -
                          static_cast<double>(n) * centering(k)) *
                         scale;
            }
            mapped.noalias() = frame * raw;
            acc.sum += mapped;
            acc.sum_outer += mapped * mapped.transpose();
            acc.count += 1;
            if (endpoints) (*endpoints)[w] = mapped;
        }
    });

    // Deterministic pairwise reduction in block-index order.
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd sum_outer = Eigen::MatrixXd::Zero(d, d);
    long long count = 0;
    for (const BlockMoments& acc : partial) {
        sum += acc.sum;
        sum_outer += acc.sum_outer;
        count += acc.count;
    }

    CltStats stats;
    stats.sample_count = count;
    stats.empirical_mean = sum / static_cast<double>(count);
    stats.empirical_cov =
        sum_outer / static_cast<double>(count) -
        stats.empirical_mean * stats.empirical_mean.transpose();
    stats.stderr_mean = (stats.empirical_cov.diagonal() / static_cast<double>(count))
                            .cwiseMax(0.0)
                            .cwiseSqrt();
    return stats;
}

Eigen::VectorXd drift_estimate(const CrystalLattice& lattice, const TransitionKernel& kernel,
                               const Realization& realization, const WalkConfig& config) {
    Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(lattice.rank, lattice.rank);
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(lattice.rank);
    CltStats stats = simulate_endpoint_stats(lattice, kernel, realization, identity, zero, config);
    // Endpoint statistics carry a 1/sqrt(n) scale; xi_n / n needs another one.
    return stats.empirical_mean / std::sqrt(static_cast<double>(config.steps));
}

InterpolatedCltResult interpolated_clt_experiment(const CrystalLattice& lattice, const TransitionKernel& kernel,
                           const StationaryMeasure& m, long long steps, long long walkers,
                           std::uint64_t seed, int threads) {
    double eps = 1.0 / std::sqrt(static_cast<double>(steps));
    TransitionKernel kernel_eps = interpolation_family(lattice.quotient, kernel, m, eps);
    TransitionKernel kernel_sym = interpolation_family(lattice.quotient, kernel, m, 0.0);

    StationaryMeasure m_eps = stationary_measure(lattice.quotient, kernel_eps);
    Realization phi_eps = modified_harmonic_realization(lattice, kernel_eps, m_eps, 0);

    StationaryMeasure m0 = stationary_measure(lattice.quotient, kernel_sym);
    Realization phi0 = modified_harmonic_realization(lattice, kernel_sym, m0, 0);
    AlbaneseMetric frame0 = albanese(lattice, kernel_sym, m0, phi0);

    WalkConfig config;
    config.walkers = walkers;
    config.steps = steps;
    config.seed = seed;
    config.kernel_choice = KernelChoice::Interpolated;
    config.epsilon = eps;
    config.threads = threads;

    InterpolatedCltResult result;
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(lattice.rank);
    result.stats = simulate_endpoint_stats(lattice, kernel_eps, phi_eps, frame0.to_orthonormal,
                                           zero, config);
    result.target_mean =
        to_orthonormal_coords(frame0, asymptotic_direction(lattice, kernel, m));
    return result;
}

double ergodic_edge_average(const CrystalLattice& lattice, const TransitionKernel& kernel,
                            const std::vector<double>& f, long long n, std::uint64_t seed,
                            int start_vertex) {
    if (n < 1) throw ValidationError("ergodic_edge_average requires n >= 1");
    const QuotientGraph& g = lattice.quotient;
    StepTables tables(lattice, kernel);
    // Map flat slots back to dart ids for evaluating f.
    std::vector<int> slot_dart;
    for (int x = 0; x < g.vertex_count(); ++x)
        for (int dart : g.outgoing[x]) slot_dart.push_back(dart);

    WalkerRng rng = WalkerRng::keyed(seed, 0);
    int vertex = start_vertex;
    double total = 0.0;
    for (long long i = 0; i < n; ++i) {
        int slot = tables.pick(vertex, rng.next_unit());
        total += f[slot_dart[slot]];
        vertex = tables.terminus[slot];
    }
    return total / static_cast<double>(n);
}

}  // namespace cryst
