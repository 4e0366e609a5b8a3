#include "crystalwalk/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace cryst {

namespace {

Eigen::MatrixXd vertex_transition_matrix(const QuotientGraph& graph,
                                         const TransitionKernel& kernel) {
    const int nv = graph.vertex_count();
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(nv, nv);
    for (const Dart& d : graph.darts) P(d.origin, d.terminus) += kernel.prob[d.id];
    return P;
}

}  // namespace

StationaryMeasure stationary_measure(const QuotientGraph& graph, const TransitionKernel& kernel) {
    const int nv = graph.vertex_count();
    Eigen::MatrixXd P = vertex_transition_matrix(graph, kernel);
    Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(nv, nv);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nv);
    A.row(nv - 1).setOnes();
    b(nv - 1) = 1.0;
    Eigen::VectorXd m = A.partialPivLu().solve(b);

    // Residual of the replaced equation; failure signals an invalid kernel.
    double residual = ((P.transpose() - Eigen::MatrixXd::Identity(nv, nv)) * m).row(nv - 1).norm();
    if (!m.allFinite() || residual > 1e-12)
        throw NumericalError("stationary solve did not reach residual tolerance");
    for (int i = 0; i < nv; ++i) {
        if (!(m(i) > 0.0)) throw NumericalError("stationary measure has a non-positive entry");
    }
    return {m};
}

StationaryMeasure stationary_measure_power(const QuotientGraph& graph,
                                           const TransitionKernel& kernel, int max_iterations,
                                           double tolerance) {
    const int nv = graph.vertex_count();
    Eigen::MatrixXd Pt = vertex_transition_matrix(graph, kernel).transpose();
    Eigen::VectorXd m = Eigen::VectorXd::Constant(nv, 1.0 / nv);
    for (int it = 0; it < max_iterations; ++it) {
        Eigen::VectorXd next = 0.5 * (m + Pt * m);
        next /= next.sum();
        double delta = (next - m).lpNorm<Eigen::Infinity>();
        m = next;
        if (delta < tolerance) return {m};
    }
    throw NumericalError("stationary power iteration did not converge");
}

std::vector<double> dart_weights(const QuotientGraph& graph, const TransitionKernel& kernel,
                                 const StationaryMeasure& m) {
    std::vector<double> w(graph.dart_count());
    for (const Dart& d : graph.darts) w[d.id] = kernel.prob[d.id] * m.weight(d.origin);
    return w;
}

CycleBasis cycle_basis(const CrystalLattice& lattice) {
    const QuotientGraph& graph = lattice.quotient;
    const int nv = graph.vertex_count();
    std::vector<char> seen(nv, 0);
    std::vector<int> tree_dart_to(nv, -1);  // tree dart arriving at each vertex
    std::vector<char> edge_in_tree(graph.geometric_edge_count(), 0);

    auto zero_voltage = [&](int dart) {
        for (long long v : lattice.voltage[dart])
            if (v != 0) return false;
        return true;
    };

    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = 1;
    while (!frontier.empty()) {
        int x = frontier.front();
        frontier.pop();
        std::vector<int> candidates = graph.outgoing[x];
        std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
            return std::pair(!zero_voltage(a), a) < std::pair(!zero_voltage(b), b);
        });
        for (int dart : candidates) {
            int y = graph.darts[dart].terminus;
            if (!seen[y]) {
                seen[y] = 1;
                tree_dart_to[y] = dart;
                edge_in_tree[dart / 2] = 1;
                frontier.push(y);
            }
        }
    }

    CycleBasis basis;
    for (int edge = 0; edge < graph.geometric_edge_count(); ++edge) {
        int dart = 2 * edge;
        if (edge_in_tree[edge]) {
            basis.tree_darts.push_back(dart);
            continue;
        }
        basis.cotree_darts.push_back(dart);
        // Tree paths from terminus and origin up to the root; the cycle is the
        // cotree dart followed by (terminus -> root reversed splice -> origin).
        auto path_to_root = [&](int v) {
            std::vector<int> up;  // darts walked from v toward the root
            while (tree_dart_to[v] != -1) {
                up.push_back(graph.darts[tree_dart_to[v]].inverse);
                v = graph.darts[tree_dart_to[v]].origin;
            }
            return up;
        };
        std::vector<int> from_t = path_to_root(graph.darts[dart].terminus);
        std::vector<int> from_o = path_to_root(graph.darts[dart].origin);
        // Drop the common tail (shared path near the root).
        while (!from_t.empty() && !from_o.empty() && from_t.back() == from_o.back()) {
            from_t.pop_back();
            from_o.pop_back();
        }
        std::vector<int> cycle;
        cycle.push_back(dart);
        for (int e : from_t) cycle.push_back(e);
        for (auto it = from_o.rbegin(); it != from_o.rend(); ++it)
            cycle.push_back(graph.darts[*it].inverse);
        basis.cycles.push_back(std::move(cycle));
    }
    return basis;
}

DirectionReport homological_direction(const CrystalLattice& lattice, const TransitionKernel& kernel,
                                      const StationaryMeasure& m, const CycleBasis& basis) {
    DirectionReport report;
    report.edge_flow = dart_weights(lattice.quotient, kernel, m);
    report.homology_coords.reserve(basis.cotree_darts.size());
    for (int dart : basis.cotree_darts) {
        int inv = lattice.quotient.darts[dart].inverse;
        report.homology_coords.push_back(report.edge_flow[dart] - report.edge_flow[inv]);
    }
    report.asymptotic = asymptotic_direction(lattice, kernel, m);
    return report;
}

Eigen::VectorXd asymptotic_direction(const CrystalLattice& lattice, const TransitionKernel& kernel,
                                     const StationaryMeasure& m) {
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(lattice.rank);
    for (const Dart& d : lattice.quotient.darts) {
        double w = kernel.prob[d.id] * m.weight(d.origin);
        for (int k = 0; k < lattice.rank; ++k) rho(k) += w * lattice.voltage[d.id][k];
    }
    return rho;
}

bool is_symmetric(const QuotientGraph& graph, const TransitionKernel& kernel,
                  const StationaryMeasure& m, double tolerance) {
    for (const Dart& d : graph.darts) {
        double lhs = kernel.prob[d.id] * m.weight(d.origin);
        double rhs = kernel.prob[d.inverse] * m.weight(d.terminus);
        if (std::abs(lhs - rhs) > tolerance) return false;
    }
    return true;
}

double expected_edge_average(const QuotientGraph& graph, const TransitionKernel& kernel,
                             const std::vector<double>& f, long long n,
                             const Eigen::VectorXd& start) {
    if (n < 1) throw ValidationError("expected_edge_average requires n >= 1");
    const int nv = graph.vertex_count();
    Eigen::MatrixXd Pt = vertex_transition_matrix(graph, kernel).transpose();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(nv);  // one-step E[f] per vertex
    for (const Dart& d : graph.darts) g(d.origin) += kernel.prob[d.id] * f[d.id];
    Eigen::VectorXd dist = start;
    double total = 0.0;
    for (long long i = 0; i < n; ++i) {
        total += dist.dot(g);
        dist = Pt * dist;
    }
    return total / static_cast<double>(n);
}

}  // namespace cryst
