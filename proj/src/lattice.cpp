#include "crystalwalk/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cryst {

namespace {

constexpr double kRowSumTolerance = 1e-14;

// Reduces an integer matrix (rows = generators) in place and returns true iff
// the rows generate all of Z^d. Plain integer elimination with gcd pivots.
bool spans_integer_lattice(std::vector<std::vector<long long>> rows, int d) {
    int rank = 0;
    for (int col = 0; col < d; ++col) {
        int pivot = -1;
        for (int r = rank; r < static_cast<int>(rows.size()); ++r) {
            if (rows[r][col] != 0) {
                if (pivot < 0 || std::llabs(rows[r][col]) < std::llabs(rows[pivot][col])) pivot = r;
            }
        }
        if (pivot < 0) return false;  // column not reachable at all
        std::swap(rows[rank], rows[pivot]);
        bool reduced = false;
        while (!reduced) {
            reduced = true;
            for (int r = rank + 1; r < static_cast<int>(rows.size()); ++r) {
                if (rows[r][col] == 0) continue;
                long long q = rows[r][col] / rows[rank][col];
                for (int c = 0; c < d; ++c) rows[r][c] -= q * rows[rank][c];
                if (rows[r][col] != 0) {
                    std::swap(rows[rank], rows[r]);
                    reduced = false;
                }
            }
        }
        ++rank;
    }
    // Triangular now; the sublattice has index |prod of diagonal| in Z^d.
    long long det = 1;
    for (int i = 0; i < d; ++i) det *= rows[i][i];
    return std::llabs(det) == 1;
}

}  // namespace

int QuotientGraph::vertex_index(const std::string& name) const {
    for (int i = 0; i < vertex_count(); ++i) {
        if (vertex_names[i] == name) return i;
    }
    throw ValidationError("unknown vertex '" + name + "'");
}

std::string dart_name(const LatticeSpec& spec, int dart) {
    const EdgeSpec& e = spec.edges[dart / 2];
    return (dart % 2 == 0) ? e.id : "~" + e.id;
}

double parse_probability(const nlohmann::json& value, std::string* raw) {
    if (value.is_number()) {
        if (raw) raw->clear();
        return value.get<double>();
    }
    if (value.is_string()) {
        std::string s = value.get<std::string>();
        if (raw) *raw = s;
        auto slash = s.find('/');
        try {
            if (slash == std::string::npos) {
                std::size_t used = 0;
                double v = std::stod(s, &used);
                if (used != s.size()) throw ValidationError("bad probability '" + s + "'");
                return v;
            }
            double num = std::stod(s.substr(0, slash));
            double den = std::stod(s.substr(slash + 1));
            if (den == 0.0) throw ValidationError("zero denominator in '" + s + "'");
            return num / den;
        } catch (const std::invalid_argument&) {
            throw ValidationError("bad probability '" + s + "'");
        }
    }
    throw ValidationError("probability must be a number or a string");
}

BuiltLattice build_lattice(const LatticeSpec& spec) {
    if (spec.rank <= 0) throw ValidationError("rank must be a positive integer");
    if (spec.vertices.empty()) throw ValidationError("no vertices");
    if (spec.edges.empty()) throw ValidationError("no edges");

    BuiltLattice out;
    out.spec = spec;
    CrystalLattice& lat = out.lattice;
    lat.rank = spec.rank;
    lat.quotient.vertex_names = spec.vertices;
    const int nv = lat.quotient.vertex_count();
    lat.quotient.outgoing.assign(nv, {});

    for (const EdgeSpec& e : spec.edges) {
        if (static_cast<int>(e.voltage.size()) != spec.rank)
            throw ValidationError("edge '" + e.id + "': voltage length != rank");
        int from = lat.quotient.vertex_index(e.from);
        int to = lat.quotient.vertex_index(e.to);
        int fwd = lat.quotient.dart_count();
        lat.quotient.darts.push_back({fwd, from, to, fwd + 1});
        lat.quotient.darts.push_back({fwd + 1, to, from, fwd});
        lat.voltage.push_back(e.voltage);
        std::vector<long long> neg(e.voltage.size());
        for (std::size_t k = 0; k < neg.size(); ++k) neg[k] = -e.voltage[k];
        lat.voltage.push_back(std::move(neg));
        out.kernel.prob.push_back(e.p);
        out.kernel.prob.push_back(e.p_rev);
    }
    for (const Dart& d : lat.quotient.darts) lat.quotient.outgoing[d.origin].push_back(d.id);

    // Connectivity (as an undirected graph).
    std::vector<char> seen(nv, 0);
    std::queue<int> bfs;
    bfs.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!bfs.empty()) {
        int x = bfs.front();
        bfs.pop();
        for (int dart : lat.quotient.outgoing[x]) {
            int y = lat.quotient.darts[dart].terminus;
            if (!seen[y]) {
                seen[y] = 1;
                ++reached;
                bfs.push(y);
            }
        }
    }
    if (reached != nv) throw ValidationError("quotient graph is disconnected");

    // Kernel: strict positivity and exact row-stochasticity after a
    // below-tolerance renormalization. Larger deviations are rejected, not
    // silently fixed.
    for (int x = 0; x < nv; ++x) {
        if (lat.quotient.outgoing[x].empty())
            throw ValidationError("vertex '" + spec.vertices[x] + "' has no outgoing darts");
        double sum = 0.0;
        for (int dart : lat.quotient.outgoing[x]) {
            double p = out.kernel.prob[dart];
            if (!(p > 0.0))
                throw ValidationError("non-positive probability on dart " + dart_name(spec, dart));
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
            std::ostringstream msg;
            msg << "probabilities at vertex '" << spec.vertices[x] << "' sum to " << sum
                << " (must be 1 within " << kRowSumTolerance << ")";
            throw ValidationError(msg.str());
        }
        for (int dart : lat.quotient.outgoing[x]) out.kernel.prob[dart] /= sum;
    }

    // The voltages must reach all of Z^d along cycles: collect fundamental
    // cycle voltages of some spanning tree and row-reduce over Z.
    {
        std::vector<int> tree_dart_to(nv, -1);
        std::vector<char> vseen(nv, 0);
        std::queue<int> q;
        q.push(0);
        vseen[0] = 1;
        while (!q.empty()) {
            int x = q.front();
            q.pop();
            for (int dart : lat.quotient.outgoing[x]) {
                int y = lat.quotient.darts[dart].terminus;
                if (!vseen[y]) {
                    vseen[y] = 1;
                    tree_dart_to[y] = dart;
                    q.push(y);
                }
            }
        }
        // Potential phi(v) = voltage sum along the tree path root -> v.
        std::vector<std::vector<long long>> phi(nv, std::vector<long long>(spec.rank, 0));
        std::vector<int> order;
        order.push_back(0);
        for (std::size_t i = 0; i < order.size(); ++i) {
            for (int dart : lat.quotient.outgoing[order[i]]) {
                int y = lat.quotient.darts[dart].terminus;
                if (tree_dart_to[y] == dart) {
                    for (int k = 0; k < spec.rank; ++k)
                        phi[y][k] = phi[order[i]][k] + lat.voltage[dart][k];
                    order.push_back(y);
                }
            }
        }
        std::vector<std::vector<long long>> cycle_voltages;
        for (int edge = 0; edge < lat.quotient.geometric_edge_count(); ++edge) {
            int dart = lat.forward_dart_of_edge(edge);
            const Dart& d = lat.quotient.darts[dart];
            if (tree_dart_to[d.terminus] == dart || tree_dart_to[d.origin] == d.inverse) continue;
            std::vector<long long> cyc(spec.rank);
            for (int k = 0; k < spec.rank; ++k)
                cyc[k] = phi[d.origin][k] + lat.voltage[dart][k] - phi[d.terminus][k];
            cycle_voltages.push_back(std::move(cyc));
        }
        if (static_cast<int>(cycle_voltages.size()) < spec.rank ||
            !spans_integer_lattice(cycle_voltages, spec.rank))
            throw ValidationError("cycle voltages do not span Z^d: rank too large for this graph");
    }
    return out;
}

BuiltLattice builtin(const std::string& name, double p) {
    LatticeSpec spec;
    if (name == "hexagonal") {
        spec.rank = 2;
        spec.vertices = {"x1", "x2"};
        spec.edges = {
            {"e1", "x1", "x2", {1, 0}, 1.0 / 2, 1.0 / 6, "1/2", "1/6"},
            {"e2", "x1", "x2", {0, 0}, 1.0 / 3, 1.0 / 3, "1/3", "1/3"},
            {"e3", "x1", "x2", {0, 1}, 1.0 / 6, 1.0 / 2, "1/6", "1/2"},
        };
    } else if (name == "dice") {
        spec.rank = 2;
        spec.vertices = {"x", "y", "z"};
        spec.edges = {
            {"e1", "x", "y", {1, -1}, 1.0 / 4, 1.0 / 6, "1/4", "1/6"},
            {"e2", "x", "y", {0, 0}, 1.0 / 6, 1.0 / 3, "1/6", "1/3"},
            {"e3", "x", "y", {0, -1}, 1.0 / 12, 1.0 / 2, "1/12", "1/2"},
            {"e4", "x", "z", {0, 1}, 1.0 / 4, 1.0 / 6, "1/4", "1/6"},
            {"e5", "x", "z", {0, 0}, 1.0 / 6, 1.0 / 3, "1/6", "1/3"},
            {"e6", "x", "z", {-1, 1}, 1.0 / 12, 1.0 / 2, "1/12", "1/2"},
        };
    } else if (name == "bouquet1") {
        if (!(p > 0.0 && p < 1.0)) throw ValidationError("bouquet1 requires 0 < p < 1");
        spec.rank = 1;
        spec.vertices = {"x"};
        spec.edges = {{"e1", "x", "x", {1}, p, 1.0 - p, "", ""}};
    } else if (name == "square") {
        spec.rank = 2;
        spec.vertices = {"x"};
        spec.edges = {
            {"e1", "x", "x", {1, 0}, 1.0 / 4, 1.0 / 4, "1/4", "1/4"},
            {"e2", "x", "x", {0, 1}, 1.0 / 4, 1.0 / 4, "1/4", "1/4"},
        };
    } else {
        throw ValidationError("unknown builtin lattice '" + name + "'");
    }
    return build_lattice(spec);
}

LatticeState lift_step(const CrystalLattice& lattice, const LatticeState& state, int dart) {
    if (dart < 0 || dart >= lattice.quotient.dart_count())
        throw ValidationError("dart id out of range");
    const Dart& d = lattice.quotient.darts[dart];
    if (d.origin != state.vertex)
        throw ValidationError("dart does not leave the current vertex");
    LatticeState next;
    next.vertex = d.terminus;
    next.cell = state.cell;
    next.cell.resize(lattice.rank, 0);
    for (int k = 0; k < lattice.rank; ++k) next.cell[k] += lattice.voltage[dart][k];
    return next;
}

LatticeSpec parse_lattice_spec(const nlohmann::json& j) {
    LatticeSpec spec;
    try {
        spec.rank = j.at("rank").get<int>();
        spec.vertices = j.at("vertices").get<std::vector<std::string>>();
        for (const auto& je : j.at("edges")) {
            EdgeSpec e;
            e.id = je.at("id").get<std::string>();
            e.from = je.at("from").get<std::string>();
            e.to = je.at("to").get<std::string>();
            e.voltage = je.at("voltage").get<std::vector<long long>>();
            e.p = parse_probability(je.at("p"), &e.p_raw);
            e.p_rev = parse_probability(je.at("p_rev"), &e.p_rev_raw);
            spec.edges.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("malformed lattice file: ") + ex.what());
    }
    return spec;
}

BuiltLattice load_lattice_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("invalid JSON: ") + ex.what());
    }
    return build_lattice(parse_lattice_spec(j));
}

}  // namespace cryst
