#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace cryst {

// Input that fails structural validation (bad row sums, disconnected graph,
// malformed file). CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure on structurally valid input (solver residual too large,
// minimizer non-convergence, exponent overflow). CLI maps this to exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Oriented edge of the quotient graph. Each geometric edge is stored as two
// mutually inverse darts; dart 2k is the forward copy of edge k, dart 2k+1 its
// inverse.
struct Dart {
    int id = 0;
    int origin = 0;
    int terminus = 0;
    int inverse = 0;
};

struct QuotientGraph {
    std::vector<std::string> vertex_names;
    std::vector<Dart> darts;
    std::vector<std::vector<int>> outgoing;  // per vertex, dart ids in id order

    int vertex_count() const { return static_cast<int>(vertex_names.size()); }
    int dart_count() const { return static_cast<int>(darts.size()); }
    int geometric_edge_count() const { return dart_count() / 2; }
    int vertex_index(const std::string& name) const;
};

// Finite quotient multigraph plus a Z^d voltage per dart. The covering graph
// is never materialized: a covering vertex is (quotient vertex, cell), and a
// dart moves the cell by its voltage.
struct CrystalLattice {
    QuotientGraph quotient;
    int rank = 0;
    std::vector<std::vector<long long>> voltage;  // per dart, length == rank

    bool is_forward_dart(int dart) const { return dart % 2 == 0; }
    int edge_of_dart(int dart) const { return dart / 2; }
    int forward_dart_of_edge(int edge) const { return 2 * edge; }
};

struct TransitionKernel {
    std::vector<double> prob;  // per dart, strictly positive, rows sum to 1
};

// A vertex of the covering graph V = V0 x Z^d.
struct LatticeState {
    int vertex = 0;
    std::vector<long long> cell;
};

struct EdgeSpec {
    std::string id;
    std::string from;
    std::string to;
    std::vector<long long> voltage;
    double p = 0.0;
    double p_rev = 0.0;
    std::string p_raw;      // original text when given as a rational string
    std::string p_rev_raw;
};

struct LatticeSpec {
    int rank = 0;
    std::vector<std::string> vertices;
    std::vector<EdgeSpec> edges;
};

struct BuiltLattice {
    CrystalLattice lattice;
    TransitionKernel kernel;
    LatticeSpec spec;
};

// Dart naming used by reports and input files: edge k yields darts named
// spec.edges[k].id and "~" + spec.edges[k].id.
std::string dart_name(const LatticeSpec& spec, int dart);

// Validates and assembles a lattice/kernel pair. Inverse darts are
// synthesized. Checks: connectivity, involution/voltage antisymmetry, voltage
// length == rank, strict positivity, row sums within 1e-14 (then renormalized
// exactly), and that cycle voltages span all of Z^d.
BuiltLattice build_lattice(const LatticeSpec& spec);

// Builtins: "hexagonal", "dice", "square", "bouquet1" (p = forward loop
// probability, 0 < p < 1).
BuiltLattice builtin(const std::string& name, double p = 0.5);

// One step of the covering walk along `dart` (must leave state.vertex).
LatticeState lift_step(const CrystalLattice& lattice, const LatticeState& state, int dart);

LatticeSpec parse_lattice_spec(const nlohmann::json& j);
BuiltLattice load_lattice_file(const std::string& path);

// Accepts a JSON number or a string like "1/6" or "0.25"; stores the original
// text in *raw when it was a string.
double parse_probability(const nlohmann::json& value, std::string* raw);

}  // namespace cryst
