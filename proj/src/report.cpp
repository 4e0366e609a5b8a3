#include "crystalwalk/report.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cryst {

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(row);
    }
    return out;
}

nlohmann::json dart_map_to_json(const LatticeSpec& spec, const std::vector<double>& values) {
    nlohmann::json out = nlohmann::json::object();
    for (int dart = 0; dart < static_cast<int>(values.size()); ++dart)
        out[dart_name(spec, dart)] = values[dart];
    return out;
}

nlohmann::json albanese_to_json(const AlbaneseMetric& alb) {
    return {{"gram", matrix_to_json(alb.gram)},
            {"metric", matrix_to_json(alb.metric)},
            {"to_orthonormal", matrix_to_json(alb.to_orthonormal)}};
}

nlohmann::json direction_to_json(const AnalysisReport& report, const DirectionReport& dir) {
    nlohmann::json coords = nlohmann::json::object();
    for (std::size_t i = 0; i < report.basis.cotree_darts.size(); ++i)
        coords[dart_name(report.input.spec, report.basis.cotree_darts[i])] =
            dir.homology_coords[i];
    return {{"edge_flow", dart_map_to_json(report.input.spec, dir.edge_flow)},
            {"homology_coords", coords},
            {"asymptotic", vector_to_json(dir.asymptotic)}};
}

void write_number(std::ostream& os, double v) {
    std::ostringstream tmp;
    tmp.precision(17);
    tmp << v;
    os << tmp.str();
}

void write_json_as_text(std::ostream& os, const nlohmann::json& j, int indent) {
    std::string pad(2 * indent, ' ');
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            os << pad << it.key() << ":";
            if (it.value().is_object() || it.value().is_array()) {
                os << "\n";
                write_json_as_text(os, it.value(), indent + 1);
            } else if (it.value().is_number_float()) {
                os << " ";
                write_number(os, it.value().get<double>());
                os << "\n";
            } else {
                os << " " << it.value().dump() << "\n";
            }
        }
    } else if (j.is_array()) {
        os << pad << "[";
        bool first = true;
        for (const auto& item : j) {
            if (!first) os << ", ";
            first = false;
            if (item.is_number_float()) {
                write_number(os, item.get<double>());
            } else if (item.is_array() || item.is_object()) {
                std::ostringstream nested;
                write_json_as_text(nested, item, 0);
                std::string s = nested.str();
                while (!s.empty() && s.back() == '\n') s.pop_back();
                os << s;
            } else {
                os << item.dump();
            }
        }
        os << "]\n";
    }
}

}  // namespace

AnalysisReport analyze(const BuiltLattice& input) {
    AnalysisReport report;
    report.input = input;
    report.m = stationary_measure(input.lattice.quotient, input.kernel);
    report.basis = cycle_basis(input.lattice);
    report.direction =
        homological_direction(input.lattice, input.kernel, report.m, report.basis);
    report.realization =
        modified_harmonic_realization(input.lattice, input.kernel, report.m, 0);
    report.albanese0 = albanese(input.lattice, input.kernel, report.m, report.realization);
    report.changed = change_kernel(input.lattice, input.kernel, report.m, report.realization);
    report.changed_direction = homological_direction(input.lattice, report.changed.prob,
                                                     report.changed.stationary, report.basis);
    report.m_p = report.changed.m_p;
    report.exp_m_p = std::exp(report.m_p);
    return report;
}

nlohmann::json report_to_json(const AnalysisReport& report) {
    const LatticeSpec& spec = report.input.spec;
    nlohmann::json j;
    j["schema"] = 1;

    nlohmann::json edges = nlohmann::json::array();
    for (const EdgeSpec& e : spec.edges) {
        nlohmann::json je = {{"id", e.id},     {"from", e.from},    {"to", e.to},
                             {"voltage", e.voltage}, {"p", e.p},    {"p_rev", e.p_rev}};
        if (!e.p_raw.empty()) je["p_raw"] = e.p_raw;
        if (!e.p_rev_raw.empty()) je["p_rev_raw"] = e.p_rev_raw;
        edges.push_back(je);
    }
    j["lattice"] = {{"rank", spec.rank},
                    {"vertices", spec.vertices},
                    {"dart_count", report.input.lattice.quotient.dart_count()},
                    {"edges", edges}};

    nlohmann::json stationary = nlohmann::json::object();
    for (int x = 0; x < report.input.lattice.quotient.vertex_count(); ++x)
        stationary[spec.vertices[x]] = report.m.weight(x);
    j["stationary"] = stationary;

    j["direction"] = direction_to_json(report, report.direction);

    nlohmann::json positions = nlohmann::json::object();
    for (int x = 0; x < report.input.lattice.quotient.vertex_count(); ++x)
        positions[spec.vertices[x]] = vector_to_json(report.realization.position.row(x));
    nlohmann::json increments = nlohmann::json::object();
    for (int dart = 0; dart < report.input.lattice.quotient.dart_count(); ++dart)
        increments[dart_name(spec, dart)] = vector_to_json(report.realization.increment.row(dart));
    j["realization"] = {{"base", spec.vertices[report.realization.base]},
                        {"position", positions},
                        {"increment", increments}};

    j["albanese"] = albanese_to_json(report.albanese0);

    nlohmann::json minimizers = nlohmann::json::object();
    for (int x = 0; x < report.input.lattice.quotient.vertex_count(); ++x) {
        const VertexMinimum& vm = report.changed.minimizers.vertex[x];
        minimizers[spec.vertices[x]] = {{"lambda", vector_to_json(vm.lambda)},
                                        {"f_min", vm.f_min},
                                        {"iterations", vm.iterations},
                                        {"gradient_norm", vm.gradient_norm}};
    }
    j["minimizers"] = minimizers;

    nlohmann::json changed_stationary = nlohmann::json::object();
    for (int x = 0; x < report.input.lattice.quotient.vertex_count(); ++x)
        changed_stationary[spec.vertices[x]] = report.changed.stationary.weight(x);
    j["changed"] = {{"prob", dart_map_to_json(spec, report.changed.prob.prob)},
                    {"stationary", changed_stationary},
                    {"direction", direction_to_json(report, report.changed_direction)},
                    {"albanese", albanese_to_json(report.changed.albanese_changed)}};

    j["m_p"] = report.m_p;
    j["exp_m_p"] = report.exp_m_p;
    return j;
}

std::string report_to_text(const AnalysisReport& report) {
    std::ostringstream os;
    write_json_as_text(os, report_to_json(report), 0);
    return os.str();
}

nlohmann::json clt_stats_to_json(const CltStats& stats) {
    return {{"schema", 1},
            {"mean", vector_to_json(stats.empirical_mean)},
            {"cov", matrix_to_json(stats.empirical_cov)},
            {"stderr_mean", vector_to_json(stats.stderr_mean)},
            {"sample_count", stats.sample_count}};
}

}  // namespace cryst
