#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "crystalwalk/montecarlo.hpp"
#include "crystalwalk/report.hpp"
#include "crystalwalk/transition.hpp"

namespace {

struct InputOptions {
    std::string builtin_name;
    std::string input_path;
    double bouquet_p = 0.5;
};

void add_input_options(CLI::App* cmd, InputOptions* opts) {
    auto* builtin_opt =
        cmd->add_option("--builtin", opts->builtin_name, "builtin lattice name");
    auto* input_opt =
        cmd->add_option("--input", opts->input_path, "lattice description JSON file");
    cmd->add_option("--p", opts->bouquet_p, "forward probability for --builtin bouquet1");
    builtin_opt->excludes(input_opt);
}

cryst::BuiltLattice load_input(const InputOptions& opts) {
    if (!opts.builtin_name.empty()) return cryst::builtin(opts.builtin_name, opts.bouquet_p);
    if (!opts.input_path.empty()) return cryst::load_lattice_file(opts.input_path);
    throw cryst::ValidationError("one of --builtin or --input is required");
}

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw cryst::ValidationError("cannot write '" + out_path + "'");
    out << text;
}

int run_analyze(const InputOptions& input, const std::string& format,
                const std::string& out_path) {
    cryst::AnalysisReport report = cryst::analyze(load_input(input));
    if (format == "json") {
        write_output(cryst::report_to_json(report).dump(2) + "\n", out_path);
    } else if (format == "text") {
        write_output(cryst::report_to_text(report), out_path);
    } else {
        throw cryst::ValidationError("format must be json or text");
    }
    return 0;
}

int run_simulate(const InputOptions& input, const std::string& kernel_name,
                 const cryst::WalkConfig& base_config, const std::string& csv_path) {
    cryst::BuiltLattice built = load_input(input);
    cryst::WalkConfig config = base_config;
    config.validate();

    cryst::StationaryMeasure m = cryst::stationary_measure(built.lattice.quotient, built.kernel);
    cryst::Realization phi =
        cryst::modified_harmonic_realization(built.lattice, built.kernel, m, 0);

    cryst::TransitionKernel kernel = built.kernel;
    cryst::Realization realization = phi;
    Eigen::VectorXd centering = Eigen::VectorXd::Zero(built.lattice.rank);
    cryst::AlbaneseMetric frame;
    std::string kernel_label = kernel_name;

    if (kernel_name == "original") {
        config.kernel_choice = cryst::KernelChoice::Original;
        centering = cryst::asymptotic_direction(built.lattice, built.kernel, m);
        frame = cryst::albanese(built.lattice, built.kernel, m, phi);
    } else if (kernel_name == "changed") {
        config.kernel_choice = cryst::KernelChoice::Changed;
        cryst::ChangedKernel changed =
            cryst::change_kernel(built.lattice, built.kernel, m, phi);
        kernel = changed.prob;
        frame = changed.albanese_changed;
    } else if (kernel_name == "interpolated") {
        config.kernel_choice = cryst::KernelChoice::Interpolated;
        kernel = cryst::interpolation_family(built.lattice.quotient, built.kernel, m,
                                             config.epsilon);
        cryst::StationaryMeasure m_eps =
            cryst::stationary_measure(built.lattice.quotient, kernel);
        realization = cryst::modified_harmonic_realization(built.lattice, kernel, m_eps, 0);
        cryst::TransitionKernel sym =
            cryst::interpolation_family(built.lattice.quotient, built.kernel, m, 0.0);
        cryst::StationaryMeasure m0 = cryst::stationary_measure(built.lattice.quotient, sym);
        cryst::Realization phi0 =
            cryst::modified_harmonic_realization(built.lattice, sym, m0, 0);
        frame = cryst::albanese(built.lattice, sym, m0, phi0);
    } else {
        throw cryst::ValidationError("kernel must be original, changed or interpolated");
    }

    std::vector<Eigen::VectorXd> endpoints;
    cryst::CltStats stats = cryst::simulate_endpoint_stats(
        built.lattice, kernel, realization, frame.to_orthonormal, centering, config,
        csv_path.empty() ? nullptr : &endpoints);

    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) throw cryst::ValidationError("cannot write '" + csv_path + "'");
        csv << "walker";
        for (int k = 0; k < built.lattice.rank; ++k) csv << ",coord" << k + 1;
        csv << "\n";
        csv.precision(17);
        for (std::size_t w = 0; w < endpoints.size(); ++w) {
            csv << w;
            for (int k = 0; k < built.lattice.rank; ++k) csv << "," << endpoints[w](k);
            csv << "\n";
        }
    }

    nlohmann::json j = cryst::clt_stats_to_json(stats);
    j["kernel"] = kernel_label;
    j["walkers"] = config.walkers;
    j["steps"] = config.steps;
    j["seed"] = config.seed;
    if (kernel_name == "interpolated") j["epsilon"] = config.epsilon;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_compare(const InputOptions& input, long long steps, const std::string& normalize) {
    cryst::BuiltLattice built = load_input(input);
    cryst::StationaryMeasure m = cryst::stationary_measure(built.lattice.quotient, built.kernel);
    cryst::Realization phi =
        cryst::modified_harmonic_realization(built.lattice, built.kernel, m, 0);
    cryst::ChangedKernel changed = cryst::change_kernel(built.lattice, built.kernel, m, phi);

    bool girsanov = normalize == "girsanov";
    if (!girsanov && normalize != "mp")
        throw cryst::ValidationError("--normalize must be mp or girsanov");
    if (girsanov && built.lattice.quotient.vertex_count() != 1)
        throw cryst::ValidationError("--normalize girsanov requires a one-vertex quotient");

    cryst::LatticeState start{0, std::vector<long long>(built.lattice.rank, 0)};
    std::printf("n,min_ratio,max_ratio,support_size\n");
    for (long long n = 1; n <= steps; ++n) {
        if (girsanov) {
            cryst::CellDistribution tilted = cryst::n_step(built.lattice, changed.prob, start, n);
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (const auto& [key, mass] : tilted.mass) {
                cryst::LatticeState y{key.vertex, key.cell};
                double rhs =
                    cryst::bouquet_explicit(built.lattice, built.kernel,
                                            changed.minimizers.vertex[0], phi, start, y, n);
                double ratio = mass / rhs;
                lo = std::min(lo, ratio);
                hi = std::max(hi, ratio);
            }
            std::printf("%lld,%.17g,%.17g,%zu\n", n, lo, hi, tilted.mass.size());
        } else {
            cryst::RatioBand band =
                cryst::measure_change_ratio(built.lattice, built.kernel, changed, start, n);
            std::printf("%lld,%.17g,%.17g,%zu\n", n, band.min_ratio, band.max_ratio,
                        band.support_size);
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"non-symmetric random walks on crystal lattices"};
    app.require_subcommand(1);

    InputOptions analyze_input;
    std::string format = "json";
    std::string out_path;
    CLI::App* analyze_cmd =
        app.add_subcommand("analyze", "full analysis report for a lattice");
    add_input_options(analyze_cmd, &analyze_input);
    analyze_cmd->add_option("--format", format, "json or text");
    analyze_cmd->add_option("--out", out_path, "write the report to a file");

    InputOptions simulate_input;
    std::string kernel_name = "original";
    std::string csv_path;
    cryst::WalkConfig config;
    config.walkers = 10000;
    config.steps = 10000;
    config.seed = 0;
    CLI::App* simulate_cmd =
        app.add_subcommand("simulate", "seeded endpoint statistics of the scaled walk");
    add_input_options(simulate_cmd, &simulate_input);
    simulate_cmd->add_option("--kernel", kernel_name, "original, changed or interpolated");
    simulate_cmd->add_option("--walkers", config.walkers, "number of walkers");
    simulate_cmd->add_option("--steps", config.steps, "steps per walker");
    simulate_cmd->add_option("--seed", config.seed, "master seed");
    simulate_cmd->add_option("--epsilon", config.epsilon, "epsilon for --kernel interpolated");
    simulate_cmd->add_option("--threads", config.threads, "worker threads (0 = auto)");
    simulate_cmd->add_option("--csv", csv_path, "write per-walker endpoint coordinates");

    InputOptions compare_input;
    long long compare_steps = 12;
    std::string normalize = "mp";
    CLI::App* compare_cmd = app.add_subcommand(
        "compare", "n-step transition ratio table (changed vs original kernel)");
    add_input_options(compare_cmd, &compare_input);
    compare_cmd->add_option("--steps", compare_steps, "largest n");
    compare_cmd->add_option("--normalize", normalize,
                            "mp (exp(n M_p)) or girsanov (exact bouquet formula)");

    try {
        app.parse(argc, argv);
        if (analyze_cmd->parsed()) return run_analyze(analyze_input, format, out_path);
        if (simulate_cmd->parsed())
            return run_simulate(simulate_input, kernel_name, config, csv_path);
        if (compare_cmd->parsed())
            return run_compare(compare_input, compare_steps, normalize);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const cryst::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cryst::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
