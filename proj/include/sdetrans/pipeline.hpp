#pragma once

#include "sdetrans/config.hpp"
#include "sdetrans/edmd.hpp"
#include "sdetrans/identify.hpp"
#include "sdetrans/io.hpp"
#include "sdetrans/pde.hpp"
#include "sdetrans/simulate.hpp"

#include <filesystem>
#include <iostream>
#include <string>

namespace sdetrans {

/// Fixed artifact names inside the output directory; the stage verbs
/// compose through these files.
struct PipelinePaths {
    std::filesystem::path dir;

    std::string snapshots() const { return (dir / "snapshots.csv").string(); }
    std::string generator_bundle() const { return (dir / "generator_bundle.txt").string(); }
    std::string table() const { return (dir / "coefficient_table.csv").string(); }
    std::string model(const std::string& tag) const {
        return (dir / ("model_" + tag + ".json")).string();
    }
    std::string field(const std::string& kind, const std::string& tag, const std::string& suffix) const {
        return (dir / (kind + "_" + tag + "." + suffix)).string();
    }
    std::string compare_report() const { return (dir / "compare.json").string(); }
};

inline PipelinePaths make_paths(const ExperimentConfig& cfg) {
    PipelinePaths paths{cfg.output_dir};
    std::filesystem::create_directories(paths.dir);
    return paths;
}

inline InitScheme parse_scheme(const std::string& scheme) {
    if (scheme == "grid") return InitScheme::Grid;
    if (scheme == "uniform-random") return InitScheme::UniformRandom;
    throw std::invalid_argument("unknown init scheme: " + scheme);
}

inline void cmd_simulate(const ExperimentConfig& cfg, int threads = 1, std::ostream& log = std::cout) {
    auto paths = make_paths(cfg);
    SdeModel model = cfg.build_true_model();
    SnapshotSet snapshots =
        generate_snapshots(model, cfg.simulation.domain, cfg.simulation.samples, cfg.simulation.dt,
                           parse_scheme(cfg.simulation.scheme), cfg.simulation.seed, threads);
    io::write_snapshots(paths.snapshots(), snapshots);
    // moment summary of the one-step increments, per coordinate
    for (int i = 0; i < snapshots.dim(); ++i) {
        Vector inc = snapshots.Y.col(i) - snapshots.X.col(i);
        double mean = inc.mean();
        double var = (inc.array() - mean).square().sum() / static_cast<double>(inc.size() - 1);
        log << "simulate: coordinate " << (i + 1) << " increment mean " << mean << " variance "
            << var << "\n";
    }
    log << "simulate: wrote " << snapshots.count() << " pairs to " << paths.snapshots() << "\n";
}

inline GeneratorEstimate cmd_learn(const ExperimentConfig& cfg, int threads = 1,
                                   std::ostream& log = std::cout) {
    auto paths = make_paths(cfg);
    SnapshotSet snapshots = io::read_snapshots(paths.snapshots());
    auto basis = std::make_shared<MonomialBasis>(cfg.model.dim, cfg.dictionary.max_degree);
    if (snapshots.count() < static_cast<int64_t>(basis->size()))
        throw std::runtime_error("learn: under-determined problem, M = " +
                                 std::to_string(snapshots.count()) + " < N_K = " +
                                 std::to_string(basis->size()));
    GeneratorEstimate est =
        estimate_generator(snapshots, basis, cfg.identification.svd_cutoff, threads);
    io::write_generator_bundle(paths.generator_bundle(), est);
    log << "learn: wrote " << basis->size() << "x" << basis->size() << " generator bundle\n";
    return est;
}

inline IdentifiedModel cmd_identify(const ExperimentConfig& cfg, std::ostream& log = std::cout) {
    auto paths = make_paths(cfg);
    GeneratorEstimate est = io::read_generator_bundle(paths.generator_bundle());
    const auto& basis = *est.basis;
    if (basis.dim() != cfg.model.dim || basis.max_degree() != cfg.dictionary.max_degree)
        throw std::runtime_error("identify: bundle dictionary disagrees with config");

    auto drift = identify_drift(est.L, basis);
    SeparationOptions opts;
    opts.clamp_tolerance = cfg.identification.clamp_tolerance;
    auto sep = separate_diffusions(est.L, basis, drift, cfg.model.alpha, cfg.model.c,
                                   cfg.noise_mode(), cfg.identification.p2, opts);
    for (const auto& w : sep.diagnostics.warnings) log << "identify: warning: " << w << "\n";
    for (size_t i = 0; i < sep.diagnostics.eta_residual.size(); ++i)
        log << "identify: coordinate " << (i + 1) << " eta residual "
            << sep.diagnostics.eta_residual[i] << ", cross-coordinate leakage "
            << sep.diagnostics.cross_coordinate_leakage[i] << "\n";

    IdentifiedModel learned =
        assemble_model(est.basis, std::move(drift), std::move(sep.a_diag),
                       std::move(sep.sigma2_sq), cfg.model.alpha, cfg.model.c, cfg.noise_mode());
    auto mins = min_a_diag_on_grid(learned, cfg.simulation.domain);
    for (size_t i = 0; i < mins.size(); ++i)
        if (mins[i] < -1e-6)
            log << "identify: warning: a_" << (i + 1) << (i + 1) << " dips to " << mins[i]
                << " on the data domain\n";

    IdentifiedModel truth = cfg.build_true_record();
    io::write_coefficient_table(paths.table(), learned, truth, cfg.identification.display_threshold);
    io::write_model_record(paths.model("learned"), learned);
    io::write_model_record(paths.model("true"), truth);
    log << "identify: wrote " << paths.table() << "\n";
    return learned;
}

inline TargetRegion parse_target(const std::string& target) {
    if (target == "right") return TargetRegion::RightExterior;
    if (target == "left") return TargetRegion::LeftExterior;
    throw std::invalid_argument("unknown escape target: " + target);
}

/// Solve MET and EP for the model record with the given tag ("true" or
/// "learned") and write the field files.
inline void cmd_solve(const ExperimentConfig& cfg, const std::string& tag,
                      std::ostream& log = std::cout) {
    auto paths = make_paths(cfg);
    IdentifiedModel model = io::read_model_record(paths.model(tag));
    auto coeffs = PdeCoefficients::from_identified(model);
    PdeOptions opts{cfg.pde.solver_tol, cfg.pde.max_iterations};

    ScalarField met = solve_met(coeffs, cfg.pde.domain, cfg.pde.cells, opts);
    io::write_field(paths.field("met", tag, "csv"), met);
    ScalarField ep = solve_ep(coeffs, cfg.pde.domain, cfg.pde.cells, parse_target(cfg.pde.target), opts);
    io::write_field(paths.field("ep", tag, "csv"), ep);
    if (cfg.pde.svg) {
        io::write_field_svg(paths.field("met", tag, "svg"), met, "mean exit time (" + tag + ")");
        io::write_field_svg(paths.field("ep", tag, "svg"), ep, "escape probability (" + tag + ")");
    }
    log << "solve: wrote MET and EP fields for the " << tag << " system\n";
}

inline json cmd_compare(const ExperimentConfig& cfg, std::ostream& log = std::cout) {
    auto paths = make_paths(cfg);
    auto met = field_error(io::read_field(paths.field("met", "true", "csv")),
                           io::read_field(paths.field("met", "learned", "csv")));
    auto ep = field_error(io::read_field(paths.field("ep", "true", "csv")),
                          io::read_field(paths.field("ep", "learned", "csv")));
    json report = {{"met", {{"mean_abs", met.mean_abs}, {"max_abs", met.max_abs}}},
                   {"ep", {{"mean_abs", ep.mean_abs}, {"max_abs", ep.max_abs}}}};
    io::open_out(paths.compare_report()) << report.dump(2) << '\n';
    log << "compare: MET mean error " << met.mean_abs << ", EP mean error " << ep.mean_abs << "\n";
    return report;
}

inline json cmd_pipeline(const ExperimentConfig& cfg, int threads = 1,
                         std::ostream& log = std::cout) {
    cmd_simulate(cfg, threads, log);
    cmd_learn(cfg, threads, log);
    cmd_identify(cfg, log);
    cmd_solve(cfg, "true", log);
    cmd_solve(cfg, "learned", log);
    return cmd_compare(cfg, log);
}

}  // namespace sdetrans
