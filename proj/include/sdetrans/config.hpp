#pragma once

#include "sdetrans/identify.hpp"
#include "sdetrans/model.hpp"
#include "sdetrans/pde.hpp"
#include "sdetrans/simulate.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace sdetrans {

using nlohmann::json;

/// Sparse polynomial term: coefficient times prod x_i^exps[i].
struct TermSpec {
    std::vector<int> exps;
    double coeff = 0.0;
};

struct ModelConfig {
    int dim = 1;
    std::vector<std::vector<TermSpec>> drift;   // per coordinate
    std::vector<std::vector<TermSpec>> sigma1;  // per coordinate, x_i only
    std::vector<double> sigma2;
    double alpha = 1.0;
    double c = 1.0;
    std::string mode = "brownian";  // "brownian" | "levy"
    double small_jump_cutoff_ratio = 0.01;
};

struct SimulationConfig {
    int64_t samples = 1000;
    double dt = 0.01;
    Box domain;
    uint64_t seed = 1;
    std::string scheme = "grid";  // "grid" | "uniform-random"
};

struct DictionaryConfig {
    int max_degree = 3;
};

struct IdentificationConfig {
    std::vector<int> p2;  // declared degree of sigma1 per coordinate
    double svd_cutoff = 1e-10;
    double clamp_tolerance = 0.1;
    double display_threshold = 0.05;
};

struct PdeSectionConfig {
    Box domain;
    std::string target = "right";
    std::vector<int> cells;
    double solver_tol = 1e-10;
    int max_iterations = 4000;
    bool svg = false;
};

struct ExperimentConfig {
    ModelConfig model;
    SimulationConfig simulation;
    DictionaryConfig dictionary;
    IdentificationConfig identification;
    PdeSectionConfig pde;
    std::string output_dir = "out";

    void validate() const {
        if (!(simulation.dt > 0.0)) throw std::invalid_argument("config: dt must be positive");
        if (simulation.samples < 1) throw std::invalid_argument("config: samples must be >= 1");
        if (dictionary.max_degree < 2) throw std::invalid_argument("config: max_degree must be >= 2");
        if (model.mode != "brownian" && model.mode != "levy")
            throw std::invalid_argument("config: mode must be 'brownian' or 'levy'");
        if (model.mode == "levy")
            for (int p : identification.p2)
                if (2 * p > dictionary.max_degree)
                    throw std::invalid_argument("config: need 2*p2 <= max_degree");
        simulation.domain.validate();
        pde.domain.validate();
    }

    NoiseMode noise_mode() const {
        return model.mode == "levy" ? NoiseMode::Levy : NoiseMode::BrownianOnly;
    }

    /// True SDE model with coefficients placed in the dictionary basis.
    SdeModel build_true_model() const {
        auto basis = std::make_shared<MonomialBasis>(model.dim, dictionary.max_degree);
        auto place = [&](const std::vector<TermSpec>& terms) {
            auto p = PolyCoeffs::zero(*basis);
            for (const auto& t : terms) {
                size_t k = basis->find(t.exps);
                if (k == MonomialBasis::npos)
                    throw std::invalid_argument("config: model term exceeds dictionary degree");
                p.values(static_cast<Eigen::Index>(k)) += t.coeff;
            }
            return p;
        };
        SdeModel m;
        m.basis = basis;
        for (const auto& terms : model.drift) m.drift.push_back(place(terms));
        for (const auto& terms : model.sigma1) m.sigma1.push_back(place(terms));
        m.sigma2 = model.sigma2;
        if (model.mode == "levy")
            m.levy = LevySpec{model.alpha, model.c, simulation.seed,
                              model.small_jump_cutoff_ratio * model.c};
        m.validate();
        return m;
    }

    /// The true model expressed as an identification result, for tables
    /// and for solving the true-system PDEs through the same path.
    IdentifiedModel build_true_record() const {
        SdeModel m = build_true_model();
        auto coeffs = PdeCoefficients::from_sde_model(m);
        IdentifiedModel rec;
        rec.basis = m.basis;
        rec.drift = m.drift;
        rec.a_diag = coeffs.a_diag;
        for (double s : m.sigma2) rec.sigma2_sq.push_back(s * s);
        rec.alpha = model.alpha;
        rec.c = model.c;
        rec.mode = noise_mode();
        return rec;
    }
};

// ---- JSON binding ----

inline json to_json(const Box& b) { return json{{"lo", b.lo}, {"hi", b.hi}}; }
inline Box box_from_json(const json& j) {
    return Box{j.at("lo").get<std::vector<double>>(), j.at("hi").get<std::vector<double>>()};
}

inline json to_json(const std::vector<std::vector<TermSpec>>& coeffs) {
    json arr = json::array();
    for (const auto& terms : coeffs) {
        json t = json::array();
        for (const auto& term : terms) t.push_back(json{{"exps", term.exps}, {"coeff", term.coeff}});
        arr.push_back(t);
    }
    return arr;
}

inline std::vector<std::vector<TermSpec>> terms_from_json(const json& arr) {
    std::vector<std::vector<TermSpec>> out;
    for (const auto& terms : arr) {
        std::vector<TermSpec> list;
        for (const auto& t : terms)
            list.push_back(TermSpec{t.at("exps").get<std::vector<int>>(), t.at("coeff").get<double>()});
        out.push_back(std::move(list));
    }
    return out;
}

inline json render_config(const ExperimentConfig& cfg) {
    json j;
    j["model"] = {{"dim", cfg.model.dim},
                  {"drift", to_json(cfg.model.drift)},
                  {"sigma1", to_json(cfg.model.sigma1)},
                  {"sigma2", cfg.model.sigma2},
                  {"alpha", cfg.model.alpha},
                  {"c", cfg.model.c},
                  {"mode", cfg.model.mode},
                  {"small_jump_cutoff_ratio", cfg.model.small_jump_cutoff_ratio}};
    j["simulation"] = {{"samples", cfg.simulation.samples},
                       {"dt", cfg.simulation.dt},
                       {"domain", to_json(cfg.simulation.domain)},
                       {"seed", cfg.simulation.seed},
                       {"scheme", cfg.simulation.scheme}};
    j["dictionary"] = {{"max_degree", cfg.dictionary.max_degree}};
    j["identification"] = {{"p2", cfg.identification.p2},
                           {"svd_cutoff", cfg.identification.svd_cutoff},
                           {"clamp_tolerance", cfg.identification.clamp_tolerance},
                           {"display_threshold", cfg.identification.display_threshold}};
    j["pde"] = {{"domain", to_json(cfg.pde.domain)},
                {"target", cfg.pde.target},
                {"cells", cfg.pde.cells},
                {"solver_tol", cfg.pde.solver_tol},
                {"max_iterations", cfg.pde.max_iterations},
                {"svg", cfg.pde.svg}};
    j["output"] = {{"dir", cfg.output_dir}};
    return j;
}

inline ExperimentConfig parse_config(const json& j) {
    ExperimentConfig cfg;
    const json& m = j.at("model");
    cfg.model.dim = m.at("dim").get<int>();
    cfg.model.drift = terms_from_json(m.at("drift"));
    cfg.model.sigma1 = terms_from_json(m.at("sigma1"));
    cfg.model.sigma2 = m.at("sigma2").get<std::vector<double>>();
    cfg.model.alpha = m.value("alpha", 1.0);
    cfg.model.c = m.value("c", 1.0);
    cfg.model.mode = m.value("mode", std::string("brownian"));
    cfg.model.small_jump_cutoff_ratio = m.value("small_jump_cutoff_ratio", 0.01);
    const json& s = j.at("simulation");
    cfg.simulation.samples = s.at("samples").get<int64_t>();
    cfg.simulation.dt = s.at("dt").get<double>();
    cfg.simulation.domain = box_from_json(s.at("domain"));
    cfg.simulation.seed = s.value("seed", uint64_t{1});
    cfg.simulation.scheme = s.value("scheme", std::string("grid"));
    cfg.dictionary.max_degree = j.at("dictionary").at("max_degree").get<int>();
    const json& id = j.at("identification");
    cfg.identification.p2 = id.value("p2", std::vector<int>{});
    cfg.identification.svd_cutoff = id.value("svd_cutoff", 1e-10);
    cfg.identification.clamp_tolerance = id.value("clamp_tolerance", 0.1);
    cfg.identification.display_threshold = id.value("display_threshold", 0.05);
    const json& p = j.at("pde");
    cfg.pde.domain = box_from_json(p.at("domain"));
    cfg.pde.target = p.value("target", std::string("right"));
    cfg.pde.cells = p.at("cells").get<std::vector<int>>();
    cfg.pde.solver_tol = p.value("solver_tol", 1e-10);
    cfg.pde.max_iterations = p.value("max_iterations", 4000);
    cfg.pde.svg = p.value("svg", false);
    cfg.output_dir = j.at("output").value("dir", std::string("out"));
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    return parse_config(j);
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return render_config(a) == render_config(b);
}

}  // namespace sdetrans
