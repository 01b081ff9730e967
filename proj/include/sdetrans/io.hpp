#pragma once

#include "sdetrans/edmd.hpp"
#include "sdetrans/identify.hpp"
#include "sdetrans/pde.hpp"
#include "sdetrans/simulate.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdetrans::io {

using nlohmann::json;

/// Shortest round-trippable decimal form; keeps outputs byte-stable.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return in;
}

// ---- snapshots: header line (d, M, dt), then rows x_1..x_d, y_1..y_d ----

inline void write_snapshots(const std::string& path, const SnapshotSet& s) {
    auto out = open_out(path);
    out << s.dim() << ',' << s.count() << ',' << fmt(s.dt) << '\n';
    for (int64_t m = 0; m < s.count(); ++m) {
        for (int i = 0; i < s.dim(); ++i) out << (i ? "," : "") << fmt(s.X(m, i));
        for (int i = 0; i < s.dim(); ++i) out << ',' << fmt(s.Y(m, i));
        out << '\n';
    }
}

inline SnapshotSet read_snapshots(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("snapshot file empty: " + path);
    SnapshotSet s;
    int d = 0;
    int64_t M = 0;
    {
        std::istringstream hdr(line);
        char comma;
        if (!(hdr >> d >> comma >> M >> comma >> s.dt))
            throw std::runtime_error("bad snapshot header in " + path);
    }
    s.X.resize(M, d);
    s.Y.resize(M, d);
    for (int64_t m = 0; m < M; ++m) {
        if (!std::getline(in, line)) throw std::runtime_error("truncated snapshot file: " + path);
        std::istringstream row(line);
        std::string cell;
        for (int i = 0; i < 2 * d; ++i) {
            if (!std::getline(row, cell, ','))
                throw std::runtime_error("short snapshot row in " + path);
            double v = std::stod(cell);
            if (i < d)
                s.X(m, i) = v;
            else
                s.Y(m, i - d) = v;
        }
    }
    return s;
}

// ---- generator bundle: dimensions, dt, cutoff, then row-major G A K L ----

inline void write_generator_bundle(const std::string& path, const GeneratorEstimate& est) {
    auto out = open_out(path);
    const auto n = static_cast<Eigen::Index>(est.basis->size());
    out << est.basis->dim() << ' ' << est.basis->max_degree() << ' ' << n << ' ' << fmt(est.dt)
        << ' ' << fmt(est.svd_cutoff) << '\n';
    for (const Matrix* m : {&est.G, &est.A, &est.K, &est.L})
        for (Eigen::Index r = 0; r < n; ++r) {
            for (Eigen::Index c = 0; c < n; ++c) out << (c ? " " : "") << fmt((*m)(r, c));
            out << '\n';
        }
}

inline GeneratorEstimate read_generator_bundle(const std::string& path) {
    auto in = open_in(path);
    int dim = 0, max_degree = 0;
    Eigen::Index n = 0;
    GeneratorEstimate est;
    if (!(in >> dim >> max_degree >> n >> est.dt >> est.svd_cutoff))
        throw std::runtime_error("bad generator bundle header: " + path);
    est.basis = std::make_shared<MonomialBasis>(dim, max_degree);
    if (static_cast<Eigen::Index>(est.basis->size()) != n)
        throw std::runtime_error("generator bundle size mismatch: " + path);
    for (Matrix* m : {&est.G, &est.A, &est.K, &est.L}) {
        m->resize(n, n);
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < n; ++c)
                if (!(in >> (*m)(r, c))) throw std::runtime_error("truncated bundle: " + path);
    }
    return est;
}

// ---- identified-model record (machine readable) ----

inline json model_record_json(const IdentifiedModel& model) {
    json j;
    j["dim"] = model.basis->dim();
    j["max_degree"] = model.basis->max_degree();
    j["mode"] = model.mode == NoiseMode::Levy ? "levy" : "brownian";
    j["alpha"] = model.alpha;
    j["c"] = model.c;
    auto coeff_list = [](const std::vector<PolyCoeffs>& list) {
        json arr = json::array();
        for (const auto& p : list) {
            json v = json::array();
            for (Eigen::Index k = 0; k < p.values.size(); ++k) v.push_back(p.values(k));
            arr.push_back(v);
        }
        return arr;
    };
    j["drift"] = coeff_list(model.drift);
    j["a_diag"] = coeff_list(model.a_diag);
    j["sigma2_sq"] = model.sigma2_sq;
    return j;
}

inline void write_model_record(const std::string& path, const IdentifiedModel& model) {
    auto out = open_out(path);
    out << model_record_json(model).dump(2) << '\n';
}

inline IdentifiedModel read_model_record(const std::string& path) {
    auto in = open_in(path);
    json j = json::parse(in);
    IdentifiedModel model;
    model.basis = std::make_shared<MonomialBasis>(j.at("dim").get<int>(), j.at("max_degree").get<int>());
    model.mode = j.at("mode").get<std::string>() == "levy" ? NoiseMode::Levy : NoiseMode::BrownianOnly;
    model.alpha = j.at("alpha").get<double>();
    model.c = j.at("c").get<double>();
    auto coeff_list = [&](const json& arr) {
        std::vector<PolyCoeffs> list;
        for (const auto& v : arr) {
            Vector values(static_cast<Eigen::Index>(v.size()));
            for (size_t k = 0; k < v.size(); ++k)
                values(static_cast<Eigen::Index>(k)) = v[k].get<double>();
            list.emplace_back(*model.basis, std::move(values));
        }
        return list;
    };
    model.drift = coeff_list(j.at("drift"));
    model.a_diag = coeff_list(j.at("a_diag"));
    model.sigma2_sq = j.at("sigma2_sq").get<std::vector<double>>();
    return model;
}

// ---- human-readable coefficient tables ----

inline std::string monomial_label(const MonomialBasis& basis, size_t k) {
    static const char* names = "xyzw";
    const auto& exps = basis.exponents(k);
    std::string label;
    for (int i = 0; i < basis.dim(); ++i) {
        int p = exps[static_cast<size_t>(i)];
        if (p == 0) continue;
        label += basis.dim() <= 4 ? std::string(1, names[i]) : ("x" + std::to_string(i + 1));
        if (p > 1) label += "^" + std::to_string(p);
    }
    return label.empty() ? "1" : label;
}

/// True-vs-learned tables, one block per coefficient function. Values with
/// magnitude below the display threshold render as 0; raw values live in
/// the machine-readable record.
inline void write_coefficient_table(const std::string& path, const IdentifiedModel& learned,
                                    const IdentifiedModel& truth, double display_threshold) {
    auto out = open_out(path);
    const auto& basis = *learned.basis;
    auto display = [&](double v) { return std::abs(v) < display_threshold ? std::string("0") : fmt(v); };
    auto block = [&](const std::string& title, const Vector& true_v, const Vector& learned_v) {
        out << "## " << title << "\nbasis,true,learning\n";
        for (size_t k = 0; k < basis.size(); ++k) {
            out << monomial_label(basis, k) << ',' << display(true_v(static_cast<Eigen::Index>(k)))
                << ',' << display(learned_v(static_cast<Eigen::Index>(k))) << '\n';
        }
        out << '\n';
    };
    for (int i = 0; i < basis.dim(); ++i) {
        const auto ui = static_cast<size_t>(i);
        block("drift b_" + std::to_string(i + 1), truth.drift[ui].values, learned.drift[ui].values);
    }
    for (int i = 0; i < basis.dim(); ++i) {
        const auto ui = static_cast<size_t>(i);
        block("diffusion sigma1_" + std::to_string(i + 1) + "^2", truth.a_diag[ui].values,
              learned.a_diag[ui].values);
    }
    if (learned.mode == NoiseMode::Levy) {
        out << "## levy amplitude sigma2^2\ncoordinate,true,learning\n";
        for (size_t i = 0; i < learned.sigma2_sq.size(); ++i)
            out << (i + 1) << ',' << fmt(truth.sigma2_sq[i]) << ',' << fmt(learned.sigma2_sq[i])
                << '\n';
    }
}

// ---- scalar fields: geometry comment line, then node coordinates + value ----

inline void write_field(const std::string& path, const ScalarField& field) {
    auto out = open_out(path);
    const auto& g = field.geom;
    out << "# dim=" << g.dim();
    auto list = [&](const char* name, auto&& values) {
        out << ' ' << name << '=';
        for (size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
    };
    list("lo", g.domain.lo);
    list("hi", g.domain.hi);
    list("cells", g.cells);
    list("ext", g.ext);
    out << '\n';
    for (int i = 0; i < g.dim(); ++i) out << 'x' << (i + 1) << ',';
    out << "value\n";
    for (int64_t n = 0; n < g.total; ++n) {
        auto x = g.node(g.unflatten(n));
        for (double xi : x) out << fmt(xi) << ',';
        out << fmt(field.values[static_cast<size_t>(n)]) << '\n';
    }
}

inline ScalarField read_field(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# dim=", 0) != 0)
        throw std::runtime_error("bad field header: " + path);
    auto get = [&](const std::string& key) {
        auto pos = line.find(" " + key + "=");
        if (pos == std::string::npos) throw std::runtime_error("field header missing " + key);
        pos += key.size() + 2;
        auto end = line.find(' ', pos);
        return line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    };
    auto split_d = [](const std::string& s) {
        std::vector<double> out;
        std::istringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
        return out;
    };
    auto split_i = [&](const std::string& s) {
        std::vector<int> out;
        for (double v : split_d(s)) out.push_back(static_cast<int>(v));
        return out;
    };
    Box domain{split_d(get("lo")), split_d(get("hi"))};
    std::vector<int> cells = split_i(get("cells"));
    std::vector<int> ext = split_i(get("ext"));
    std::vector<double> band(domain.lo.size(), 0.0);
    GridGeometry geom(domain, cells, band);
    geom.ext = ext;  // recompute layout with the stored exterior widths
    geom.stride.assign(static_cast<size_t>(geom.dim()), 1);
    geom.total = 1;
    for (int i = geom.dim() - 1; i >= 0; --i) {
        geom.stride[static_cast<size_t>(i)] = geom.total;
        geom.total *= geom.axis_nodes(i);
    }
    ScalarField field{geom, std::vector<double>(static_cast<size_t>(geom.total), 0.0)};
    std::getline(in, line);  // column header
    for (int64_t n = 0; n < geom.total; ++n) {
        if (!std::getline(in, line)) throw std::runtime_error("truncated field file: " + path);
        auto cells_v = split_d(line);
        field.values[static_cast<size_t>(n)] = cells_v.back();
    }
    return field;
}

// ---- minimal SVG plots (1-D curves, 2-D heatmaps) ----

inline void write_field_svg(const std::string& path, const ScalarField& field,
                            const std::string& title) {
    auto out = open_out(path);
    const auto& g = field.geom;
    const int W = 640, H = 480, pad = 50;
    if (g.dim() == 1) {
        double vmin = 0.0, vmax = 1e-12;
        for (double v : field.values) {
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
        const double xmin = g.domain.lo[0] - g.ext[0] * g.h[0];
        const double xmax = g.domain.hi[0] + g.ext[0] * g.h[0];
        out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n"
            << "<rect width='100%' height='100%' fill='white'/>\n"
            << "<text x='" << W / 2 << "' y='20' text-anchor='middle'>" << title << "</text>\n"
            << "<polyline fill='none' stroke='steelblue' stroke-width='1.5' points='";
        for (int64_t n = 0; n < g.total; ++n) {
            double x = g.node(g.unflatten(n))[0];
            double v = field.values[static_cast<size_t>(n)];
            double px = pad + (x - xmin) / (xmax - xmin) * (W - 2 * pad);
            double py = H - pad - (v - vmin) / (vmax - vmin) * (H - 2 * pad);
            out << fmt(px) << ',' << fmt(py) << ' ';
        }
        out << "'/>\n</svg>\n";
        return;
    }
    // heatmap over the extended grid
    double vmin = field.values[0], vmax = field.values[0];
    for (double v : field.values) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    const double span = std::max(vmax - vmin, 1e-300);
    const auto nx = g.axis_nodes(0), ny = g.axis_nodes(1);
    const double cw = static_cast<double>(W - 2 * pad) / static_cast<double>(nx);
    const double ch = static_cast<double>(H - 2 * pad) / static_cast<double>(ny);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n"
        << "<rect width='100%' height='100%' fill='white'/>\n"
        << "<text x='" << W / 2 << "' y='20' text-anchor='middle'>" << title << "</text>\n";
    for (int64_t n = 0; n < g.total; ++n) {
        auto j = g.unflatten(n);
        double t = (field.values[static_cast<size_t>(n)] - vmin) / span;
        int r = static_cast<int>(255 * t);
        int b = static_cast<int>(255 * (1.0 - t));
        double px = pad + (j[0] + g.ext[0]) * cw;
        double py = H - pad - (j[1] + g.ext[1] + 1) * ch;
        out << "<rect x='" << fmt(px) << "' y='" << fmt(py) << "' width='" << fmt(cw + 0.5)
            << "' height='" << fmt(ch + 0.5) << "' fill='rgb(" << r << ",0," << b << ")'/>\n";
    }
    out << "</svg>\n";
}

}  // namespace sdetrans::io
