#include "raydiff/experiments/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "raydiff/common/errors.hpp"
#include "raydiff/common/interp.hpp"

namespace raydiff {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    return out;
}

struct Entry {
    std::string value;
    int line;
};

double to_double(const Entry& e) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + e.value + "'", e.line);
    }
}

int to_int(const Entry& e) {
    const double v = to_double(e);
    if (v != std::floor(v) || std::abs(v) > 2e9) throw ConfigError("expected an integer, got '" + e.value + "'", e.line);
    return static_cast<int>(v);
}

std::vector<double> to_list(const Entry& e) {
    std::vector<double> out;
    if (trim(e.value).empty()) return out;
    for (const auto& item : split(e.value, ',')) out.push_back(to_double({item, e.line}));
    return out;
}

std::vector<Vec> to_vectors(const Entry& e) {
    std::vector<Vec> out;
    for (const auto& item : split(e.value, '|')) {
        const auto v = to_list({item, e.line});
        if (v.empty()) throw ConfigError("empty vector in list", e.line);
        out.push_back(Eigen::Map<const Vec>(v.data(), v.size()));
    }
    return out;
}

using Section = std::map<std::string, Entry>;
using Handler = std::function<void(const Entry&)>;

void apply(const Section& sec, const std::map<std::string, Handler>& handlers, const std::string& name) {
    for (const auto& [key, entry] : sec) {
        auto it = handlers.find(key);
        if (it == handlers.end()) throw ConfigError("unknown key '" + key + "' in [" + name + "]", entry.line);
        it->second(entry);
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace

Config parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    static const std::set<std::string> known{"medium", "hamiltonian", "observable", "experiment"};
    std::map<std::string, Section> sections;
    std::string current;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto cut = raw.find_first_of("#;");
        const std::string s = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("malformed section header", line);
            current = trim(s.substr(1, s.size() - 2));
            if (!known.count(current)) throw ConfigError("unknown section [" + current + "]", line);
            sections[current];
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
        if (current.empty()) throw ConfigError("key outside of any section", line);
        const std::string key = trim(s.substr(0, eq));
        if (key.empty()) throw ConfigError("empty key", line);
        auto& sec = sections[current];
        if (sec.count(key)) throw ConfigError("duplicate key '" + key + "'", line);
        sec[key] = {trim(s.substr(eq + 1)), line};
    }

    Config c;
    auto& m = c.medium;
    apply(sections["medium"],
          {{"kind", [&](const Entry& e) { m.kind = e.value; }},
           {"dim", [&](const Entry& e) { m.dim = to_int(e); }},
           {"sigma", [&](const Entry& e) { m.sigma = to_double(e); }},
           {"ell", [&](const Entry& e) { m.ell = to_double(e); }},
           {"spectrum_file", [&](const Entry& e) { m.spectrum_file = resolve(base_dir, e.value); }},
           {"scales", [&](const Entry& e) { m.scales = to_list(e); }},
           {"envelope", [&](const Entry& e) { m.envelope = to_list(e); }},
           {"n_modes", [&](const Entry& e) { m.n_modes = to_int(e); }}},
          "medium");
    auto& h = c.hamiltonian;
    apply(sections["hamiltonian"],
          {{"kind", [&](const Entry& e) { h.kind = e.value; }},
           {"c0", [&](const Entry& e) { h.c0 = to_double(e); }},
           {"table_file", [&](const Entry& e) { h.table_file = resolve(base_dir, e.value); }}},
          "hamiltonian");
    auto& o = c.observable;
    apply(sections["observable"],
          {{"shape", [&](const Entry& e) { o.shape = e.value; }},
           {"center", [&](const Entry& e) { o.center = to_list(e); }},
           {"width", [&](const Entry& e) { o.width = to_double(e); }},
           {"amplitude", [&](const Entry& e) { o.amplitude = to_double(e); }},
           {"k_center", [&](const Entry& e) { o.k_center = to_double(e); }},
           {"k_halfwidth", [&](const Entry& e) { o.k_halfwidth = to_double(e); }},
           {"axis", [&](const Entry& e) { o.axis = to_list(e); }},
           {"c0", [&](const Entry& e) { o.c0 = to_double(e); }},
           {"c1", [&](const Entry& e) { o.c1 = to_double(e); }},
           {"c2", [&](const Entry& e) { o.c2 = to_double(e); }}},
          "observable");
    auto& x = c.experiment;
    apply(sections["experiment"],
          {{"type", [&](const Entry& e) { x.type = e.value; }},
           {"deltas", [&](const Entry& e) { x.deltas = to_list(e); }},
           {"gammas", [&](const Entry& e) { x.gammas = to_list(e); }},
           {"alpha", [&](const Entry& e) { x.alpha = to_double(e); }},
           {"times", [&](const Entry& e) { x.times = to_list(e); }},
           {"x_probes", [&](const Entry& e) { x.x_probes = to_vectors(e); }},
           {"k_probes", [&](const Entry& e) { x.k_probes = to_vectors(e); }},
           {"n_paths", [&](const Entry& e) { x.n_paths = to_int(e); }},
           {"n_realizations", [&](const Entry& e) { x.n_realizations = to_int(e); }},
           {"dt", [&](const Entry& e) { x.dt = to_double(e); }},
           {"M", [&](const Entry& e) { x.M = to_double(e); }},
           {"M_guard", [&](const Entry& e) { x.M_guard = to_double(e); }},
           {"d_tilde", [&](const Entry& e) { x.d_tilde = to_double(e); }},
           {"tol", [&](const Entry& e) { x.tol = to_double(e); }},
           {"T", [&](const Entry& e) { x.T = to_double(e); }},
           {"k0", [&](const Entry& e) { x.k0 = to_double(e); }},
           {"eps1", [&](const Entry& e) { x.eps.eps1 = to_double(e); }},
           {"eps2", [&](const Entry& e) { x.eps.eps2 = to_double(e); }},
           {"eps3", [&](const Entry& e) { x.eps.eps3 = to_double(e); }},
           {"eps4", [&](const Entry& e) { x.eps.eps4 = to_double(e); }},
           {"cell_method", [&](const Entry& e) { x.cell_method = e.value; }},
           {"L", [&](const Entry& e) { x.L = to_int(e); }},
           {"error_bar_se", [&](const Entry& e) { x.error_bar_se = to_double(e); }}},
          "experiment");

    auto line_of = [&](const std::string& sec, const std::string& key) {
        auto s = sections.find(sec);
        if (s == sections.end()) return 0;
        auto k = s->second.find(key);
        return k == s->second.end() ? 0 : k->second.line;
    };
    static const std::set<std::string> media{"gaussian", "tabulated", "anisotropic", "zero"};
    if (!media.count(m.kind)) throw ConfigError("unknown medium kind '" + m.kind + "'", line_of("medium", "kind"));
    static const std::set<std::string> hams{"quadratic", "acoustic", "tabulated"};
    if (!hams.count(h.kind))
        throw ConfigError("unknown hamiltonian kind '" + h.kind + "'", line_of("hamiltonian", "kind"));
    if (o.shape != "gaussian" && o.shape != "bump")
        throw ConfigError("unknown observable shape '" + o.shape + "'", line_of("observable", "shape"));
    static const std::set<std::string> types{"", "momentum", "spatial", "double", "acoustics", "stopping"};
    if (!types.count(x.type))
        throw ConfigError("unknown experiment type '" + x.type + "'", line_of("experiment", "type"));
    if (x.cell_method != "closed-form" && x.cell_method != "galerkin")
        throw ConfigError("cell_method must be closed-form or galerkin", line_of("experiment", "cell_method"));
    if (x.type == "stopping" || sections["experiment"].count("eps1") || sections["experiment"].count("eps2")) {
        try {
            StoppingMesh::make(x.eps, 0.05, 0.0);
        } catch (const ValidationError& e) {
            int l = line_of("experiment", "eps2");
            if (!l) l = line_of("experiment", "eps1");
            throw ConfigError(e.what(), l);
        }
    }
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string(), 0);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

std::shared_ptr<const CorrelationModel> build_correlation(const MediumConfig& m) {
    const Envelope env(m.envelope);
    if (m.kind == "zero") return std::make_shared<const CorrelationModel>(CorrelationModel::zero(m.dim));
    if (m.kind == "gaussian")
        return std::make_shared<const CorrelationModel>(CorrelationModel::gaussian(m.dim, m.sigma, m.ell, env));
    if (m.spectrum_file.empty()) throw ValidationError("tabulated media need spectrum_file");
    const auto [kappa, density] = read_two_column(m.spectrum_file);
    if (m.kind == "tabulated")
        return std::make_shared<const CorrelationModel>(
            CorrelationModel::tabulated(m.dim, m.sigma, kappa, density, env));
    if (m.scales.size() != 3) throw ValidationError("anisotropic media need three scales");
    const Vec sc = Eigen::Map<const Vec>(m.scales.data(), 3);
    return std::make_shared<const CorrelationModel>(CorrelationModel::anisotropic(m.sigma, kappa, density, sc, env));
}

BackgroundHamiltonian build_hamiltonian(const HamiltonianConfig& h) {
    if (h.kind == "quadratic") return BackgroundHamiltonian::quadratic();
    if (h.kind == "acoustic") return BackgroundHamiltonian::acoustic(h.c0);
    if (h.table_file.empty()) throw ValidationError("tabulated hamiltonian needs table_file");
    auto [k, v] = read_two_column(h.table_file);
    return BackgroundHamiltonian::tabulated(std::move(k), std::move(v));
}

ObservableSpec build_observable(const ObservableConfig& o, int dim) {
    ObservableSpec s;
    s.shape = o.shape == "bump" ? SpatialShape::Bump : SpatialShape::Gaussian;
    s.center = o.center.empty() ? Vec(Vec::Zero(dim)) : Vec(Eigen::Map<const Vec>(o.center.data(), o.center.size()));
    s.axis = o.axis.empty() ? Vec(Vec::Unit(dim, 0)) : Vec(Eigen::Map<const Vec>(o.axis.data(), o.axis.size()));
    if (s.center.size() != dim || s.axis.size() != dim)
        throw ValidationError("observable center/axis must have " + std::to_string(dim) + " components");
    s.width = o.width;
    s.amplitude = o.amplitude;
    s.k_center = o.k_center;
    s.k_halfwidth = o.k_halfwidth;
    s.c0 = o.c0;
    s.c1 = o.c1;
    s.c2 = o.c2;
    return s;
}

std::vector<EvalPoint> build_probes(const ExperimentConfig& e, int dim) {
    std::vector<Vec> xs = e.x_probes, ks = e.k_probes;
    if (xs.empty()) xs.push_back(Vec::Zero(dim));
    if (ks.empty()) ks.push_back(2.0 * Vec::Unit(dim, 0));
    std::vector<EvalPoint> out;
    for (double t : e.times)
        for (const Vec& x : xs)
            for (const Vec& k : ks) {
                if (x.size() != dim || k.size() != dim)
                    throw ValidationError("probe vectors must have " + std::to_string(dim) + " components");
                out.push_back({t, x, k});
            }
    return out;
}

}  // namespace raydiff
