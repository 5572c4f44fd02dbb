#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "raydiff/diagnostics/stopping.hpp"
#include "raydiff/hamiltonian/background.hpp"
#include "raydiff/medium/correlation.hpp"
#include "raydiff/raytrace/observable.hpp"
#include "raydiff/raytrace/raytrace.hpp"

namespace raydiff {

struct MediumConfig {
    std::string kind = "gaussian";  // gaussian | tabulated | anisotropic | zero
    int dim = 3;
    double sigma = 1.0;
    double ell = 1.0;
    std::filesystem::path spectrum_file;  // two columns: kappa, S(kappa)
    std::vector<double> scales;           // anisotropic axis scales
    std::vector<double> envelope{1.0};    // h(k) polynomial coefficients
    int n_modes = 256;
};

struct HamiltonianConfig {
    std::string kind = "quadratic";  // quadratic | acoustic | tabulated
    double c0 = 1.0;
    std::filesystem::path table_file;  // two columns: k, H0(k)
};

struct ObservableConfig {
    std::string shape = "gaussian";  // gaussian | bump
    std::vector<double> center;      // default: origin
    double width = 0.5;
    double amplitude = 1.0;
    double k_center = 2.0;
    double k_halfwidth = 0.5;
    std::vector<double> axis;  // default: e1
    double c0 = 1.0, c1 = 0.0, c2 = 0.0;
};

struct ExperimentConfig {
    std::string type;  // momentum | spatial | double | acoustics | stopping
    std::vector<double> deltas;
    std::vector<double> gammas;
    double alpha = 0.1;
    std::vector<double> times;
    std::vector<Vec> x_probes;
    std::vector<Vec> k_probes;
    int n_paths = 2000;         // diffusion paths per probe group
    int n_realizations = 2000;  // ray Monte Carlo media per rung
    double dt = 0.005;          // Euler-Maruyama step
    double M = 3.0;
    double M_guard = 0.0;  // > 0: guard shell instead of the energy bound
    double d_tilde = 0.0;  // 0: estimate from the medium
    double tol = 1e-6;     // ray integration tolerance
    double T = 1.0;
    double k0 = 2.0;
    StoppingExponents eps;
    std::string cell_method = "closed-form";  // closed-form | galerkin
    int L = 12;
    /// Error bars are this many standard errors.
    double error_bar_se = 2.0;
};

struct Config {
    MediumConfig medium;
    HamiltonianConfig hamiltonian;
    ObservableConfig observable;
    ExperimentConfig experiment;
};

/// Strict INI reader: sections [medium], [hamiltonian], [observable],
/// [experiment]; `key = value`; `#` or `;` start comments. Lists are
/// comma-separated; lists of vectors separate the vectors with `|`. Unknown sections or keys, duplicates and malformed values throw
/// ConfigError carrying the line number. Relative file paths resolve against
/// base_dir.
Config parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);

std::shared_ptr<const CorrelationModel> build_correlation(const MediumConfig& m);
BackgroundHamiltonian build_hamiltonian(const HamiltonianConfig& h);
ObservableSpec build_observable(const ObservableConfig& o, int dim);

/// Product probe set times x x_probes x k_probes.
std::vector<EvalPoint> build_probes(const ExperimentConfig& e, int dim);

}  // namespace raydiff
