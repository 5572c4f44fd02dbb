// raydiff: command-line front end for the ray-diffusion library.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "raydiff/common/errors.hpp"
#include "raydiff/common/io.hpp"
#include "raydiff/common/parallel.hpp"
#include "raydiff/common/rng.hpp"
#include "raydiff/experiments/experiments.hpp"
#include "raydiff/medium/medium.hpp"
#include "raydiff/momdiff/sde.hpp"
#include "raydiff/spacediff/cell.hpp"
#include "raydiff/spacediff/heat.hpp"

namespace fs = std::filesystem;
using namespace raydiff;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kValidation = 2, kNumerical = 3, kTrend = 4 };

struct Options {
    std::string config;
    std::uint64_t seed = 1;
    std::string out = "out";
    int jobs = 0;
    double tol = 0.0;
};

/// Output directory bookkeeping. The manifest is written (atomically) before
/// any result file and rewritten at the end with timings.
class RunManifest {
  public:
    RunManifest(std::string command, const Options& o, std::vector<std::string> files)
        : command_(std::move(command)), opt_(o), files_(std::move(files)), start_(std::chrono::steady_clock::now()) {
        fs::create_directories(o.out);
        write("running");
    }

    void put(const std::string& name, const std::string& content) {
        write_file_atomic(fs::path(opt_.out) / name, content);
        ++tasks_;
    }

    void finish(const std::string& status) { write(status); }

  private:
    void write(const std::string& status) {
        nlohmann::json j;
        j["command"] = command_;
        j["config"] = opt_.config;
        j["seed"] = opt_.seed;
        j["out"] = opt_.out;
        j["jobs"] = opt_.jobs > 0 ? opt_.jobs : default_jobs();
        j["version"] = kVersion;
        j["status"] = status;
        j["files"] = files_;
        j["tasks_completed"] = tasks_;
        j["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_file_atomic(fs::path(opt_.out) / "manifest.json", j.dump(2));
    }

    std::string command_;
    Options opt_;
    std::vector<std::string> files_;
    std::chrono::steady_clock::time_point start_;
    int tasks_ = 0;
};

Config load(const Options& o) {
    Config c = o.config.empty() ? parse_config("") : load_config(o.config);
    if (o.tol > 0.0) c.experiment.tol = o.tol;
    return c;
}

std::vector<double> shell_radii(const Config& c) {
    std::vector<double> ks;
    for (const Vec& k : c.experiment.k_probes) ks.push_back(k.norm());
    if (ks.empty()) ks.push_back(c.observable.k_center);
    return ks;
}

int cmd_tensors(const Options& o) {
    const Config c = load(o);
    const auto corr = build_correlation(c.medium);
    const MomentumDiffusionTensors t(corr, build_hamiltonian(c.hamiltonian));
    const int d = corr->dim();
    std::vector<Vec> khats;
    for (int i = 0; i < d; ++i) khats.push_back(Vec::Unit(d, i));
    Rng rng = make_rng(o.seed, {stream::probe});
    for (int i = 0; i < 4; ++i) khats.push_back(uniform_on_sphere(rng, d));
    RunManifest m("tensors", o, {"tensors.json"});
    m.put("tensors.json", tensors_json(t, khats, shell_radii(c)));
    m.finish("ok");
    return kOk;
}

int cmd_ray(const Options& o) {
    const Config c = load(o);
    const auto corr = build_correlation(c.medium);
    const auto h0 = build_hamiltonian(c.hamiltonian);
    const int d = corr->dim();
    const double delta = c.experiment.deltas.empty() ? 0.05 : c.experiment.deltas.front();
    const auto params = rung_flow_parameters(c, h0, delta, resolve_d_tilde(c, *corr, o.seed));
    const auto med = sample_medium(corr, d, c.medium.n_modes, derive_seed(o.seed, {stream::medium, 0}));
    PhasePoint start{c.experiment.x_probes.empty() ? Vec(Vec::Zero(d)) : c.experiment.x_probes.front(),
                     c.experiment.k_probes.empty() ? Vec(c.experiment.k0 * Vec::Unit(d, 0))
                                                   : c.experiment.k_probes.front()};
    RayOptions ro;
    ro.tol = c.experiment.tol;
    RunManifest m("ray", o, {"trajectory.csv"});
    const auto traj = integrate_ray(h0, med, params, start, c.experiment.T, ro);
    m.put("trajectory.csv", trajectory_csv(traj));
    m.finish("ok");
    std::cout << "max relative Hamiltonian drift " << traj.max_relative_drift() << "\n";
    return kOk;
}

int cmd_sde(const Options& o) {
    const Config c = load(o);
    const auto corr = build_correlation(c.medium);
    const MomentumDiffusionTensors t(corr, build_hamiltonian(c.hamiltonian));
    const int d = corr->dim();
    PhasePoint start{Vec::Zero(d), c.experiment.k_probes.empty() ? Vec(c.experiment.k0 * Vec::Unit(d, 0))
                                                                 : c.experiment.k_probes.front()};
    SdeOptions so;
    so.record_every = std::max(1, static_cast<int>(0.01 / c.experiment.dt));
    RunManifest m("sde", o, {"sde_path.csv"});
    m.put("sde_path.csv",
          sde_path_csv(simulate_momentum_sde(t, start, c.experiment.T, c.experiment.dt, o.seed, so)));
    m.finish("ok");
    return kOk;
}

int cmd_cell(const Options& o) {
    const Config c = load(o);
    const auto corr = build_correlation(c.medium);
    const MomentumDiffusionTensors t(corr, build_hamiltonian(c.hamiltonian));
    CellOptions co;
    co.method = c.experiment.cell_method == "galerkin" ? CellMethod::Galerkin : CellMethod::ClosedForm;
    co.L = c.experiment.L;
    const double k = shell_radii(c).front();
    RunManifest m("cell", o, {"cell.json", "heat.csv"});
    const auto sol = solve_spatial_diffusion(t, k, co);
    m.put("cell.json", sol.to_json());
    const PhaseSpaceObservable phi0(build_observable(c.observable, corr->dim()), c.experiment.M);
    const HeatSolution heat(sol.A(), average_initial_data(phi0, corr->dim(), k));
    std::vector<Vec> xs;
    for (int i = -20; i <= 20; ++i) xs.push_back(0.1 * i * Vec::Unit(corr->dim(), 0));
    std::vector<double> times = c.experiment.times.empty() ? std::vector<double>{0.5, 1.0} : c.experiment.times;
    m.put("heat.csv", heat_csv(heat, times, xs));
    m.finish("ok");
    return kOk;
}

int cmd_experiment(const Options& o, const std::string& which) {
    const Config c = load(o);
    const RunContext ctx{o.seed, o.jobs};
    if (which == "stopping") {
        RunManifest m("experiment stopping", o, {"stopping.csv"});
        const auto table = run_stopping(c, ctx);
        m.put("stopping.csv", stopping_csv(table));
        m.finish(table.strictly_decreasing ? "ok" : "trend-failed");
        return table.strictly_decreasing ? kOk : kTrend;
    }
    RunManifest m("experiment " + which, o, {"report.json", "report.csv"});
    ScalingReport r;
    if (which == "momentum")
        r = run_momentum_scaling(c, ctx);
    else if (which == "spatial")
        r = run_spatial_scaling(c, ctx);
    else if (which == "double")
        r = run_double_scaling(c, ctx);
    else
        r = run_acoustics(c, ctx);
    m.put("report.json", r.to_json());
    m.put("report.csv", r.to_csv());
    m.finish(r.trend_ok ? "ok" : "trend-failed");
    for (const auto& rung : r.rungs)
        std::cout << r.ladder_name << " = " << rung.parameter << ": discrepancy " << rung.discrepancy << " +- "
                  << rung.error << "\n";
    std::cout << "verdict: " << (r.trend_ok ? "pass" : "fail") << "\n";
    return r.trend_ok ? kOk : kTrend;
}

int cmd_diagnose(const Options& o) {
    Config c = load(o);
    const RunContext ctx{o.seed, o.jobs};
    RunManifest m("diagnose", o, {"stopping.csv"});
    const auto table = run_stopping(c, ctx);
    m.put("stopping.csv", stopping_csv(table));
    m.finish("ok");
    for (const auto& row : table.rows)
        std::cout << "delta = " << row.delta << ": P[tau < T] = " << row.p_hat << " [" << row.ci.lo << ", "
                  << row.ci.hi << "]" << (row.error.empty() ? "" : " error: " + row.error) << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random Hamiltonian rays, momentum diffusion and spatial diffusion"};
    app.set_version_flag("--version", kVersion);
    Options o;
    app.add_option("--config", o.config, "INI configuration file")->envname("RAYDIFF_CONFIG");
    app.add_option("--seed", o.seed, "master seed")->envname("RAYDIFF_SEED");
    app.add_option("--out", o.out, "output directory")->envname("RAYDIFF_OUT");
    app.add_option("--jobs", o.jobs, "worker threads (default: logical cores)")->envname("RAYDIFF_JOBS");
    app.add_option("--tol", o.tol, "ray integration tolerance override")->envname("RAYDIFF_TOL");
    app.require_subcommand(1);

    std::string which;
    auto* tensors = app.add_subcommand("tensors", "diffusion matrix and drift on a direction grid");
    auto* ray = app.add_subcommand("ray", "integrate one ray in a sampled medium");
    auto* sde = app.add_subcommand("sde", "simulate one momentum-diffusion path");
    auto* cell = app.add_subcommand("cell", "cell correctors, A, and the heat solution");
    auto* exp = app.add_subcommand("experiment", "scaling experiments");
    exp->add_option("name", which, "momentum | spatial | double | acoustics | stopping")
        ->required()
        ->check(CLI::IsMember({"momentum", "spatial", "double", "acoustics", "stopping"}));
    auto* diag = app.add_subcommand("diagnose", "stopping-time probabilities");
    for (auto* s : {tensors, ray, sde, cell, exp, diag}) s->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kValidation;
    }
    if (o.jobs > 0) set_default_jobs(o.jobs);
    try {
        if (tensors->parsed()) return cmd_tensors(o);
        if (ray->parsed()) return cmd_ray(o);
        if (sde->parsed()) return cmd_sde(o);
        if (cell->parsed()) return cmd_cell(o);
        if (exp->parsed()) return cmd_experiment(o, which);
        if (diag->parsed()) return cmd_diagnose(o);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
    return kOk;
}
