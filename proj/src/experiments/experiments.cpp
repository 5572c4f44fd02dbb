#include "raydiff/experiments/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>

#include <boost/math/quadrature/sinh_sinh.hpp>

#include "raydiff/common/errors.hpp"
#include "raydiff/common/rng.hpp"
#include "raydiff/medium/medium.hpp"
#include "raydiff/momdiff/sde.hpp"
#include "raydiff/raytrace/integrator.hpp"
#include "raydiff/spacediff/cell.hpp"
#include "raydiff/spacediff/corrector.hpp"
#include "raydiff/spacediff/heat.hpp"

namespace raydiff {

namespace {

using Clock = std::chrono::steady_clock;

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

ScalingReport make_report(const std::string& id, const std::string& ladder, const Config& cfg, const RunContext& ctx) {
    ScalingReport r;
    r.id = id;
    r.ladder_name = ladder;
    r.error_bar_se = cfg.experiment.error_bar_se;
    r.seed = ctx.seed;
    r.jobs = ctx.jobs;
    return r;
}

CellOptions cell_options(const Config& cfg) {
    CellOptions o;
    o.method = cfg.experiment.cell_method == "galerkin" ? CellMethod::Galerkin : CellMethod::ClosedForm;
    o.L = cfg.experiment.L;
    return o;
}

/// Heat solutions keyed by |k|, built lazily.
class HeatCache {
  public:
    HeatCache(const MomentumDiffusionTensors& tensors, const PhaseSpaceObservable& phi0, CellOptions opt)
        : tensors_(tensors), phi0_(phi0), opt_(opt) {}

    struct Entry {
        SpatialDiffusionSolution cell;
        HeatSolution heat;
    };

    const MomentumDiffusionTensors& tensors() const { return tensors_; }
    const PhaseSpaceObservable& observable() const { return phi0_; }

    const Entry& at(double k) {
        auto it = cache_.find(k);
        if (it == cache_.end()) {
            auto cell = solve_spatial_diffusion(tensors_, k, opt_);
            HeatSolution heat(cell.A(), average_initial_data(phi0_, tensors_.dim(), k));
            it = cache_.emplace(k, Entry{std::move(cell), std::move(heat)}).first;
        }
        return it->second;
    }

  private:
    const MomentumDiffusionTensors& tensors_;
    const PhaseSpaceObservable& phi0_;
    CellOptions opt_;
    std::map<double, Entry> cache_;
};

std::vector<EvalPoint> rescale_probes(const std::vector<EvalPoint>& probes, double time_div, double x_div) {
    std::vector<EvalPoint> out = probes;
    for (auto& p : out) {
        p.t /= time_div;
        p.x /= x_div;
    }
    return out;
}

void require_ladder(const std::vector<double>& v, const char* name) {
    if (v.empty()) throw ValidationError(std::string("experiment needs a non-empty ") + name + " ladder");
    for (double x : v)
        if (!(x > 0.0 && x < 1.0)) throw ValidationError(std::string(name) + " values must lie in (0, 1)");
}

}  // namespace

double resolve_d_tilde(const Config& cfg, const CorrelationModel& corr, std::uint64_t seed) {
    if (cfg.experiment.d_tilde > 0.0) return cfg.experiment.d_tilde;
    if (corr.is_zero()) return 0.0;
    return estimate_d_tilde(corr, cfg.experiment.M, 4, cfg.medium.n_modes, 200, 5.0, seed);
}

FlowParameters rung_flow_parameters(const Config& cfg, const BackgroundHamiltonian& h0, double delta,
                                    double d_tilde) {
    const auto& e = cfg.experiment;
    if (e.M_guard > 0.0) return guarded_flow_parameters(e.M, delta, d_tilde, e.M_guard);
    return make_flow_parameters(h0, e.M, delta, d_tilde);
}

ScalingReport run_momentum_scaling(const Config& cfg, const RunContext& ctx) {
    const auto t0 = Clock::now();
    const auto& e = cfg.experiment;
    require_ladder(e.deltas, "delta");
    const auto corr = build_correlation(cfg.medium);
    const auto h0 = build_hamiltonian(cfg.hamiltonian);
    const PhaseSpaceObservable phi0(build_observable(cfg.observable, corr->dim()), e.M);
    const auto probes = build_probes(e, corr->dim());
    const MomentumDiffusionTensors tensors(corr, h0);
    const double dt_ = resolve_d_tilde(cfg, *corr, ctx.seed);

    auto report = make_report("momentum", "delta", cfg, ctx);
    report.metrics["d_tilde"] = dt_;
    const auto limit = kolmogorov_estimates(tensors, phi0, probes, e.n_paths, e.dt,
                                            derive_seed(ctx.seed, {2}), {ctx.jobs});
    for (std::size_t i = 0; i < e.deltas.size(); ++i) {
        const double delta = e.deltas[i];
        const auto params = rung_flow_parameters(cfg, h0, delta, dt_);
        LiouvilleOptions lo;
        lo.tol = e.tol;
        lo.jobs = ctx.jobs;
        const auto mc = solve_liouville_mc(phi0, corr, h0, params, probes, e.n_realizations, cfg.medium.n_modes,
                                           derive_seed(ctx.seed, {1, i}), lo);
        Rung r;
        r.parameter = delta;
        for (std::size_t p = 0; p < probes.size(); ++p)
            r.probes.push_back({probes[p], mc[p].mean, mc[p].se, limit[p].mean, limit[p].se});
        report.finalize_rung(r);
        report.rungs.push_back(std::move(r));
    }
    report.verdict_rule = "discrepancy strictly decreasing along the delta ladder outside error bars";
    report.trend_ok = report.strictly_decreasing();
    report.runtime_seconds = seconds_since(t0);
    return report;
}

namespace {

/// Spatial ladder over cfg.experiment.gammas. The residual-order and slope
/// verdict is only formed when `verdict` is set.
ScalingReport spatial_ladder(const Config& cfg, const RunContext& ctx, HeatCache& heat, bool verdict) {
    const auto t0 = Clock::now();
    const auto& e = cfg.experiment;
    require_ladder(e.gammas, "gamma");
    const MomentumDiffusionTensors& tensors = heat.tensors();
    const PhaseSpaceObservable& phi0 = heat.observable();
    const auto probes = build_probes(e, tensors.dim());

    auto report = make_report("spatial", "gamma", cfg, ctx);
    std::vector<double> rhs(probes.size());
    for (std::size_t p = 0; p < probes.size(); ++p)
        rhs[p] = heat.at(probes[p].k.norm()).heat.value(probes[p].t, probes[p].x);
    std::vector<double> discrepancies;
    for (std::size_t i = 0; i < e.gammas.size(); ++i) {
        const double g = e.gammas[i];
        const auto scaled = rescale_probes(probes, g * g, g);
        const auto est = kolmogorov_estimates(tensors, phi0.with_x_scale(g), scaled, e.n_paths, e.dt,
                                              derive_seed(ctx.seed, {3, i}), {ctx.jobs});
        Rung r;
        r.parameter = g;
        for (std::size_t p = 0; p < probes.size(); ++p) r.probes.push_back({probes[p], est[p].mean, est[p].se, rhs[p], 0.0});
        report.finalize_rung(r);
        discrepancies.push_back(r.discrepancy);
        report.rungs.push_back(std::move(r));
    }
    const auto& first = heat.at(probes.front().k.norm());
    report.metrics["a_11"] = first.cell.A()(0, 0);
    if (!verdict) {
        report.runtime_seconds = seconds_since(t0);
        return report;
    }
    bool ok = true;
    if (e.gammas.size() >= 2) {
        report.slope = loglog_slope(e.gammas, discrepancies);
        ok = *report.slope >= 0.4 && *report.slope <= 1.1;
    }
    if (first.heat.analytic()) {
        std::vector<ResidualProbe> rp;
        for (const auto& p : probes)
            if (p.t > 0.0) rp.push_back({p.t, p.x, p.k / p.k.norm()});
        if (!rp.empty()) {
            const auto res = corrector_residual_order(first.heat, first.cell, tensors, rp, {0.2, 0.1, 0.05});
            report.metrics["corrector_residual_order"] = res.observed_order;
            for (std::size_t j = 0; j < res.gammas.size(); ++j)
                report.metrics["corrector_residual_sup_gamma_" + label(res.gammas[j])] = res.sup_residual[j];
            ok = ok && res.observed_order >= 0.9;
        }
    }
    report.verdict_rule = "log-log slope in [0.4, 1.1] and corrector residual order >= 0.9";
    report.trend_ok = ok;
    report.runtime_seconds = seconds_since(t0);
    return report;
}

/// Config of the gamma-rescaled problem: data phi0(gamma x, k) and probes at
/// (t / gamma^2, x / gamma), single delta rung.
Config gamma_rescaled(const Config& cfg, double g, double delta, double d_tilde) {
    Config c = cfg;
    for (double& v : c.observable.center) v /= g;
    c.observable.width /= g;
    for (double& t : c.experiment.times) t /= g * g;
    for (Vec& x : c.experiment.x_probes) x /= g;
    c.experiment.deltas = {delta};
    c.experiment.d_tilde = d_tilde;
    return c;
}

}  // namespace

ScalingReport run_spatial_scaling(const Config& cfg, const RunContext& ctx) {
    const auto corr = build_correlation(cfg.medium);
    const MomentumDiffusionTensors tensors(corr, build_hamiltonian(cfg.hamiltonian));
    const PhaseSpaceObservable phi0(build_observable(cfg.observable, corr->dim()), cfg.experiment.M);
    HeatCache heat(tensors, phi0, cell_options(cfg));
    return spatial_ladder(cfg, ctx, heat, true);
}

ScalingReport run_double_scaling(const Config& cfg, const RunContext& ctx) {
    const auto t0 = Clock::now();
    const auto& e = cfg.experiment;
    require_ladder(e.deltas, "delta");
    if (!(e.alpha >= 0.0)) throw ValidationError("alpha must be >= 0");
    const auto corr = build_correlation(cfg.medium);
    const auto h0 = build_hamiltonian(cfg.hamiltonian);
    const PhaseSpaceObservable phi0(build_observable(cfg.observable, corr->dim()), e.M);
    const auto probes = build_probes(e, corr->dim());
    const MomentumDiffusionTensors tensors(corr, h0);
    HeatCache heat(tensors, phi0, cell_options(cfg));
    const double dt_ = resolve_d_tilde(cfg, *corr, ctx.seed);

    auto report = make_report("double", "delta", cfg, ctx);
    report.metrics["alpha"] = e.alpha;
    report.metrics["d_tilde"] = dt_;
    std::vector<double> rhs(probes.size());
    for (std::size_t p = 0; p < probes.size(); ++p)
        rhs[p] = heat.at(probes[p].k.norm()).heat.value(probes[p].t, probes[p].x);
    bool composition_ok = true;
    for (std::size_t i = 0; i < e.deltas.size(); ++i) {
        const double delta = e.deltas[i];
        const double g = std::pow(delta, e.alpha);
        const auto scaled = rescale_probes(probes, g * g, g);
        const auto params = rung_flow_parameters(cfg, h0, delta, dt_);
        LiouvilleOptions lo;
        lo.tol = e.tol;
        lo.jobs = ctx.jobs;
        lo.x_scale = g;
        const auto mc = solve_liouville_mc(phi0, corr, h0, params, scaled, e.n_realizations, cfg.medium.n_modes,
                                           derive_seed(ctx.seed, {4, i}), lo);
        Rung r;
        r.parameter = delta;
        for (std::size_t p = 0; p < probes.size(); ++p) r.probes.push_back({probes[p], mc[p].mean, mc[p].se, rhs[p], 0.0});

        // Chain: momentum pipeline at delta on the gamma-rescaled problem, then
        // spatial pipeline at gamma. Signed differences must add up.
        const RunContext sub{derive_seed(ctx.seed, {5, i}), ctx.jobs};
        const auto mom = run_momentum_scaling(gamma_rescaled(cfg, g, delta, dt_), sub);
        Config sp = cfg;
        sp.experiment.gammas = {g};
        const auto spa = spatial_ladder(sp, sub, heat, false);
        double zmax = 0.0;
        for (std::size_t p = 0; p < probes.size(); ++p) {
            const auto& a = mom.rungs.front().probes[p];
            const auto& b = spa.rungs.front().probes[p];
            const double chained = a.diff() + b.diff();
            const double se = std::sqrt(mc[p].se * mc[p].se + a.lhs_se * a.lhs_se + a.rhs_se * a.rhs_se +
                                        b.lhs_se * b.lhs_se + b.rhs_se * b.rhs_se);
            const double diff = std::abs(r.probes[p].diff() - chained);
            zmax = std::max(zmax, se > 0.0 ? diff / se : (diff > 0.0 ? INFINITY : 0.0));
        }
        report.metrics["gamma_delta_" + label(delta)] = g;
        report.metrics["composition_max_z_delta_" + label(delta)] = zmax;
        report.metrics["momentum_part_delta_" + label(delta)] = mom.rungs.front().discrepancy;
        report.metrics["spatial_part_delta_" + label(delta)] = spa.rungs.front().discrepancy;
        composition_ok = composition_ok && zmax <= 3.0;
        report.finalize_rung(r);
        report.rungs.push_back(std::move(r));
    }
    report.metrics["composition_ok"] = composition_ok ? 1.0 : 0.0;
    report.verdict_rule =
        "discrepancy strictly decreasing outside error bars; at every probe the signed discrepancy equals the sum "
        "of the momentum-pipeline and spatial-pipeline discrepancies within 3 combined standard errors";
    report.trend_ok = report.strictly_decreasing() && composition_ok;
    report.runtime_seconds = seconds_since(t0);
    return report;
}

ScalingReport run_acoustics(const Config& cfg_in, const RunContext& ctx) {
    const auto t0 = Clock::now();
    Config cfg = cfg_in;
    cfg.hamiltonian.kind = "acoustic";
    auto report = make_report("acoustics", "delta", cfg, ctx);
    if (cfg.medium.envelope != std::vector<double>{0.0, 1.0}) {
        report.notes.push_back("envelope set to h(k) = |k| for H = c(x)|k|");
        cfg.medium.envelope = {0.0, 1.0};
    }
    const double c0 = cfg.hamiltonian.c0;
    const auto corr = build_correlation(cfg.medium);
    const auto h0 = BackgroundHamiltonian::acoustic(c0);
    const int d = corr->dim();
    bool ok = true;

    // compute_D against k^2 (-1/2) int_R d_m d_n R_c(c0 s khat) ds.
    {
        boost::math::quadrature::sinh_sinh<double> integrator;
        Rng rng = make_rng(ctx.seed, {stream::probe, 0xac});
        double worst = 0.0;
        for (int trial = 0; trial < 8; ++trial) {
            const Vec kh = uniform_on_sphere(rng, d);
            const double k = 0.5 + 0.25 * trial;
            const Mat D = compute_D(*corr, h0, kh, k);
            Mat ref(d, d);
            for (int m = 0; m < d; ++m)
                for (int n = m; n < d; ++n) {
                    auto f = [&](double s) {
                        if (std::abs(s) > 1e4 * corr->ell()) return 0.0;
                        return corr->rc_hessian(c0 * s * kh)(m, n);
                    };
                    ref(m, n) = ref(n, m) = -0.5 * k * k * integrator.integrate(f, 1e-15);
                }
            const double scale = std::max(ref.cwiseAbs().maxCoeff(), 1e-300);
            worst = std::max(worst, (D - ref).cwiseAbs().maxCoeff() / scale);
        }
        report.metrics["diff_matrix_max_relative_error"] = worst;
        ok = ok && worst <= 1e-10;
    }

    // Spatial matrix at k = k_center against the closed form.
    if (corr->is_isotropic() && !corr->is_zero()) {
        const double k = cfg.observable.k_center;
        const MomentumDiffusionTensors tensors(corr, h0);
        CellOptions opt = cell_options(cfg);
        if (d != 3) opt.method = CellMethod::ClosedForm;
        auto sol = solve_cell_problem(tensors, k, opt);
        compute_A(sol);
        const auto cf = isotropic_closed_forms(*corr, h0, k);
        const double err = (sol.A() - cf.a_scalar * Mat::Identity(d, d)).cwiseAbs().maxCoeff() / cf.a_scalar;
        report.metrics["a_closed_form"] = cf.a_scalar;
        report.metrics["a_11"] = sol.A()(0, 0);
        report.metrics["a_max_relative_error"] = err;
        ok = ok && err <= 1e-6;
    }

    // u- branch: H- = -H+, so its rays from (x, k) are H+ rays from (x, -k) with K negated.
    if (!corr->is_zero()) {
        const auto med = sample_medium(corr, d, cfg.medium.n_modes, derive_seed(ctx.seed, {stream::medium, 0xac}));
        const double delta = cfg.experiment.deltas.empty() ? 0.05 : cfg.experiment.deltas.back();
        const double dtl = resolve_d_tilde(cfg, *corr, ctx.seed);
        const auto params = guarded_flow_parameters(cfg.experiment.M, delta, dtl,
                                                    std::max(cfg.experiment.M, cfg.experiment.M_guard));
        Rng rng = make_rng(ctx.seed, {stream::probe, 0xad});
        double worst = 0.0;
        for (int trial = 0; trial < 4; ++trial) {
            const Vec x = Vec::Zero(d);
            const Vec k = cfg.observable.k_center * uniform_on_sphere(rng, d);
            Vec vel(d), force(d);
            OdeRhs minus = [&](double, const Vec& y, Vec& dy) {
                flow_rhs_into(h0, med, params, Frame::Rescaled, y.head(d), y.tail(d), vel, force);
                dy.resize(2 * d);
                dy.head(d) = -vel;
                dy.tail(d) = -force;
            };
            OdeRhs plus = [&](double, const Vec& y, Vec& dy) {
                flow_rhs_into(h0, med, params, Frame::Rescaled, y.head(d), y.tail(d), vel, force);
                dy.resize(2 * d);
                dy.head(d) = vel;
                dy.tail(d) = force;
            };
            Dopri5Options o;
            o.rtol = o.atol = 1e-10;
            o.store_steps = false;
            o.output_times = {0.5};
            Vec ym(2 * d), yp(2 * d);
            ym << x, k;
            yp << x, -k;
            const Vec em = dopri5(minus, 0.0, ym, 0.5, o).outputs.back();
            const Vec ep = dopri5(plus, 0.0, yp, 0.5, o).outputs.back();
            worst = std::max(worst, (em.head(d) - ep.head(d)).norm() + (em.tail(d) + ep.tail(d)).norm());
        }
        report.metrics["parity_max_deviation"] = worst;
        ok = ok && worst <= 1e-6;
    }

    if (!cfg.experiment.deltas.empty()) {
        const auto mom = run_momentum_scaling(cfg, ctx);
        report.rungs = mom.rungs;
        report.metrics["momentum_trend_ok"] = mom.trend_ok ? 1.0 : 0.0;
        ok = ok && mom.trend_ok;
    }
    report.verdict_rule =
        "compute_D matches the acoustic formula to 1e-10, A matches the closed form to 1e-6, parity holds, and the "
        "momentum ladder (if any) decreases";
    report.trend_ok = ok;
    report.runtime_seconds = seconds_since(t0);
    return report;
}

StoppingTable run_stopping(const Config& cfg, const RunContext& ctx) {
    const auto& e = cfg.experiment;
    if (e.deltas.empty()) throw ValidationError("stopping experiment needs a delta ladder");
    StoppingEnsemble ens;
    ens.corr = build_correlation(cfg.medium);
    ens.h0 = build_hamiltonian(cfg.hamiltonian);
    ens.M = e.M;
    ens.M_guard = e.M_guard;
    ens.D_tilde = resolve_d_tilde(cfg, *ens.corr, ctx.seed);
    ens.n_modes = cfg.medium.n_modes;
    ens.k0 = e.k0;
    ens.tol = e.tol;
    return estimate_stopping_probability(ens, e.eps, e.deltas, e.T, e.n_paths, ctx.seed, ctx.jobs);
}

}  // namespace raydiff
