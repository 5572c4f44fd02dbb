#include "raydiff/raytrace/raytrace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "json.hpp"

#include "raydiff/common/errors.hpp"
#include "raydiff/common/io.hpp"
#include "raydiff/common/parallel.hpp"
#include "raydiff/common/rng.hpp"

namespace raydiff {

double Trajectory::max_relative_drift() const {
    if (hamiltonian_values.empty()) return 0.0;
    const double h0 = hamiltonian_values.front();
    double worst = 0.0;
    for (double h : hamiltonian_values) worst = std::max(worst, std::abs(h - h0) / std::abs(h0));
    return worst;
}

bool Trajectory::confined(const FlowParameters& params) const {
    const double lo = 1.0 / params.M_delta, hi = params.M_delta;
    return std::all_of(states.begin(), states.end(), [&](const PhasePoint& s) {
        const double k = s.k.norm();
        return k >= lo && k <= hi;
    });
}

namespace {

PhasePoint split(const Vec& y) {
    const Eigen::Index d = y.size() / 2;
    return PhasePoint{y.head(d), y.tail(d)};
}

}  // namespace

PhasePoint Trajectory::state_at(double t) const {
    if (dense.empty()) throw ValidationError("trajectory has no dense output");
    if (t <= dense.front().t0) return split(dense.front().eval(dense.front().t0));
    auto it = std::upper_bound(dense.begin(), dense.end(), t,
                               [](double v, const DenseSegment& s) { return v < s.t0; });
    const DenseSegment& seg = *(it - 1);
    return split(seg.eval(std::min(t, seg.t0 + seg.h)));
}

Trajectory integrate_ray(const BackgroundHamiltonian& h0, const MediumRealization& medium,
                         const FlowParameters& params, const PhasePoint& start, double T, const RayOptions& opt) {
    if (!(opt.tol > 0.0)) throw ValidationError("integration tolerance must be positive");
    const int d = medium.dim();
    if (start.x.size() != d || start.k.size() != d) throw DimensionError(static_cast<int>(start.x.size()));
    const double k0 = start.k.norm();
    if (k0 < 1.0 / params.M || k0 > params.M)
        throw ValidationError("start momentum |k| = " + std::to_string(k0) + " outside the shell A(M)");

    Vec vel(d), force(d);
    OdeRhs rhs = [&](double, const Vec& y, Vec& dy) {
        flow_rhs_into(h0, medium, params, opt.frame, y.head(d), y.tail(d), vel, force);
        dy.resize(2 * d);
        dy.head(d) = vel;
        dy.tail(d) = force;
    };
    Vec y0(2 * d);
    y0 << start.x, start.k;
    Dopri5Options o;
    o.rtol = o.atol = opt.tol;
    o.store_steps = opt.store_steps;
    o.store_dense = opt.store_dense;
    o.output_times = opt.output_times;
    Dopri5Result r;
    try {
        r = dopri5(rhs, 0.0, y0, T, o);
    } catch (const ShellExit& e) {
        throw IntegrationFailure(std::string("momentum left the guard shell: ") + e.what(), -1.0);
    }

    Trajectory traj;
    traj.frame = opt.frame;
    traj.delta = params.delta;
    traj.times = std::move(r.times);
    traj.rejected_steps = r.rejected;
    traj.dense = std::move(r.dense);
    traj.states.reserve(r.states.size());
    for (const Vec& y : r.states) {
        traj.states.push_back(split(y));
        traj.hamiltonian_values.push_back(hamiltonian_value(h0, medium, params.delta, opt.frame, traj.states.back()));
    }
    for (const Vec& y : r.outputs) traj.outputs.push_back(split(y));
    return traj;
}

Trajectory integrate_ray(const BackgroundHamiltonian& h0, const MediumRealization& medium,
                         const FlowParameters& params, const PhasePoint& start, double T, double tol) {
    RayOptions opt;
    opt.tol = tol;
    return integrate_ray(h0, medium, params, start, T, opt);
}

Trajectory resample(const Trajectory& traj, double h, double T) {
    if (!(h > 0.0)) throw ValidationError("resampling step must be positive");
    Trajectory out;
    out.frame = traj.frame;
    out.delta = traj.delta;
    out.dense = traj.dense;
    const long n = static_cast<long>(std::floor(T / h + 1e-9));
    for (long i = 0; i <= n; ++i) {
        const double t = i * h;
        out.times.push_back(t);
        out.states.push_back(traj.state_at(t));
    }
    return out;
}

std::string trajectory_csv(const Trajectory& traj) {
    const int d = traj.states.empty() ? 0 : static_cast<int>(traj.states.front().x.size());
    std::vector<std::string> header{"t"};
    for (int i = 1; i <= d; ++i) header.push_back("x" + std::to_string(i));
    for (int i = 1; i <= d; ++i) header.push_back("k" + std::to_string(i));
    header.push_back("H");
    CsvWriter csv(header);
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        csv.cell(traj.times[i]);
        for (int c = 0; c < d; ++c) csv.cell(traj.states[i].x(c));
        for (int c = 0; c < d; ++c) csv.cell(traj.states[i].k(c));
        csv.cell(i < traj.hamiltonian_values.size() ? traj.hamiltonian_values[i]
                                                    : std::numeric_limits<double>::quiet_NaN());
        csv.end_row();
    }
    return csv.str();
}

LinearApproxReport check_linear_approximation(const Trajectory& traj, const BackgroundHamiltonian& h0,
                                              const FlowParameters& params, double window) {
    LinearApproxReport rep;
    const double sd = std::sqrt(params.delta);
    const double C = (1.0 + params.M_delta) * h0.h_upper(params.M_delta) * params.D_tilde;
    const std::size_t n = traj.states.size();
    for (std::size_t i = 0; i < n; ++i) {
        const PhasePoint& a = traj.states[i];
        const double ka = a.k.norm();
        const Vec va = (h0.d1(ka) / ka) * a.k;
        for (std::size_t j = i + 1; j < n && traj.times[j] - traj.times[i] <= window; ++j) {
            const double ds = traj.times[j] - traj.times[i];
            const double err = (traj.states[j].x - a.x - ds * va).norm();
            const double bound = params.D_tilde * sd * ds + C * ds * ds / (2.0 * sd);
            ++rep.checked;
            const double ratio = err / bound;
            rep.worst_ratio = std::max(rep.worst_ratio, ratio);
            if (ratio > 1.0) ++rep.violations;
        }
    }
    return rep;
}

std::vector<McEstimate> solve_liouville_mc(const PhaseSpaceObservable& phi0,
                                           std::shared_ptr<const CorrelationModel> corr,
                                           const BackgroundHamiltonian& h0, const FlowParameters& params,
                                           const std::vector<EvalPoint>& points, int n_realizations, int n_modes,
                                           std::uint64_t seed, const LiouvilleOptions& opt) {
    if (n_realizations < 1) throw ValidationError("n_realizations must be >= 1");
    const int d = corr->dim();
    // Points sharing a start (x, k) share a ray.
    struct Group {
        Vec x, k;
        std::vector<double> times;
        std::vector<std::size_t> members;
    };
    std::vector<Group> groups;
    std::vector<std::pair<std::size_t, std::size_t>> slot(points.size());  // (group, time index)
    for (std::size_t i = 0; i < points.size(); ++i) {
        const EvalPoint& p = points[i];
        if (p.t < 0.0) throw ValidationError("evaluation time must be >= 0");
        if (p.x.size() != d || p.k.size() != d) throw DimensionError(static_cast<int>(p.x.size()));
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const Group& g) { return g.x == p.x && g.k == p.k; });
        if (it == groups.end()) {
            groups.push_back(Group{p.x, p.k, {}, {}});
            it = groups.end() - 1;
        }
        it->members.push_back(i);
    }
    for (auto& g : groups) {
        for (std::size_t m : g.members) g.times.push_back(points[m].t);
        std::sort(g.times.begin(), g.times.end());
        g.times.erase(std::unique(g.times.begin(), g.times.end()), g.times.end());
        for (std::size_t m : g.members)
            slot[m] = {static_cast<std::size_t>(&g - groups.data()),
                       static_cast<std::size_t>(std::lower_bound(g.times.begin(), g.times.end(), points[m].t) -
                                                g.times.begin())};
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const bool free_flight = corr->is_zero();
    std::vector<std::vector<double>> values(n_realizations, std::vector<double>(points.size(), nan));
    parallel_for(
        static_cast<std::size_t>(n_realizations),
        [&](std::size_t r) {
            const auto med = sample_medium(corr, d, n_modes, derive_seed(seed, {stream::medium, r}));
            for (std::size_t g = 0; g < groups.size(); ++g) {
                const Group& grp = groups[g];
                std::vector<PhasePoint> ends;
                try {
                    if (free_flight) {
                        const double kn = grp.k.norm();
                        for (double t : grp.times) ends.push_back({grp.x + t * (h0.d1(kn) / kn) * grp.k, grp.k});
                    } else {
                        RayOptions ro;
                        ro.tol = opt.tol;
                        ro.store_steps = false;
                        ro.output_times = grp.times;
                        ends = integrate_ray(h0, med, params, {grp.x, grp.k}, grp.times.back(), ro).outputs;
                    }
                } catch (const NumericalError&) {
                    continue;
                }
                for (std::size_t m : grp.members) {
                    const PhasePoint& e = ends[slot[m].second];
                    values[r][m] = phi0(opt.x_scale * e.x, e.k);
                }
            }
        },
        opt.jobs);

    std::vector<McEstimate> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        McEstimate& e = out[i];
        double sum = 0.0;
        for (int r = 0; r < n_realizations; ++r) {
            if (std::isnan(values[r][i])) {
                ++e.failures;
                continue;
            }
            sum += values[r][i];
            ++e.n;
        }
        if (e.failures > opt.max_failure_fraction * n_realizations)
            throw NumericalError("liouville estimate aborted: " + std::to_string(e.failures) + " of " +
                                 std::to_string(n_realizations) + " rays failed");
        e.mean = sum / e.n;
        double ss = 0.0;
        for (int r = 0; r < n_realizations; ++r)
            if (!std::isnan(values[r][i])) ss += (values[r][i] - e.mean) * (values[r][i] - e.mean);
        e.se = e.n > 1 ? std::sqrt(ss / (e.n - 1) / e.n) : 0.0;
    }
    return out;
}

std::string liouville_json(const std::vector<EvalPoint>& points, const std::vector<McEstimate>& est) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
        nlohmann::json rec;
        rec["t"] = points[i].t;
        rec["x"] = std::vector<double>(points[i].x.data(), points[i].x.data() + points[i].x.size());
        rec["k"] = std::vector<double>(points[i].k.data(), points[i].k.data() + points[i].k.size());
        rec["mean"] = est[i].mean;
        rec["stderr"] = est[i].se;
        rec["n"] = est[i].n;
        arr.push_back(rec);
    }
    return arr.dump(2);
}

}  // namespace raydiff
