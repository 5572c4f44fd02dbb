#include "raydiff/diagnostics/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "raydiff/common/errors.hpp"
#include "raydiff/common/io.hpp"
#include "raydiff/common/parallel.hpp"
#include "raydiff/common/rng.hpp"
#include "raydiff/medium/medium.hpp"

namespace raydiff {

namespace {

long floor_pow(double delta, double e) { return static_cast<long>(std::floor(std::pow(delta, -e))); }

void check_resolution(const Trajectory& traj, const StoppingMesh& mesh) {
    if (traj.times.size() != traj.states.size()) throw ValidationError("trajectory times and states differ in length");
    const double limit = 1.0 / mesh.N1 * (1.0 + 1e-9);
    for (std::size_t i = 1; i < traj.times.size(); ++i)
        if (traj.times[i] - traj.times[i - 1] > limit)
            throw ResolutionError("trajectory sample spacing " + std::to_string(traj.times[i] - traj.times[i - 1]) +
                                  " exceeds 1/N1 = " + std::to_string(1.0 / mesh.N1));
}

/// State at time t: dense output if available, else linear interpolation.
PhasePoint reference(const Trajectory& traj, double t) {
    if (!traj.dense.empty()) return traj.state_at(t);
    const auto& ts = traj.times;
    if (t <= ts.front()) return traj.states.front();
    if (t >= ts.back()) return traj.states.back();
    const std::size_t i = std::upper_bound(ts.begin(), ts.end(), t) - ts.begin();
    const double a = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
    const PhasePoint& s0 = traj.states[i - 1];
    const PhasePoint& s1 = traj.states[i];
    return PhasePoint{(1.0 - a) * s0.x + a * s1.x, (1.0 - a) * s0.k + a * s1.k};
}

Vec direction(const Vec& k) { return k / k.norm(); }

struct CellKeyHash {
    std::size_t operator()(const std::vector<long>& v) const {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (long c : v) h = mix64(h ^ static_cast<std::uint64_t>(c));
        return static_cast<std::size_t>(h);
    }
};

template <class Query>
std::optional<double> scan_self_intersection(const Trajectory& traj, const StoppingMesh& mesh, Query&& query,
                                             std::vector<Vec>& trace) {
    check_resolution(traj, mesh);
    const long ratio = mesh.q / mesh.p;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        const long k = mesh.cell(t);
        if (k < 1) continue;
        // Trace points X(l/q) with l/q <= t_{k-1}, i.e. l <= (k-1) q / p.
        const long lmax = (k - 1) * ratio;
        while (static_cast<long>(trace.size()) <= lmax)
            trace.push_back(reference(traj, static_cast<double>(trace.size()) / mesh.q).x);
        if (query(traj.states[i].x, lmax)) return t;
    }
    return std::nullopt;
}

}  // namespace

StoppingMesh StoppingMesh::make(const StoppingExponents& e, double delta, double delta0) {
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("stopping mesh needs 0 < delta < 1");
    if (!(e.eps1 > 0.0)) throw ValidationError("mesh exponents violate 0 < eps1 (eps1 = " + std::to_string(e.eps1) + ")");
    if (!(e.eps2 > e.eps1))
        throw ValidationError("mesh exponents violate eps1 < eps2: eps2 = " + std::to_string(e.eps2) +
                              " <= eps1 = " + std::to_string(e.eps1) + " (need 0 < eps1 < eps2 < 1/2)");
    if (!(e.eps2 < 0.5)) throw ValidationError("mesh exponents violate eps2 < 1/2");
    if (!(e.eps3 > 0.0 && e.eps3 < 0.5 - e.eps2))
        throw ValidationError("mesh exponents violate 0 < eps3 < 1/2 - eps2");
    if (!(e.eps4 > 0.5 && e.eps4 < 1.0 - e.eps1 - e.eps2))
        throw ValidationError("mesh exponents violate 1/2 < eps4 < 1 - eps1 - eps2");
    StoppingMesh m;
    m.eps = e;
    m.delta = delta;
    m.N = floor_pow(delta, e.eps1);
    m.p = floor_pow(delta, e.eps2);
    m.q = m.p * floor_pow(delta, e.eps3);
    m.N1 = m.N * m.p * floor_pow(delta, e.eps4);
    if (delta <= delta0 && m.N > m.p)
        throw ValidationError("mesh has N = " + std::to_string(m.N) + " > p = " + std::to_string(m.p) +
                              " at delta <= delta0");
    return m;
}

long StoppingMesh::cell(double t) const { return static_cast<long>(std::floor(t * p + 1e-9)); }

std::optional<double> detect_violent_turn(const Trajectory& traj, const StoppingMesh& mesh) {
    check_resolution(traj, mesh);
    const double threshold = 1.0 - 1.0 / mesh.N;
    long cached = -1;
    Vec r1, r2;
    bool has_r2 = false;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        const long k = mesh.cell(t);
        if (k != cached) {
            const double tkm1 = k >= 1 ? static_cast<double>(k - 1) / mesh.p : 0.0;
            r1 = direction(reference(traj, tkm1).k);
            const double t2 = static_cast<double>(k) / mesh.p - 1.0 / mesh.N1;
            has_r2 = t2 >= 0.0;
            if (has_r2) r2 = direction(reference(traj, t2).k);
            cached = k;
        }
        const Vec kh = direction(traj.states[i].k);
        if (kh.dot(r1) <= threshold || (has_r2 && kh.dot(r2) <= threshold)) return t;
    }
    return std::nullopt;
}

std::optional<double> detect_self_intersection(const Trajectory& traj, const StoppingMesh& mesh) {
    const double radius = 1.0 / mesh.q;
    std::unordered_map<std::vector<long>, std::vector<long>, CellKeyHash> grid;
    std::vector<Vec> trace;
    long inserted = 0;
    auto key = [&](const Vec& x) {
        std::vector<long> c(x.size());
        for (int i = 0; i < x.size(); ++i) c[i] = static_cast<long>(std::floor(x(i) * mesh.q));
        return c;
    };
    auto query = [&](const Vec& x, long lmax) {
        for (; inserted <= lmax; ++inserted) grid[key(trace[inserted])].push_back(inserted);
        const int d = static_cast<int>(x.size());
        const auto base = key(x);
        std::vector<int> off(d, -1);
        while (true) {
            std::vector<long> c = base;
            for (int i = 0; i < d; ++i) c[i] += off[i];
            if (auto it = grid.find(c); it != grid.end())
                for (long l : it->second)
                    if ((x - trace[l]).norm() <= radius) return true;
            int i = 0;
            while (i < d && ++off[i] == 2) off[i++] = -1;
            if (i == d) break;
        }
        return false;
    };
    return scan_self_intersection(traj, mesh, query, trace);
}

std::optional<double> detect_self_intersection_bruteforce(const Trajectory& traj, const StoppingMesh& mesh) {
    const double radius = 1.0 / mesh.q;
    std::vector<Vec> trace;
    auto query = [&](const Vec& x, long lmax) {
        for (long l = 0; l <= lmax; ++l)
            if ((x - trace[l]).norm() <= radius) return true;
        return false;
    };
    return scan_self_intersection(traj, mesh, query, trace);
}

std::optional<double> stopping_time(const Trajectory& traj, const StoppingMesh& mesh) {
    const auto s = detect_violent_turn(traj, mesh);
    const auto u = detect_self_intersection(traj, mesh);
    if (s && u) return std::min(*s, *u);
    return s ? s : u;
}

WilsonInterval wilson_interval(long successes, long n, double z) {
    if (n <= 0) return {0.0, 1.0};
    const double ph = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (ph + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n)) / denom;
    return {successes == 0 ? 0.0 : std::max(0.0, centre - half), successes == n ? 1.0 : std::min(1.0, centre + half)};
}

StoppingTable estimate_stopping_probability(const StoppingEnsemble& ens, const StoppingExponents& eps,
                                            const std::vector<double>& deltas, double T, int n_paths,
                                            std::uint64_t seed, int jobs) {
    if (!ens.corr) throw ValidationError("stopping ensemble needs a correlation model");
    if (n_paths < 1) throw ValidationError("stopping ensemble needs at least one path");
    if (!(T > 0.0)) throw ValidationError("horizon T must be positive");
    const int d = ens.corr->dim();
    StoppingTable table;
    table.T = T;
    for (double delta : deltas) {
        StoppingRow row;
        row.delta = delta;
        row.n = n_paths;
        try {
            row.mesh = StoppingMesh::make(eps, delta);
            const FlowParameters params = ens.M_guard > 0.0
                                              ? guarded_flow_parameters(ens.M, delta, ens.D_tilde, ens.M_guard)
                                              : make_flow_parameters(ens.h0, ens.M, delta, ens.D_tilde);
            const double h = ens.sample_fraction / row.mesh.N1;
            // 0 = not stopped, 1 = violent turn first, 2 = self-intersection first.
            std::vector<int> outcome(n_paths, 0);
            parallel_for(
                n_paths,
                [&](std::size_t r) {
                    if (ens.corr->is_zero()) return;
                    const auto medium = sample_medium(ens.corr, d, ens.n_modes, derive_seed(seed, {stream::medium, r}));
                    Rng rng = make_rng(seed, {stream::probe, r});
                    const PhasePoint start{Vec::Zero(d), ens.k0 * uniform_on_sphere(rng, d)};
                    RayOptions opt;
                    opt.tol = ens.tol;
                    opt.frame = Frame::Rescaled;
                    opt.store_steps = false;
                    opt.store_dense = true;
                    const Trajectory sampled =
                        resample(integrate_ray(ens.h0, medium, params, start, T, opt), h, T);
                    const auto s = detect_violent_turn(sampled, row.mesh);
                    const auto u = detect_self_intersection(sampled, row.mesh);
                    if (s && (!u || *s <= *u))
                        outcome[r] = 1;
                    else if (u)
                        outcome[r] = 2;
                },
                jobs);
            for (int o : outcome) {
                row.stopped += o != 0;
                row.violent_turns += o == 1;
                row.self_intersections += o == 2;
            }
            row.p_hat = static_cast<double>(row.stopped) / n_paths;
            row.ci = wilson_interval(row.stopped, n_paths);
        } catch (const ResolutionError& e) {
            row.error = e.what();
        } catch (const NumericalError& e) {
            row.error = e.what();
        }
        table.rows.push_back(row);
    }
    table.strictly_decreasing = table.rows.size() >= 2;
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
        const auto& a = table.rows[i - 1];
        const auto& b = table.rows[i];
        if (!a.error.empty() || !b.error.empty() || !(b.p_hat < a.p_hat) || !(b.ci.hi < a.ci.lo))
            table.strictly_decreasing = false;
    }
    return table;
}

std::string stopping_csv(const StoppingTable& table) {
    CsvWriter csv({"delta", "p_hat", "ci_lo", "ci_hi", "n"});
    for (const auto& r : table.rows) {
        csv.cell(r.delta).cell(r.p_hat).cell(r.ci.lo).cell(r.ci.hi).cell(static_cast<long long>(r.n));
        csv.end_row();
    }
    return csv.str();
}

}  // namespace raydiff
