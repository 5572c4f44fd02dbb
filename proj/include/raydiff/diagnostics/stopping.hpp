#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "raydiff/raytrace/raytrace.hpp"

namespace raydiff {

struct StoppingExponents {
    double eps1 = 0.02;
    double eps2 = 0.25;
    double eps3 = 0.1;
    double eps4 = 0.6;
};

/// Time mesh t_k = k/p and thresholds for the stopping-time detectors:
/// N = [delta^-eps1], p = [delta^-eps2], q = p [delta^-eps3],
/// N1 = N p [delta^-eps4].
struct StoppingMesh {
    StoppingExponents eps;
    double delta = 0.0;
    long N = 1, p = 1, q = 1, N1 = 1;

    /// Throws ValidationError naming the violated inequality among
    /// 0 < eps1 < eps2 < 1/2, 0 < eps3 < 1/2 - eps2, 1/2 < eps4 < 1 - eps1 - eps2,
    /// or N > p while delta <= delta0.
    static StoppingMesh make(const StoppingExponents& eps, double delta, double delta0 = 0.1);

    /// Index k of the mesh cell [k/p, (k+1)/p) containing t.
    long cell(double t) const;
};

/// Earliest stored sample time of a violent turn, or none.
/// Reference directions K(t_{k-1}) and K(t_k - 1/N1) come from the dense
/// output when present, else from linear interpolation of the samples; the
/// second test is skipped while t_k - 1/N1 < 0. Throws ResolutionError when
/// consecutive samples are more than 1/N1 apart.
std::optional<double> detect_violent_turn(const Trajectory& traj, const StoppingMesh& mesh);

/// Earliest sample time t in cell k >= 1 with X(t) within 1/q of the trace
/// points {X(l/q) : l/q <= t_{k-1}}; spatial hash with cell size 1/q.
std::optional<double> detect_self_intersection(const Trajectory& traj, const StoppingMesh& mesh);

/// All-pairs reference implementation of detect_self_intersection.
std::optional<double> detect_self_intersection_bruteforce(const Trajectory& traj, const StoppingMesh& mesh);

/// tau = min of the two detectors.
std::optional<double> stopping_time(const Trajectory& traj, const StoppingMesh& mesh);

struct WilsonInterval {
    double lo = 0.0, hi = 0.0;
};
WilsonInterval wilson_interval(long successes, long n, double z = 1.959963984540054);

struct StoppingEnsemble {
    std::shared_ptr<const CorrelationModel> corr;
    BackgroundHamiltonian h0 = BackgroundHamiltonian::quadratic();
    double M = 3.0;
    /// Guard shell for the flow; 0 uses the energy bound.
    double M_guard = 0.0;
    double D_tilde = 0.0;
    int n_modes = 256;
    /// Rays start at x = 0 with |k| = k0 and a uniformly random direction.
    double k0 = 2.0;
    double tol = 1e-8;
    /// Sample spacing as a fraction of 1/N1.
    double sample_fraction = 0.5;
};

struct StoppingRow {
    double delta = 0.0;
    long n = 0;
    long stopped = 0;
    long violent_turns = 0;
    long self_intersections = 0;
    double p_hat = 0.0;
    WilsonInterval ci;
    StoppingMesh mesh;
    std::string error;  // non-empty when the rung aborted
};

struct StoppingTable {
    double T = 1.0;
    std::vector<StoppingRow> rows;
    /// Each p_hat below its predecessor (deltas in the given order) with
    /// disjoint Wilson intervals.
    bool strictly_decreasing = false;
};

StoppingTable estimate_stopping_probability(const StoppingEnsemble& ens, const StoppingExponents& eps,
                                            const std::vector<double>& deltas, double T, int n_paths,
                                            std::uint64_t seed, int jobs = 0);

/// Columns delta, p_hat, ci_lo, ci_hi, n.
std::string stopping_csv(const StoppingTable& table);

}  // namespace raydiff
