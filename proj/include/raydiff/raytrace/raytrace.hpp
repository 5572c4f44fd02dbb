#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "raydiff/hamiltonian/flow.hpp"
#include "raydiff/raytrace/integrator.hpp"
#include "raydiff/raytrace/observable.hpp"

namespace raydiff {

struct Trajectory {
    std::vector<double> times;
    std::vector<PhasePoint> states;
    std::vector<double> hamiltonian_values;
    Frame frame = Frame::Rescaled;
    double delta = 0.0;
    /// Continuous extension, one segment per accepted step (when requested).
    std::vector<DenseSegment> dense;
    /// States at RayOptions::output_times.
    std::vector<PhasePoint> outputs;
    long rejected_steps = 0;

    double max_relative_drift() const;
    /// 1/M_delta <= |k| <= M_delta at every stored state.
    bool confined(const FlowParameters& params) const;
    PhasePoint state_at(double t) const;
};

struct RayOptions {
    double tol = 1e-8;
    Frame frame = Frame::Rescaled;
    bool store_steps = true;
    bool store_dense = false;
    std::vector<double> output_times;
};

Trajectory integrate_ray(const BackgroundHamiltonian& h0, const MediumRealization& medium,
                         const FlowParameters& params, const PhasePoint& start, double T, const RayOptions& opt);
Trajectory integrate_ray(const BackgroundHamiltonian& h0, const MediumRealization& medium,
                         const FlowParameters& params, const PhasePoint& start, double T, double tol);

/// Samples of the trajectory at t = 0, h, 2h, ..., through the dense output.
Trajectory resample(const Trajectory& traj, double h, double T);

/// Columns t, x1..xd, k1..kd, H.
std::string trajectory_csv(const Trajectory& traj);

struct LinearApproxReport {
    long checked = 0;
    long violations = 0;
    double worst_ratio = 0.0;  // max over pairs of |X(s) - L(sigma, s)| / bound
};

/// Checks |X(s) - X(sigma) - (s - sigma) H0'(|K(sigma)|) Khat(sigma)| <=
/// D~ sqrt(delta) (s - sigma) + C (s - sigma)^2 / (2 sqrt(delta)) with
/// C = (1 + M_delta) h^*(M_delta) D~, over all stored pairs with s - sigma <= window.
LinearApproxReport check_linear_approximation(const Trajectory& traj, const BackgroundHamiltonian& h0,
                                              const FlowParameters& params, double window);

struct EvalPoint {
    double t = 0.0;
    Vec x;
    Vec k;
};

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;  // standard error
    long n = 0;
    long failures = 0;
};

struct LiouvilleOptions {
    double tol = 1e-6;
    /// Observable read at (x_scale z, m) for the flow endpoint (z, m).
    double x_scale = 1.0;
    double max_failure_fraction = 0.01;
    int jobs = 0;
};

/// E phi^delta(t/delta, x/delta, k) = E phi0(z(t; x, k), m(t; x, k)) over
/// n_realizations independent media (one medium per trajectory).
/// Realizations whose ray fails are excluded; more than the allowed
/// fraction of failures throws NumericalError.
std::vector<McEstimate> solve_liouville_mc(const PhaseSpaceObservable& phi0,
                                           std::shared_ptr<const CorrelationModel> corr,
                                           const BackgroundHamiltonian& h0, const FlowParameters& params,
                                           const std::vector<EvalPoint>& points, int n_realizations, int n_modes,
                                           std::uint64_t seed, const LiouvilleOptions& opt = {});

/// Records {t, x, k, mean, stderr, n}.
std::string liouville_json(const std::vector<EvalPoint>& points, const std::vector<McEstimate>& est);

}  // namespace raydiff
