#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "raydiff/momdiff/tensors.hpp"
#include "raydiff/raytrace/observable.hpp"
#include "raydiff/raytrace/raytrace.hpp"

namespace raydiff {

struct SdePath {
    std::vector<double> times;
    std::vector<Vec> x;
    std::vector<Vec> k;
    /// max over steps of ||K_pre| - |k0|| before renormalization.
    double max_radial_increment = 0.0;
    long clipped = 0;
};

struct SdeOptions {
    /// Store every n-th step (the final state is always stored).
    int record_every = 1;
    /// Steps where D had an eigenvalue below -1e-10 ||D|| are clipped to PSD;
    /// more than this many abort with NumericalError.
    long max_clips = 100;
};

/// Ito Euler-Maruyama for dK = E dt + sqrt(2D) dW projected back to
/// |K| = |k0| after each step; X advances by the midpoint rule on
/// H0'(|k0|) Khat.
SdePath simulate_momentum_sde(const MomentumDiffusionTensors& tensors, const PhasePoint& start, double T, double dt,
                              std::uint64_t seed, const SdeOptions& opt = {});

/// Columns t, x1..xd, k1..kd.
std::string sde_path_csv(const SdePath& path);

struct KolmogorovOptions {
    int jobs = 0;
};

/// phi_bar(t, x, k) = E phi0(X(t), K(t)) for the limiting diffusion started at
/// (x, k). Probes sharing k share paths: X(t) - x does not depend on x.
std::vector<McEstimate> kolmogorov_estimates(const MomentumDiffusionTensors& tensors, const PhaseSpaceObservable& phi0,
                                             const std::vector<EvalPoint>& points, int n_paths, double dt,
                                             std::uint64_t seed, const KolmogorovOptions& opt = {});

McEstimate kolmogorov_estimate(const MomentumDiffusionTensors& tensors, const PhaseSpaceObservable& phi0,
                               const EvalPoint& point, int n_paths, double dt, std::uint64_t seed);

}  // namespace raydiff
