#pragma once

#include <cstdint>

#include "raydiff/diagnostics/stopping.hpp"
#include "raydiff/experiments/config.hpp"
#include "raydiff/experiments/report.hpp"

namespace raydiff {

struct RunContext {
    std::uint64_t seed = 1;
    int jobs = 0;
};

/// Ray Monte Carlo E phi^delta(t/delta, x/delta, k) against the Feynman-Kac
/// estimate of the momentum-diffusion limit, per delta rung.
ScalingReport run_momentum_scaling(const Config& cfg, const RunContext& ctx);

/// Momentum diffusion read at (t/gamma^2, x/gamma) against the heat solution
/// w(t, x, |k|), per gamma rung; fits the log-log slope and measures the
/// corrector substitution residual order.
ScalingReport run_spatial_scaling(const Config& cfg, const RunContext& ctx);

/// Ray Monte Carlo at (t/delta^(1+2 alpha), x/delta^(1+alpha)) with data
/// phi0(delta^(1+alpha) x, k) against w(t, x, |k|). Also compares each probe
/// with the chained momentum-then-spatial pipeline at gamma = delta^alpha.
ScalingReport run_double_scaling(const Config& cfg, const RunContext& ctx);

/// H0 = c0 |k| with h(k) = |k|: checks compute_D against the one-dimensional
/// formula in the variable c0 s, the spatial matrix against its closed form,
/// the u- / u+ parity, and runs the momentum ladder if deltas are given.
ScalingReport run_acoustics(const Config& cfg, const RunContext& ctx);

StoppingTable run_stopping(const Config& cfg, const RunContext& ctx);

/// Flow parameters for one rung: guard shell if configured, else the
/// energy bound (which throws above delta_*).
FlowParameters rung_flow_parameters(const Config& cfg, const BackgroundHamiltonian& h0, double delta, double d_tilde);
double resolve_d_tilde(const Config& cfg, const CorrelationModel& corr, std::uint64_t seed);

}  // namespace raydiff
