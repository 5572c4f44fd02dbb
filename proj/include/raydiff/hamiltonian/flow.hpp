#pragma once

#include <cstdint>

#include "raydiff/common/types.hpp"
#include "raydiff/hamiltonian/background.hpp"
#include "raydiff/medium/medium.hpp"

namespace raydiff {

enum class Frame { Macroscopic, Rescaled };

struct FlowParameters {
    double delta = 0.0;
    double M = 1.0;
    double M_delta = 1.0;
    double D_tilde = 0.0;
    /// false when M_delta is a user-supplied guard shell rather than the
    /// energy bound (used for delta above delta_*(M)).
    bool derived = true;

    double shell_lo() const { return 0.5 / M_delta; }
    double shell_hi() const { return 2.0 * M_delta; }
};

/// delta_*(M) = H0(1/M) / (2 D~(M)).
double delta_star(const BackgroundHamiltonian& h0, double M, double d_tilde);

/// Energy-conservation bound on |K(t)|; throws ConfinementViolated when
/// 2 sqrt(delta) D~ >= H0(1/M).
double m_delta_bound(const BackgroundHamiltonian& h0, double M, double delta, double d_tilde);

FlowParameters make_flow_parameters(const BackgroundHamiltonian& h0, double M, double delta, double d_tilde);
/// Flow parameters with an explicit guard shell M_guard >= M instead of the
/// energy bound.
FlowParameters guarded_flow_parameters(double M, double delta, double d_tilde, double M_guard);

/// 1.5 times the probe-grid maximum of sum_{i+j<=2} max_{|alpha|=i}
/// |d_x^alpha d_k^j H1| over n_media realizations, n_points points in the box
/// [-box, box]^d and momenta in [1/M, M].
double estimate_d_tilde(const CorrelationModel& corr, double M, int n_media, int n_modes, int n_points,
                        double box, std::uint64_t seed);

struct FlowRhs {
    Vec velocity;
    Vec force;
};

/// Macroscopic frame: (grad_k H_delta, -grad_x H_delta) at (x, k).
/// Rescaled frame: velocity [H0'(|k|) + sqrt(delta) h'(|k|) c1(x/delta)] khat,
/// force -(1/sqrt(delta)) h(|k|) grad c1(x/delta).
/// Throws ShellExit when |k| leaves (1/(2 M_delta), 2 M_delta).
FlowRhs flow_rhs(const BackgroundHamiltonian& h0, const MediumRealization& m, const FlowParameters& params,
                 Frame frame, const PhasePoint& state);

/// Allocation-free variant used by the integrator: out = (velocity, force).
void flow_rhs_into(const BackgroundHamiltonian& h0, const MediumRealization& m, const FlowParameters& params,
                   Frame frame, const Vec& x, const Vec& k, Vec& velocity, Vec& force);

/// H_delta(x, k) = H0(|k|) + sqrt(delta) c1(x) h(|k|); in the rescaled frame
/// the field is evaluated at x / delta.
double hamiltonian_value(const BackgroundHamiltonian& h0, const MediumRealization& m, double delta, Frame frame,
                         const PhasePoint& state);

}  // namespace raydiff
