#include "raydiff/hamiltonian/flow.hpp"

#include <algorithm>
#include <cmath>

#include "raydiff/common/errors.hpp"
#include "raydiff/common/rng.hpp"

namespace raydiff {

double delta_star(const BackgroundHamiltonian& h0, double M, double d_tilde) {
    return h0.value(1.0 / M) / (2.0 * d_tilde);
}

double m_delta_bound(const BackgroundHamiltonian& h0, double M, double delta, double d_tilde) {
    if (!(M >= 1.0)) throw ValidationError("shell parameter M must be >= 1");
    if (delta < 0.0 || d_tilde < 0.0) throw ValidationError("delta and D~ must be >= 0");
    const double shift = 2.0 * std::sqrt(delta) * d_tilde;
    const double bottom = h0.value(1.0 / M);
    if (shift >= bottom && delta > 0.0)
        throw ConfinementViolated("2 sqrt(delta) D~ = " + std::to_string(shift) + " >= H0(1/M) = " +
                                  std::to_string(bottom) + ": delta exceeds delta_*(M)");
    const double upper = h0.inverse(h0.value(M) + shift);
    const double lower = 1.0 / h0.inverse(bottom - shift);
    return std::max({upper, lower, M});
}

FlowParameters make_flow_parameters(const BackgroundHamiltonian& h0, double M, double delta, double d_tilde) {
    FlowParameters p;
    p.delta = delta;
    p.M = M;
    p.D_tilde = d_tilde;
    p.M_delta = m_delta_bound(h0, M, delta, d_tilde);
    p.derived = true;
    return p;
}

FlowParameters guarded_flow_parameters(double M, double delta, double d_tilde, double M_guard) {
    if (!(M_guard >= M)) throw ValidationError("guard shell must satisfy M_guard >= M");
    FlowParameters p;
    p.delta = delta;
    p.M = M;
    p.D_tilde = d_tilde;
    p.M_delta = M_guard;
    p.derived = false;
    return p;
}

double estimate_d_tilde(const CorrelationModel& corr, double M, int n_media, int n_modes, int n_points,
                        double box, std::uint64_t seed) {
    const int d = corr.dim();
    const auto& h = corr.envelope();
    double hmax[3] = {0, 0, 0};
    for (int i = 0; i <= 400; ++i) {
        const double k = std::exp(std::log(1.0 / M) + 2.0 * std::log(M) * i / 400.0);
        for (int j = 0; j < 3; ++j) hmax[j] = std::max(hmax[j], std::abs(h.eval(k, j)));
    }
    double cmax[3] = {0, 0, 0};
    auto shared = std::make_shared<const CorrelationModel>(corr);
    for (int r = 0; r < n_media; ++r) {
        const auto med = sample_medium(shared, d, n_modes, derive_seed(seed, {stream::medium, 0xd7ULL, std::uint64_t(r)}));
        Rng rng = make_rng(seed, {stream::probe, 0xd7ULL, std::uint64_t(r)});
        std::uniform_real_distribution<double> u(-box, box);
        for (int i = 0; i < n_points; ++i) {
            Vec x(d);
            for (int c = 0; c < d; ++c) x(c) = u(rng);
            Vec g;
            const double v = med.c1_grad(x, g);
            cmax[0] = std::max(cmax[0], std::abs(v));
            cmax[1] = std::max(cmax[1], g.cwiseAbs().maxCoeff());
            cmax[2] = std::max(cmax[2], med.c1_hessian(x).cwiseAbs().maxCoeff());
        }
    }
    double total = 0.0;
    for (int i = 0; i <= 2; ++i)
        for (int j = 0; i + j <= 2; ++j) total += cmax[i] * hmax[j];
    return 1.5 * total;
}

void flow_rhs_into(const BackgroundHamiltonian& h0, const MediumRealization& m, const FlowParameters& params,
                   Frame frame, const Vec& x, const Vec& k, Vec& velocity, Vec& force) {
    const double kn = k.norm();
    if (!(kn > params.shell_lo() && kn < params.shell_hi()))
        throw ShellExit("|k| = " + std::to_string(kn) + " left the shell (" + std::to_string(params.shell_lo()) +
                        ", " + std::to_string(params.shell_hi()) + ")");
    if (frame == Frame::Rescaled && !(params.delta > 0.0))
        throw ValidationError("rescaled frame needs delta > 0");
    const double sd = std::sqrt(params.delta);
    const auto& h = m.corr().envelope();
    const Vec xe = frame == Frame::Rescaled ? Vec(x / params.delta) : x;
    Vec grad;
    const double c = m.c1_grad(xe, grad);
    velocity = ((h0.d1(kn) + sd * h.eval(kn, 1) * c) / kn) * k;
    const double hv = h.value(kn);
    force = frame == Frame::Rescaled ? Vec(-(hv / sd) * grad) : Vec(-(sd * hv) * grad);
}

FlowRhs flow_rhs(const BackgroundHamiltonian& h0, const MediumRealization& m, const FlowParameters& params,
                 Frame frame, const PhasePoint& state) {
    FlowRhs r;
    flow_rhs_into(h0, m, params, frame, state.x, state.k, r.velocity, r.force);
    return r;
}

double hamiltonian_value(const BackgroundHamiltonian& h0, const MediumRealization& m, double delta, Frame frame,
                         const PhasePoint& state) {
    const double kn = state.k.norm();
    const Vec xe = frame == Frame::Rescaled ? Vec(state.x / delta) : state.x;
    return h0.value(kn) + std::sqrt(delta) * m.corr().envelope().value(kn) * m.c1(xe);
}

}  // namespace raydiff
