#include <cmath>

#include "doctest.h"
#include "raydiff/common/errors.hpp"
#include "raydiff/hamiltonian/background.hpp"
#include "raydiff/hamiltonian/flow.hpp"

using namespace raydiff;

namespace {

std::shared_ptr<const CorrelationModel> gaussian3(Envelope h = {}) {
    return std::make_shared<const CorrelationModel>(CorrelationModel::gaussian(3, 1.0, 1.0, std::move(h)));
}

}  // namespace

TEST_CASE("closed-form backgrounds and their derivatives") {
    const auto q = BackgroundHamiltonian::quadratic();
    CHECK(q.value(3.0) == doctest::Approx(4.5));
    CHECK(q.d1(3.0) == doctest::Approx(3.0));
    CHECK(q.eval(3.0, 2) == doctest::Approx(1.0));
    CHECK(q.eval(3.0, 3) == doctest::Approx(0.0));
    CHECK(q.inverse(4.5) == doctest::Approx(3.0));
    CHECK(q.h_lower(2.0) == doctest::Approx(0.5));
    CHECK(q.h_upper(2.0) == doctest::Approx(3.0));

    const auto a = BackgroundHamiltonian::acoustic(1.5);
    CHECK(a.value(2.0) == doctest::Approx(3.0));
    CHECK(a.d1(0.1) == doctest::Approx(1.5));
    CHECK(a.eval(2.0, 2) == 0.0);
    CHECK(a.inverse(3.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(BackgroundHamiltonian::acoustic(0.0), ValidationError);
}

TEST_CASE("tabulated background interpolates a monotone table") {
    std::vector<double> k, h;
    for (int i = 0; i <= 60; ++i) {
        k.push_back(0.1 * i);
        h.push_back(0.5 * k.back() * k.back() + 0.1 * k.back());
    }
    const auto t = BackgroundHamiltonian::tabulated(k, h);
    for (double x = 0.25; x < 5.9; x += 0.37) {
        CHECK(t.value(x) == doctest::Approx(0.5 * x * x + 0.1 * x).epsilon(1e-3));
        CHECK(t.d1(x) == doctest::Approx(x + 0.1).epsilon(1e-2));
        CHECK(t.inverse(t.value(x)) == doctest::Approx(x).epsilon(1e-10));
    }
    CHECK_THROWS_AS(BackgroundHamiltonian::tabulated({0, 1, 2}, {0, 1, 1}), ValidationError);
    CHECK_THROWS_AS(t.value(7.0), ValidationError);
}

TEST_CASE("energy shell bound") {
    const auto q = BackgroundHamiltonian::quadratic();
    const double M = 2.0, dt = 1.0;
    const double ds = delta_star(q, M, dt);
    CHECK(ds == doctest::Approx(0.125 / 2.0));
    // The error fires on 2 sqrt(delta) D~ >= H0(1/M), not on delta > delta_*.
    CHECK(m_delta_bound(q, M, 0.0025, dt) == doctest::Approx(1.0 / std::sqrt(0.05)).epsilon(1e-12));
    CHECK(m_delta_bound(q, M, 0.0, dt) == doctest::Approx(M));
    CHECK(m_delta_bound(q, M, 0.001, dt) <= m_delta_bound(q, M, 0.002, dt));
    CHECK_THROWS_AS(m_delta_bound(q, M, 0.01, dt), ConfinementViolated);
    CHECK_THROWS_AS(make_flow_parameters(q, M, 0.01, dt), ConfinementViolated);
    const auto g = guarded_flow_parameters(M, 0.1, dt, 5.0);
    CHECK_FALSE(g.derived);
    CHECK(g.shell_lo() == doctest::Approx(0.1));
    CHECK(g.shell_hi() == doctest::Approx(10.0));
    CHECK_THROWS_AS(guarded_flow_parameters(M, 0.1, dt, 1.0), ValidationError);
}

TEST_CASE("flow right-hand side is the Hamiltonian vector field") {
    const auto corr = gaussian3(Envelope({1.0, 0.3}));
    const auto med = sample_medium(corr, 3, 64, 17);
    const auto h0 = BackgroundHamiltonian::quadratic();
    const auto params = guarded_flow_parameters(3.0, 0.05, 1.0, 6.0);
    PhasePoint s{Vec(3), Vec(3)};
    s.x << 0.11, -0.4, 0.25;
    s.k << 0.8, 0.5, -0.3;
    for (Frame f : {Frame::Macroscopic, Frame::Rescaled}) {
        const auto rhs = flow_rhs(h0, med, params, f, s);
        const double h = f == Frame::Rescaled ? 1e-8 : 1e-6;
        for (int i = 0; i < 3; ++i) {
            PhasePoint a = s, b = s;
            a.k(i) += h;
            b.k(i) -= h;
            const double dHdk = (hamiltonian_value(h0, med, 0.05, f, a) - hamiltonian_value(h0, med, 0.05, f, b)) / (2 * h);
            CHECK(rhs.velocity(i) == doctest::Approx(dHdk).epsilon(1e-6));
            a = s;
            b = s;
            a.x(i) += h;
            b.x(i) -= h;
            const double dHdx = (hamiltonian_value(h0, med, 0.05, f, a) - hamiltonian_value(h0, med, 0.05, f, b)) / (2 * h);
            CHECK(rhs.force(i) == doctest::Approx(-dHdx).epsilon(1e-5));
        }
    }
    PhasePoint out = s;
    out.k *= 20.0;
    CHECK_THROWS_AS(flow_rhs(h0, med, params, Frame::Rescaled, out), ShellExit);
    out.k = s.k * 0.05;
    CHECK_THROWS_AS(flow_rhs(h0, med, params, Frame::Rescaled, out), ShellExit);
}

TEST_CASE("D~ estimate bounds the probed derivatives and is reproducible") {
    const auto corr = gaussian3();
    const double a = estimate_d_tilde(*corr, 3.0, 2, 64, 100, 5.0, 1);
    const double b = estimate_d_tilde(*corr, 3.0, 2, 64, 100, 5.0, 1);
    CHECK(a == b);
    const auto med = sample_medium(corr, 3, 64, derive_seed(1, {stream::medium, 0xd7ULL, 0}));
    CHECK(a > 1.5 * std::abs(med.c1(Vec::Zero(3))));
    CHECK(estimate_d_tilde(CorrelationModel::zero(3), 3.0, 1, 8, 10, 1.0, 2) == 0.0);
}
