#include <cmath>
#include <numbers>

#include "doctest.h"
#include "raydiff/common/errors.hpp"
#include "raydiff/common/rng.hpp"
#include "raydiff/spacediff/cell.hpp"
#include "raydiff/spacediff/corrector.hpp"
#include "raydiff/spacediff/heat.hpp"
#include "raydiff/spacediff/sphere.hpp"

using namespace raydiff;

namespace {

std::shared_ptr<const CorrelationModel> gaussian3() {
    return std::make_shared<const CorrelationModel>(CorrelationModel::gaussian(3, 1.0, 1.0));
}

std::shared_ptr<const CorrelationModel> anisotropic3() {
    std::vector<double> kappa, s;
    for (int i = 0; i <= 200; ++i) {
        const double x = 0.04 * i;
        kappa.push_back(x);
        s.push_back(std::exp(-0.5 * x * x));
    }
    Vec scales(3);
    scales << 1.0, 0.8, 1.3;
    return std::make_shared<const CorrelationModel>(CorrelationModel::anisotropic(1.0, kappa, s, scales));
}

}  // namespace

TEST_CASE("sphere quadrature integrates low-degree polynomials exactly") {
    const auto q = SphereQuadrature::product(8, 16);
    CHECK(q.average([](const Vec&) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(q.average([](const Vec& u) { return u(0) * u(0); }) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(q.average([](const Vec& u) { return u(0) * u(0) * u(1) * u(1); }) ==
          doctest::Approx(1.0 / 15.0).epsilon(1e-13));
    CHECK(std::abs(q.average([](const Vec& u) { return u(0) * u(2) * u(2); })) < 1e-15);
    CHECK(unit_sphere_area(3) == doctest::Approx(4.0 * std::numbers::pi));
}

TEST_CASE("real spherical harmonics are orthonormal and their gradients match finite differences") {
    const RealSphericalHarmonics sh(5);
    const auto q = SphereQuadrature::product(12, 24);
    const int n = sh.size();
    Mat gram = Mat::Zero(n, n);
    Vec y;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        sh.eval(q.nodes[i], y);
        gram += q.weights[i] * y * y.transpose();
    }
    CHECK((gram - Mat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);

    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec u = uniform_on_sphere(rng, 3);
        Mat g;
        sh.eval(u, y, &g);
        const double h = 1e-6;
        for (int c = 0; c < 3; ++c) {
            Vec up = u, um = u;
            up(c) += h;
            um(c) -= h;
            Vec yp, ym;
            sh.eval(up / up.norm(), yp);
            sh.eval(um / um.norm(), ym);
            const Vec fd = (yp - ym) / (2 * h);
            // Tangential gradient equals the Cartesian gradient of the homogeneous extension.
            CHECK((fd - g.row(c).transpose()).cwiseAbs().maxCoeff() < 1e-7);
        }
        CHECK((u.transpose() * g).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("closed-form correctors on the Gaussian model") {
    const MomentumDiffusionTensors t(gaussian3(), BackgroundHamiltonian::quadratic());
    auto sol = solve_spatial_diffusion(t, 1.0);
    CHECK(sol.chi_coefficient() == doctest::Approx(0.39894228).epsilon(1e-6));
    CHECK(sol.A()(0, 0) == doctest::Approx(0.13298076).epsilon(1e-6));
    CHECK(std::abs(sol.A()(0, 1)) < 1e-14);
    CHECK(sol.psi_coefficient() == doctest::Approx(0.39894228 / (6 * 1.25331414)).epsilon(1e-6));
    // Zero mean of chi.
    const auto q = SphereQuadrature::product(10, 20);
    CHECK(std::abs(q.average([&](const Vec& u) { return sol.chi(u)(1); })) < 1e-15);
}

TEST_CASE("cell residual via the finite-difference generator") {
    const MomentumDiffusionTensors t(gaussian3(), BackgroundHamiltonian::quadratic());
    const auto sol = solve_cell_problem(t, 1.0);
    const auto r = cell_residual(sol, t, 20, 3);
    CHECK(r.mean_square < 1e-10);
}

TEST_CASE("Galerkin reproduces the closed form on the isotropic model") {
    const MomentumDiffusionTensors t(gaussian3(), BackgroundHamiltonian::quadratic());
    CellOptions opt;
    opt.method = CellMethod::Galerkin;
    opt.L = 8;
    auto gal = solve_spatial_diffusion(t, 1.0, opt);
    auto cf = solve_spatial_diffusion(t, 1.0);
    Rng rng(11);
    double sup = 0, sup_psi = 0;
    for (int i = 0; i < 200; ++i) {
        const Vec u = uniform_on_sphere(rng, 3);
        sup = std::max(sup, (gal.chi(u) - cf.chi(u)).cwiseAbs().maxCoeff());
        sup_psi = std::max(sup_psi, (gal.psi(u) - cf.psi(u)).cwiseAbs().maxCoeff());
    }
    CHECK(sup < 1e-6);
    CHECK(sup_psi < 1e-6);
    CHECK((gal.A() - cf.A()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("anisotropic Galerkin: symmetric positive A and dissipation identity") {
    const MomentumDiffusionTensors t(anisotropic3(), BackgroundHamiltonian::quadratic());
    CellOptions opt;
    opt.method = CellMethod::Galerkin;
    opt.L = 6;
    auto sol = solve_spatial_diffusion(t, 1.0, opt);
    CHECK((sol.A() - sol.A().transpose()).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Mat> es(sol.A());
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    Vec c(3);
    c << 0.3, -1.0, 0.5;
    const double lhs = c.dot(sol.A() * c);
    CHECK(dissipation_form(sol, t, c, 16) == doctest::Approx(lhs).epsilon(1e-5));
    // The diagonal of A differs between axes of different correlation length.
    CHECK(std::abs(sol.A()(0, 0) - sol.A()(1, 1)) > 1e-4);
}

TEST_CASE("degenerate and inconsistent inputs") {
    const MomentumDiffusionTensors zero(std::make_shared<const CorrelationModel>(CorrelationModel::zero(3)),
                                        BackgroundHamiltonian::quadratic());
    CHECK_THROWS_AS(solve_cell_problem(zero, 1.0), DegenerateDiffusion);
    CellOptions g;
    g.method = CellMethod::Galerkin;
    g.L = 3;
    CHECK_THROWS_AS(solve_cell_problem(zero, 1.0, g), DegenerateDiffusion);

    const MomentumDiffusionTensors t(gaussian3(), BackgroundHamiltonian::quadratic());
    auto sol = solve_cell_problem(t, 1.0, g);
    compute_A(sol);
    // Bilinearity: scaling chi scales A.
    auto scaled = sol.scaled_chi(2.5);
    compute_A(scaled);
    CHECK((scaled.A() - 2.5 * sol.A()).cwiseAbs().maxCoeff() < 1e-14);
    // A that disagrees with chi.
    auto bad = sol.scaled_chi(1.0);
    compute_A(bad);
    auto bad2 = bad.scaled_chi(1.3);  // chi rescaled, A dropped
    compute_A(bad2);
    CHECK_NOTHROW(solve_psi(bad2));
}

TEST_CASE("sphere average of initial data") {
    ObservableSpec s;
    s.center = Vec::Zero(3);
    s.width = 0.7;
    s.k_center = 1.0;
    s.k_halfwidth = 0.5;
    s.c0 = 0.0;
    s.c2 = 1.0;
    const PhaseSpaceObservable phi(s, 3.0);
    AverageOptions quad;
    quad.force_quadrature = true;
    const auto a = average_initial_data(phi, 3, 1.0, quad);
    const auto b = average_initial_data(phi, 3, 1.0);
    Vec x(3);
    x << 0.2, -0.1, 0.4;
    const double g = std::exp(-0.5 * x.squaredNorm() / 0.49);
    CHECK(a.value(x) == doctest::Approx(g / 3.0).epsilon(1e-12));
    CHECK(b.value(x) == doctest::Approx(g / 3.0).epsilon(1e-14));

    s.c2 = 0.0;
    s.c1 = 1.0;
    const PhaseSpaceObservable odd(s, 3.0);
    CHECK(std::abs(average_initial_data(odd, 3, 1.0, quad).value(x)) < 1e-15);

    // d = 4 Monte Carlo with error bars.
    ObservableSpec s4 = s;
    s4.center = Vec::Zero(4);
    s4.c1 = 0.0;
    s4.c2 = 1.0;
    s4.shape = SpatialShape::Bump;
    s4.width = 2.0;
    const PhaseSpaceObservable phi4(s4, 3.0);
    const auto m = average_initial_data(phi4, 4, 1.0);
    const Vec x4 = Vec::Zero(4);
    CHECK(std::abs(m.value(x4) - 0.25) < 4 * m.standard_error(x4));
}

TEST_CASE("heat solution: Gaussian convolution, quadrature agreement, small-t limit") {
    Mat A(3, 3);
    A << 0.2, 0.05, 0.0, 0.05, 0.1, 0.02, 0.0, 0.02, 0.15;
    ObservableSpec s;
    s.center = Vec::Zero(3);
    s.width = 0.6;
    s.k_center = 1.0;
    const PhaseSpaceObservable phi(s, 3.0);
    const HeatSolution h(A, average_initial_data(phi, 3, 1.0), 30);
    const double t = 0.7;
    Vec x(3);
    x << 0.3, -0.2, 0.5;
    // N(0, s^2 I) convolved with N(0, 2At).
    const Mat S = 0.36 * Mat::Identity(3, 3) + 2 * t * A;
    const double expected = std::pow(0.36, 1.5) / std::sqrt(S.determinant()) * std::exp(-0.5 * x.dot(S.inverse() * x));
    CHECK(h.value(t, x) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(h.value_quadrature(t, x) == doctest::Approx(expected).epsilon(1e-10));
    // Mass: integral of w equals integral of phi0_bar = (2 pi s^2)^{3/2}.
    const double eps = 1e-4;
    CHECK(std::abs(h.value(eps, x) - h.value(0.0, x)) < 10 * eps);
    // Jet derivatives against finite differences.
    const auto J = h.jet(t, x);
    const double dh = 1e-5;
    for (int i = 0; i < 3; ++i) {
        Vec xp = x, xm = x;
        xp(i) += dh;
        xm(i) -= dh;
        CHECK(J.grad(i) == doctest::Approx((h.value(t, xp) - h.value(t, xm)) / (2 * dh)).epsilon(1e-7));
        const auto Jp = h.jet(t, xp), Jm = h.jet(t, xm);
        CHECK((J.third[i] - (Jp.hess - Jm.hess) / (2 * dh)).cwiseAbs().maxCoeff() < 1e-7);
        CHECK((J.dt_grad(i) - (Jp.dt - Jm.dt) / (2 * dh)) == doctest::Approx(0.0).epsilon(1e-6).scale(1.0));
    }
    const double dt = 1e-5;
    CHECK(J.dt == doctest::Approx((h.value(t + dt, x) - h.value(t - dt, x)) / (2 * dt)).epsilon(1e-7));
    const auto Jtp = h.jet(t + dt, x), Jtm = h.jet(t - dt, x);
    CHECK((J.dt_hess - (Jtp.hess - Jtm.hess) / (2 * dt)).cwiseAbs().maxCoeff() < 1e-7);

    CHECK_THROWS_AS(HeatSolution(-A, average_initial_data(phi, 3, 1.0)), ValidationError);
}

TEST_CASE("heat mass conservation") {
    Mat A = 0.3 * Mat::Identity(3, 3);
    ObservableSpec s;
    s.center = Vec::Zero(3);
    s.width = 0.5;
    s.k_center = 1.0;
    const PhaseSpaceObservable phi(s, 3.0);
    const HeatSolution h(A, average_initial_data(phi, 3, 1.0), 20);
    // Radial integral of w(t, r e1) over R^3; w is radial since A is isotropic.
    auto mass = [&](double t) {
        double m = 0;
        const int n = 200;
        const double R = 6.0, dr = R / n;
        for (int i = 0; i < n; ++i) {
            const double r = (i + 0.5) * dr;
            m += 4 * std::numbers::pi * r * r * dr *
                 (t > 0 ? h.value_quadrature(t, r * Vec::Unit(3, 0)) : h.value(0.0, r * Vec::Unit(3, 0)));
        }
        return m;
    };
    CHECK(mass(0.2) == doctest::Approx(mass(0.0)).epsilon(1e-6));
    CHECK(mass(0.0) == doctest::Approx(std::pow(2 * std::numbers::pi * 0.25, 1.5)).epsilon(1e-6));
}

TEST_CASE("corrector expansion and substitution residual") {
    const MomentumDiffusionTensors t(gaussian3(), BackgroundHamiltonian::quadratic());
    const auto sol = solve_spatial_diffusion(t, 1.0);
    ObservableSpec s;
    s.center = Vec::Zero(3);
    s.width = 0.4;
    s.k_center = 1.0;
    const PhaseSpaceObservable phi(s, 3.0);
    const HeatSolution h(sol.A(), average_initial_data(phi, 3, 1.0));
    Vec x(3);
    x << 0.3, 0.1, -0.2;
    const Vec kh = Vec::Unit(3, 0);
    CHECK(CorrectorExpansion(h, sol, 0.0).value(0.5, x, kh) == h.value(0.5, x));
    const CorrectorExpansion ce(h, sol, 0.1);
    CHECK(ce.first_corrector(0.5, x, kh) == doctest::Approx(0.1 * 0.39894228 * h.jet(0.5, x).grad.dot(kh)).epsilon(1e-6));

    std::vector<ResidualProbe> probes;
    Rng rng(5);
    for (double tt : {0.2, 0.5})
        for (int i = 0; i < 3; ++i) probes.push_back({tt, 0.3 * standard_normal_vector(rng, 3), uniform_on_sphere(rng, 3)});
    const auto rep = corrector_residual_order(h, sol, t, probes, {0.2, 0.1, 0.05});
    MESSAGE("residual order " << rep.observed_order);
    CHECK(rep.observed_order >= 0.9);
}
