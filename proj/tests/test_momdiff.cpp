#include <cmath>
#include <numbers>

#include "doctest.h"
#include "json.hpp"
#include "raydiff/common/errors.hpp"
#include "raydiff/common/rng.hpp"
#include "raydiff/momdiff/sde.hpp"
#include "raydiff/momdiff/tensors.hpp"

using namespace raydiff;

namespace {

std::shared_ptr<const CorrelationModel> gaussian(int d, double sigma, double ell, Envelope h = {}) {
    return std::make_shared<const CorrelationModel>(CorrelationModel::gaussian(d, sigma, ell, std::move(h)));
}

/// sqrt(pi/2) sigma^2 h^2 / (H0' ell): the gaussian line integral of the
/// transverse Hessian, halved.
double gaussian_D0(double sigma, double ell, double h, double v) {
    return std::sqrt(std::numbers::pi / 2.0) * sigma * sigma * h * h / (v * ell);
}

ObservableSpec spec3(double k_center) {
    ObservableSpec s;
    s.center = Vec::Zero(3);
    s.width = 0.5;
    s.k_center = k_center;
    s.k_halfwidth = 0.5;
    s.axis = Vec::Unit(3, 0);
    s.c1 = 1.0;
    return s;
}

}  // namespace

TEST_CASE("gaussian diffusion matrix matches the closed form") {
    const auto h0 = BackgroundHamiltonian::quadratic();
    Rng rng(1);
    for (int d : {3, 4}) {
        const auto corr = gaussian(d, 1.3, 0.8, Envelope({1.0, 0.2}));
        for (int t = 0; t < 5; ++t) {
            const Vec kh = uniform_on_sphere(rng, d);
            const double k = 0.5 + t * 0.4;
            const double D0 = gaussian_D0(1.3, 0.8, 1.0 + 0.2 * k, k);
            const Mat expect = D0 * (Mat::Identity(d, d) - kh * kh.transpose());
            const Mat D = compute_D(*corr, h0, kh, k);
            CHECK((D - expect).cwiseAbs().maxCoeff() < 1e-10 * D0);
            const Mat R = compute_D_regularized(*corr, h0, kh, k);
            CHECK((R - expect).cwiseAbs().maxCoeff() < 1e-6 * D0);
        }
    }
}

TEST_CASE("drift equals the divergence of D in k") {
    const auto h0 = BackgroundHamiltonian::quadratic();
    const auto corr = gaussian(3, 1.0, 1.0);
    const MomentumDiffusionTensors t(corr, h0);
    Rng rng(4);
    for (int trial = 0; trial < 3; ++trial) {
        const Vec kv = 1.2 * uniform_on_sphere(rng, 3);
        const double k = kv.norm();
        const Vec E = t.E(kv / k, k);
        CHECK((E + 2.0 * t.D0(k) * kv / (k * k)).norm() < 1e-9);
        Vec div = Vec::Zero(3);
        const double h = 1e-4;
        for (int n = 0; n < 3; ++n) {
            const Vec a = kv + h * Vec::Unit(3, n), b = kv - h * Vec::Unit(3, n);
            div += (t.D(a / a.norm(), a.norm()).col(n) - t.D(b / b.norm(), b.norm()).col(n)) / (2 * h);
        }
        CHECK((E - div).norm() < 1e-7);
    }
}

TEST_CASE("isotropic closed forms at sigma = ell = k = 1, d = 3") {
    const auto corr = gaussian(3, 1.0, 1.0);
    const auto cf = isotropic_closed_forms(*corr, BackgroundHamiltonian::quadratic(), 1.0);
    CHECK(cf.D0 == doctest::Approx(std::sqrt(std::numbers::pi / 2.0)).epsilon(1e-12));
    CHECK(cf.D0 == doctest::Approx(1.2533141).epsilon(1e-7));
    CHECK(cf.chi_coefficient == doctest::Approx(0.39894228).epsilon(1e-7));
    CHECK(cf.a_scalar == doctest::Approx(0.13298076).epsilon(1e-7));
    CHECK_THROWS_AS(isotropic_closed_forms(CorrelationModel::zero(3), BackgroundHamiltonian::quadratic(), 1.0),
                    DegenerateDiffusion);
}

TEST_CASE("tensor identities on anisotropic and tabulated models") {
    std::vector<double> kappa, s;
    for (int i = 0; i <= 200; ++i) {
        kappa.push_back(0.04 * i);
        s.push_back(std::exp(-0.5 * kappa.back() * kappa.back()));
    }
    Vec scales(3);
    scales << 1.0, 0.7, 1.4;
    const auto h0 = BackgroundHamiltonian::quadratic();
    for (const auto& corr : {CorrelationModel::anisotropic(1.0, kappa, s, scales),
                             CorrelationModel::tabulated(3, 1.0, kappa, s)}) {
        Rng rng(8);
        for (int t = 0; t < 4; ++t) {
            const Vec kh = uniform_on_sphere(rng, 3);
            const Mat D = compute_D(corr, h0, kh, 1.1);
            CHECK((D * kh).norm() < 1e-8 * D.norm());
            CHECK((D - D.transpose()).cwiseAbs().maxCoeff() < 1e-14);
            Eigen::SelfAdjointEigenSolver<Mat> eig(D);
            CHECK(eig.eigenvalues()(0) > -1e-8 * D.norm());
            CHECK(eig.eigenvalues()(1) > 1e-3 * D.norm());
        }
    }
}

TEST_CASE("zero medium has zero tensors") {
    const auto zero = std::make_shared<const CorrelationModel>(CorrelationModel::zero(3));
    const MomentumDiffusionTensors t(zero, BackgroundHamiltonian::quadratic());
    CHECK(t.D(Vec::Unit(3, 1), 1.0).norm() == 0.0);
    CHECK(t.E(Vec::Unit(3, 1), 1.0).norm() == 0.0);
    const auto j = nlohmann::json::parse(tensors_json(t, {Vec::Unit(3, 0)}, {0.5, 1.0}));
    CHECK(j.size() == 2);
    CHECK(j[0]["D"][1][1].get<double>() == 0.0);
}

TEST_CASE("sphere SDE keeps |K| fixed and decorrelates at the generator rate") {
    const auto corr = gaussian(3, 1.0, 1.0);
    const MomentumDiffusionTensors t(corr, BackgroundHamiltonian::quadratic());
    const PhasePoint start{Vec::Zero(3), 1.5 * Vec::Unit(3, 2)};
    const auto p = simulate_momentum_sde(t, start, 1.0, 1e-3, 9);
    for (const Vec& k : p.k) CHECK(k.norm() == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(p.max_radial_increment < 0.2);
    const auto q = simulate_momentum_sde(t, start, 1.0, 1e-3, 9);
    CHECK(p.x.back() == q.x.back());
    CHECK(sde_path_csv(p).rfind("t,x1,x2,x3,k1,k2,k3\n", 0) == 0);

    // E khat(t) . khat(0) = exp(-(d-1) D0 t / k^2).
    const double k = 1.5, T = 0.4, rate = 2.0 * t.D0(k) / (k * k);
    const int n = 4000;
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < n; ++r) {
        const auto path = simulate_momentum_sde(t, start, T, 2e-3, derive_seed(3, {std::uint64_t(r)}));
        const double c = path.k.back().dot(start.k) / (k * k);
        sum += c;
        sum2 += c * c;
    }
    const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - std::exp(-rate * T)) < 4.0 * se + 5e-3);
}

TEST_CASE("quiet medium transports rigidly") {
    const auto zero = std::make_shared<const CorrelationModel>(CorrelationModel::zero(3));
    const MomentumDiffusionTensors t(zero, BackgroundHamiltonian::quadratic());
    const PhasePoint start{Vec::Zero(3), 1.5 * Vec::Unit(3, 0)};
    const auto p = simulate_momentum_sde(t, start, 2.0, 0.01, 1);
    CHECK((p.x.back() - 3.0 * Vec::Unit(3, 0)).norm() < 1e-12);
}

TEST_CASE("Kolmogorov estimates: exact limits and worker independence") {
    const auto corr = gaussian(3, 1.0, 1.0);
    const MomentumDiffusionTensors t(corr, BackgroundHamiltonian::quadratic());
    const PhaseSpaceObservable phi(spec3(1.0), 3.0);
    Vec x(3);
    x << 0.3, -0.2, 0.1;
    const std::vector<EvalPoint> pts{{0.0, x, Vec::Unit(3, 0)}, {0.3, x, Vec::Unit(3, 0)}, {0.3, x, -Vec::Unit(3, 1)}};
    const auto a = kolmogorov_estimates(t, phi, pts, 300, 0.01, 5, {1});
    const auto b = kolmogorov_estimates(t, phi, pts, 300, 0.01, 5, {3});
    CHECK(a[0].mean == doctest::Approx(phi(x, Vec::Unit(3, 0))).epsilon(1e-14));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(a[i].mean == b[i].mean);
        CHECK(a[i].se == b[i].se);
    }

    const auto zero = std::make_shared<const CorrelationModel>(CorrelationModel::zero(3));
    const MomentumDiffusionTensors tz(zero, BackgroundHamiltonian::quadratic());
    const auto z = kolmogorov_estimates(tz, phi, pts, 10, 0.01, 5);
    CHECK(z[1].mean == doctest::Approx(phi(x + 0.3 * Vec::Unit(3, 0), Vec::Unit(3, 0))).epsilon(1e-12));
    CHECK(z[1].se < 1e-14);
    CHECK_THROWS_AS(kolmogorov_estimates(t, phi, {{-1.0, x, Vec::Unit(3, 0)}}, 10, 0.01, 5), ValidationError);
}
