#include "raydiff/spacediff/heat.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "raydiff/common/errors.hpp"
#include "raydiff/common/io.hpp"
#include "raydiff/common/quadrature.hpp"
#include "raydiff/common/rng.hpp"

namespace raydiff {

double GaussianMixture::operator()(const Vec& x) const {
    double s = 0.0;
    for (const auto& c : components) s += c.weight * std::exp(-0.5 * (x - c.center).squaredNorm() / (c.s * c.s));
    return s;
}

AveragedInitialData average_initial_data(const PhaseSpaceObservable& phi0, int dim, double k,
                                         const AverageOptions& opt) {
    AveragedInitialData out;
    out.dim = dim;
    out.k = k;
    out.standard_error = [](const Vec&) { return 0.0; };
    const auto& spec = phi0.spec();
    if (spec && spec->shape == SpatialShape::Gaussian && !opt.force_quadrature) {
        if (spec->center.size() != dim) throw DimensionError(static_cast<int>(spec->center.size()));
        const double b = smooth_bump((k - spec->k_center) / spec->k_halfwidth);
        GaussianMixture gm;
        gm.components.push_back({spec->amplitude * b * (spec->c0 + spec->c2 / dim), spec->center, spec->width});
        out.gaussian = gm;
        out.value = [gm](const Vec& x) { return gm(x); };
        return out;
    }
    if (dim == 3) {
        auto q = std::make_shared<SphereQuadrature>(SphereQuadrature::product(opt.n_theta, 2 * opt.n_theta));
        out.value = [q, phi0, k](const Vec& x) {
            return q->average([&](const Vec& kh) { return phi0(x, k * kh); });
        };
        return out;
    }
    Rng rng = make_rng(opt.seed, {stream::sphere});
    auto pts = std::make_shared<std::vector<Vec>>();
    for (int i = 0; i < opt.mc_points; ++i) pts->push_back(uniform_on_sphere(rng, dim));
    auto stats = [pts, phi0, k](const Vec& x) {
        double s = 0.0, s2 = 0.0;
        for (const Vec& kh : *pts) {
            const double v = phi0(x, k * kh);
            s += v;
            s2 += v * v;
        }
        const double n = static_cast<double>(pts->size());
        const double m = s / n;
        return std::pair{m, std::sqrt(std::max(0.0, (s2 / n - m * m) / (n - 1)))};
    };
    out.value = [stats](const Vec& x) { return stats(x).first; };
    out.standard_error = [stats](const Vec& x) { return stats(x).second; };
    return out;
}

HeatSolution::HeatSolution(Mat A, AveragedInitialData data, int gh_nodes)
    : A_(std::move(A)), data_(std::move(data)), gh_nodes_(gh_nodes) {
    if (A_.rows() != data_.dim || A_.cols() != data_.dim) throw ValidationError("A does not match the dimension");
    if ((A_ - A_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * A_.cwiseAbs().maxCoeff())
        throw ValidationError("A must be symmetric");
    Eigen::LLT<Mat> llt(A_);
    Eigen::SelfAdjointEigenSolver<Mat> es(A_, Eigen::EigenvaluesOnly);
    if (llt.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0.0))
        throw ValidationError("A must be positive definite");
    L_ = llt.matrixL();
}

double HeatSolution::value(double t, const Vec& x) const {
    if (t < 0.0) throw ValidationError("heat solution needs t >= 0");
    if (t == 0.0) return data_.value(x);
    if (analytic()) return jet(t, x).w;
    return value_quadrature(t, x);
}

double HeatSolution::value_quadrature(double t, const Vec& x) const {
    if (!(t > 0.0)) return data_.value(x);
    const int d = data_.dim;
    const auto gh = gauss_hermite(gh_nodes_);
    // y = x + sqrt(2 t) L xi with xi ~ N(0, I), xi = sqrt(2) eta against exp(-eta^2).
    const Mat S = 2.0 * std::sqrt(t) * L_;
    std::vector<int> idx(d, 0);
    double sum = 0.0;
    Vec eta(d);
    while (true) {
        double w = 1.0;
        for (int i = 0; i < d; ++i) {
            eta(i) = gh.nodes[idx[i]];
            w *= gh.weights[idx[i]];
        }
        sum += w * data_.value(x + S * eta);
        int i = 0;
        while (i < d && ++idx[i] == gh_nodes_) idx[i++] = 0;
        if (i == d) break;
    }
    return sum / std::pow(std::numbers::pi, 0.5 * d);
}

HeatSolution::Jet HeatSolution::jet(double t, const Vec& x) const {
    if (!analytic()) throw ValidationError("analytic derivatives need Gaussian-mixture initial data");
    const int d = data_.dim;
    Jet J;
    J.grad = Vec::Zero(d);
    J.hess = Mat::Zero(d, d);
    J.dt_grad = Vec::Zero(d);
    J.dt_hess = Mat::Zero(d, d);
    J.third.assign(d, Mat::Zero(d, d));
    const Mat I = Mat::Identity(d, d);
    for (const auto& c : data_.gaussian->components) {
        const Mat Sigma = c.s * c.s * I + 2.0 * t * A_;
        Eigen::LLT<Mat> llt(Sigma);
        const Mat P = llt.solve(I);
        const Vec r = x - c.center;
        const Vec u = P * r;
        const double logdet = 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
        const double w = c.weight * std::exp(d * std::log(c.s) - 0.5 * logdet - 0.5 * r.dot(u));
        const double alpha = u.dot(A_ * u);
        const double tau = (A_ * P).trace();
        const Vec v = P * A_ * u;
        const Mat B = P * A_ * P;
        const Mat uu = u * u.transpose();
        J.w += w;
        J.grad += -w * u;
        J.hess += w * (uu - P);
        J.dt_grad += w * ((tau - alpha) * u + 2.0 * v);
        J.dt_hess += w * ((alpha - tau) * (uu - P) - 2.0 * (v * u.transpose() + u * v.transpose()) + 2.0 * B);
        J.dt += w * (alpha - tau);
        for (int i = 0; i < d; ++i)
            J.third[i] += w * (-u(i) * uu + P.col(i) * u.transpose() + u * P.row(i) + u(i) * P);
    }
    return J;
}

std::vector<double> solve_heat(const HeatSolution& heat, double t, const std::vector<Vec>& x_points) {
    if (!(t > 0.0)) throw ValidationError("solve_heat needs t > 0");
    std::vector<double> out;
    out.reserve(x_points.size());
    for (const Vec& x : x_points) out.push_back(heat.value(t, x));
    return out;
}

std::string heat_csv(const HeatSolution& heat, const std::vector<double>& times, const std::vector<Vec>& x_points) {
    const int d = heat.data().dim;
    std::vector<std::string> header{"t"};
    for (int i = 0; i < d; ++i) header.push_back("x" + std::to_string(i + 1));
    header.push_back("w");
    CsvWriter csv(header);
    for (double t : times)
        for (const Vec& x : x_points) {
            csv.cell(t);
            for (int i = 0; i < d; ++i) csv.cell(x(i));
            csv.cell(heat.value(t, x));
            csv.end_row();
        }
    return csv.str();
}

}  // namespace raydiff
