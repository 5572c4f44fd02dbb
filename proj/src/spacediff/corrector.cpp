#include "raydiff/spacediff/corrector.hpp"

#include <cmath>

#include "json.hpp"
#include "raydiff/common/errors.hpp"

namespace raydiff {

CorrectorExpansion::CorrectorExpansion(const HeatSolution& heat, const SpatialDiffusionSolution& cell, double gamma)
    : heat_(&heat), cell_(&cell), gamma_(gamma) {
    if (!heat.analytic()) throw ValidationError("corrector expansion needs Gaussian-mixture initial data");
    if (!cell.has_psi()) throw ValidationError("corrector expansion needs the second correctors psi");
    if (gamma < 0.0) throw ValidationError("gamma must be >= 0");
}

double CorrectorExpansion::value(double t, const Vec& x, const Vec& khat) const {
    const auto J = heat_->jet(t, x);
    if (gamma_ == 0.0) return J.w;
    const double w1 = cell_->chi(khat).dot(J.grad);
    const double w2 = (cell_->psi(khat).array() * J.hess.array()).sum();
    return J.w + gamma_ * w1 + gamma_ * gamma_ * w2;
}

double CorrectorExpansion::first_corrector(double t, const Vec& x, const Vec& khat) const {
    return gamma_ * cell_->chi(khat).dot(heat_->jet(t, x).grad);
}

GeneratorImages generator_images(const SpatialDiffusionSolution& cell, const MomentumDiffusionTensors& tensors,
                                 const Vec& khat) {
    const int d = cell.dim();
    GeneratorImages g;
    g.khat = khat;
    g.L_chi.resize(d);
    g.L_psi.resize(d, d);
    for (int j = 0; j < d; ++j)
        g.L_chi(j) = apply_generator(tensors, [&](const Vec& u) { return cell.chi(u)(j); }, khat, cell.k());
    for (int j = 0; j < d; ++j)
        for (int l = j; l < d; ++l) {
            const double v = apply_generator(
                tensors, [&](const Vec& u) { return 0.5 * (cell.psi(u)(j, l) + cell.psi(u)(l, j)); }, khat,
                cell.k());
            g.L_psi(j, l) = g.L_psi(l, j) = v;
        }
    return g;
}

double substitution_residual(const HeatSolution& heat, const SpatialDiffusionSolution& cell,
                             const GeneratorImages& images, double gamma, double t, const Vec& x) {
    if (!(gamma > 0.0)) throw ValidationError("residual needs gamma > 0");
    const int d = cell.dim();
    const Vec& kh = images.khat;
    const auto J = heat.jet(t, x);
    const Vec chi = cell.chi(kh);
    const Mat psi = cell.psi(kh);
    auto contract = [](const Mat& a, const Mat& b) { return (a.array() * b.array()).sum(); };

    const double dt_phi = J.dt + gamma * chi.dot(J.dt_grad) + gamma * gamma * contract(psi, J.dt_hess);
    double grad_w2 = 0.0;
    for (int i = 0; i < d; ++i) grad_w2 += kh(i) * contract(psi, J.third[i]);
    const double transport =
        cell.speed() * (kh.dot(J.grad) + gamma * kh.dot(J.hess * chi) + gamma * gamma * grad_w2);
    const double L_phi = gamma * images.L_chi.dot(J.grad) + gamma * gamma * contract(images.L_psi, J.hess);
    return dt_phi - transport / gamma - L_phi / (gamma * gamma);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw ValidationError("slope fit needs at least two matching points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::log(x[i]) - mx;
        sxy += a * (std::log(y[i]) - my);
        sxx += a * a;
    }
    return sxy / sxx;
}

ResidualOrderReport corrector_residual_order(const HeatSolution& heat, const SpatialDiffusionSolution& cell,
                                             const MomentumDiffusionTensors& tensors,
                                             const std::vector<ResidualProbe>& probes,
                                             const std::vector<double>& gammas) {
    std::vector<GeneratorImages> images;
    std::vector<std::size_t> which;
    for (const auto& p : probes) {
        std::size_t i = 0;
        while (i < images.size() && images[i].khat != p.khat) ++i;
        if (i == images.size()) images.push_back(generator_images(cell, tensors, p.khat));
        which.push_back(i);
    }
    ResidualOrderReport r;
    r.gammas = gammas;
    for (double g : gammas) {
        double sup = 0.0;
        for (std::size_t i = 0; i < probes.size(); ++i)
            sup = std::max(sup, std::abs(substitution_residual(heat, cell, images[which[i]], g, probes[i].t,
                                                               probes[i].x)));
        r.sup_residual.push_back(sup);
    }
    r.observed_order = loglog_slope(r.gammas, r.sup_residual);
    return r;
}

std::string residual_report_json(const ResidualOrderReport& r) {
    nlohmann::json j;
    j["gammas"] = r.gammas;
    j["sup_residual"] = r.sup_residual;
    j["observed_order"] = r.observed_order;
    return j.dump(2);
}

}  // namespace raydiff
