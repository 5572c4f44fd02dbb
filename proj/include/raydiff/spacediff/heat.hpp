#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "raydiff/raytrace/observable.hpp"
#include "raydiff/spacediff/sphere.hpp"

namespace raydiff {

/// sum_i weight_i exp(-|x - center_i|^2 / (2 s_i^2)).
struct GaussianMixture {
    struct Component {
        double weight = 1.0;
        Vec center;
        double s = 1.0;
    };
    std::vector<Component> components;

    double operator()(const Vec& x) const;
};

/// phi0_bar(x) = (1/Gamma) int phi0(x, k khat) dOmega(khat).
struct AveragedInitialData {
    int dim = 3;
    double k = 1.0;
    std::function<double(const Vec&)> value;
    /// Present when phi0 is a Gaussian-shaped ObservableSpec.
    std::optional<GaussianMixture> gaussian;
    /// Monte Carlo standard error (d > 3 without closed form); 0 otherwise.
    std::function<double(const Vec&)> standard_error;
};

struct AverageOptions {
    int n_theta = 24;          // d = 3 product rule
    int mc_points = 20000;     // d > 3
    std::uint64_t seed = 1;
    /// Skip the analytic path for ObservableSpec inputs.
    bool force_quadrature = false;
};

AveragedInitialData average_initial_data(const PhaseSpaceObservable& phi0, int dim, double k,
                                         const AverageOptions& opt = {});

/// w(t, x) for d_t w = sum a_mn d_m d_n w, i.e. the Gaussian kernel with
/// covariance 2 A t. Gaussian-mixture data are propagated exactly, with
/// x-derivatives up to fourth order.
class HeatSolution {
  public:
    HeatSolution(Mat A, AveragedInitialData data, int gh_nodes = 24);

    const Mat& A() const { return A_; }
    const AveragedInitialData& data() const { return data_; }
    bool analytic() const { return data_.gaussian.has_value(); }

    double value(double t, const Vec& x) const;
    /// Product Gauss-Hermite evaluation, available for any data.
    double value_quadrature(double t, const Vec& x) const;

    /// Analytic derivatives (Gaussian mixtures only).
    struct Jet {
        double w = 0.0;
        Vec grad;
        Mat hess;
        /// third[i](j, l) = d_ijl w.
        std::vector<Mat> third;
        /// d_t d_j w = sum a_mn d_jmn w.
        Vec dt_grad;
        /// d_t d_jl w = sum a_mn d_jlmn w.
        Mat dt_hess;
        double dt = 0.0;
    };
    Jet jet(double t, const Vec& x) const;

  private:
    Mat A_;
    Mat L_;  // Cholesky factor of A
    AveragedInitialData data_;
    int gh_nodes_;
};

/// Evaluates w at each point; values(i) = w(t, x_points[i]).
std::vector<double> solve_heat(const HeatSolution& heat, double t, const std::vector<Vec>& x_points);

/// Columns t, x1..xd, w.
std::string heat_csv(const HeatSolution& heat, const std::vector<double>& times, const std::vector<Vec>& x_points);

}  // namespace raydiff
