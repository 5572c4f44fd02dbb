#pragma once

#include <filesystem>
#include <utility>
#include <vector>

namespace raydiff {

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
/// Preserves monotonicity and sign of the data on every interval.
class Pchip {
  public:
    Pchip() = default;
    Pchip(std::vector<double> x, std::vector<double> y);

    double operator()(double t) const { return eval(t, 0); }
    /// order-th derivative of the interpolant, order in 0..3.
    double eval(double t, int order) const;

    double front() const { return x_.front(); }
    double back() const { return x_.back(); }
    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& y() const { return y_; }

  private:
    std::vector<double> x_, y_, m_;
};

/// Two whitespace-separated columns; '#' starts a comment. The first column
/// must be strictly increasing. Throws ValidationError naming the line.
std::pair<std::vector<double>, std::vector<double>> read_two_column(const std::filesystem::path& path);

}  // namespace raydiff
