#pragma once

#include <vector>

#include "raydiff/common/interp.hpp"

namespace raydiff {

enum class HamiltonianKind { Quadratic, Acoustic, Tabulated };

/// Isotropic background Hamiltonian H0(|k|), strictly increasing on (0, inf).
class BackgroundHamiltonian {
  public:
    static BackgroundHamiltonian quadratic();
    static BackgroundHamiltonian acoustic(double c0);
    /// Monotone cubic interpolant of (k, H0(k)) samples; H0 values must be
    /// strictly increasing and H0(first k) >= 0.
    static BackgroundHamiltonian tabulated(std::vector<double> k, std::vector<double> h0);

    HamiltonianKind kind() const { return kind_; }
    double c0() const { return c0_; }

    /// order-th derivative, order in 0..3.
    double eval(double k, int order) const;
    double value(double k) const { return eval(k, 0); }
    double d1(double k) const { return eval(k, 1); }
    double inverse(double value) const;

    /// max over [1/M, M] of H0' + |H0''| + |H0'''|.
    double h_upper(double M) const;
    /// min over [1/M, M] of H0'.
    double h_lower(double M) const;

  private:
    HamiltonianKind kind_ = HamiltonianKind::Quadratic;
    double c0_ = 1.0;
    Pchip table_;
};

}  // namespace raydiff
