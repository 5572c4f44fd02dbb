#pragma once

#include <Eigen/Dense>

namespace raydiff {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A point (x, k) of phase space R^d x R^d_*.
struct PhasePoint {
    Vec x;
    Vec k;
};

inline Vec unit(const Vec& v) { return v / v.norm(); }

inline Vec basis_vector(int dim, int i) {
    Vec e = Vec::Zero(dim);
    e(i) = 1.0;
    return e;
}

}  // namespace raydiff
