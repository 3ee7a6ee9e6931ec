#include "hoep/common.hpp"

#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

namespace hoep {

MatR symplectic_form(int modes) {
    MatR om = MatR::Zero(2 * modes, 2 * modes);
    for (int k = 0; k < modes; ++k) {
        om(2 * k, 2 * k + 1) = 1.0;
        om(2 * k + 1, 2 * k) = -1.0;
    }
    return om;
}

MatC expm(const MatC& a) { return a.exp(); }
MatR expm(const MatR& a) { return a.exp(); }

double condition_number(const MatC& a) {
    Eigen::JacobiSVD<MatC> svd(a);
    const auto& s = svd.singularValues();
    const double lo = s(s.size() - 1);
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / lo;
}

}  // namespace hoep
