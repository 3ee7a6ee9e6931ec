#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hoep {

using cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;
using VecR = Eigen::VectorXd;

// Bad input: wrong array lengths, out-of-range parameters, malformed scenarios.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a closed form.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Parameters outside the regime where a construction is defined (e.g. chi^2 <= 0).
struct RegimeError : std::domain_error {
    using std::domain_error::domain_error;
};

// Precondition of an operation violated by the caller.
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

// Requested method does not apply to the configuration.
struct Unsupported : std::logic_error {
    using std::logic_error::logic_error;
};

// Iterative solver failure; message carries the diagnostics.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
    return m.size() ? double(m.cwiseAbs().maxCoeff()) : 0.0;
}

// Omega = I_modes (x) [[0,1],[-1,0]] for the (X1,P1,X2,P2,...) ordering.
MatR symplectic_form(int modes);

// exp(A) by scaling and squaring with a Pade approximant.
MatC expm(const MatC& a);
MatR expm(const MatR& a);

// Ratio of extreme singular values; infinity for a singular matrix.
double condition_number(const MatC& a);

}  // namespace hoep
