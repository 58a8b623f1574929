#ifndef OPTOLOOP_TYPES_HPP
#define OPTOLOOP_TYPES_HPP

#include <complex>
#include <Eigen/Dense>

namespace optoloop {

using cplx = std::complex<double>;

using Mat6 = Eigen::Matrix<double, 6, 6>;
using CMat6 = Eigen::Matrix<cplx, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using CVec6 = Eigen::Matrix<cplx, 6, 1>;
using CMatX = Eigen::MatrixXcd;
using CVecX = Eigen::VectorXcd;

inline constexpr cplx I{0.0, 1.0};

namespace constants {
// CODATA 2018 / exact SI values.
inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double k_boltzmann = 1.380649e-23;  // J/K
inline constexpr double c_light = 299792458.0;       // m/s
}  // namespace constants

}  // namespace optoloop

#endif
