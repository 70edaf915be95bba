#ifndef TACSIM_TYPES_HPP
#define TACSIM_TYPES_HPP

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace tacsim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;
using Quat = Eigen::Quaterniond;
using VecX = Eigen::VectorXd;

/// Bad user input (shapes, ranges, malformed files). Maps to CLI exit code 2.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A contact distance reached zero or below. Always indicates a solver bug
/// or an infeasible scripted configuration.
class FeasibilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure inside a simulation step. Maps to CLI exit code 3.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline Vec3 vertex(const VecX& x, int i) { return x.segment<3>(3 * i); }

inline VecX flatten(const std::vector<Vec3>& pts) {
    VecX x(3 * pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) x.segment<3>(3 * i) = pts[i];
    return x;
}

inline std::vector<Vec3> unflatten(const VecX& x) {
    std::vector<Vec3> pts(x.size() / 3);
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = x.segment<3>(3 * i);
    return pts;
}

} // namespace tacsim

#endif
