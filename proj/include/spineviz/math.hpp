#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <limits>

namespace spineviz {

// World frame used throughout: millimetres, x toward the patient's left,
// y cranial (up), z anterior.
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

inline double radians_to_degrees(double r) { return r * 180.0 / kPi; }
inline double degrees_to_radians(double d) { return d * kPi / 180.0; }

// Unit vector orthogonal to `n` (|n| = 1), picked from the least aligned axis.
inline Vec3 any_orthonormal(const Vec3& n) {
    const Vec3 a = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    return n.cross(a).normalized();
}

}  // namespace spineviz
