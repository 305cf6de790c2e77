#pragma once

#include <cmath>

#include "panoflow/vec.hpp"

namespace panoflow {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kHalfPi = 0.5 * kPi;

/// Longitude theta in [-pi, pi), latitude phi in [-pi/2, pi/2].
/// Theta is measured from +x toward +z; +y is up.
struct SphericalCoord {
  double theta = 0.0;
  double phi = 0.0;
};

/// Wraps an absolute longitude into [-pi, pi).
double wrap_theta(double theta);

/// Wraps a longitude delta into (-pi, pi] so flow takes the short way
/// around the seam.
double wrap_delta_theta(double dt);

/// Builds a normalized coordinate: theta wrapped, phi clamped to the poles.
SphericalCoord make_spherical(double theta, double phi);

/// d must be a unit vector. theta = atan2(z, x), phi = atan2(y, hypot(x, z)).
SphericalCoord dir_to_spherical(const Vec3& d);

Vec3 spherical_to_dir(const SphericalCoord& s);

/// Angle between two unit vectors in [0, pi], stable near 0 and pi.
double great_circle_angle(const Vec3& a, const Vec3& b);

}  // namespace panoflow
