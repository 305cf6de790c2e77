#include "panoflow/sphere.hpp"

#include <algorithm>

namespace panoflow {

double wrap_theta(double theta) {
  double r = std::fmod(theta + kPi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r - kPi;
}

double wrap_delta_theta(double dt) {
  double r = std::fmod(kPi - dt, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return kPi - r;
}

SphericalCoord make_spherical(double theta, double phi) {
  return {wrap_theta(theta), std::clamp(phi, -kHalfPi, kHalfPi)};
}

SphericalCoord dir_to_spherical(const Vec3& d) {
  return {wrap_theta(std::atan2(d.z, d.x)), std::atan2(d.y, std::hypot(d.x, d.z))};
}

Vec3 spherical_to_dir(const SphericalCoord& s) {
  const double cp = std::cos(s.phi);
  return {cp * std::cos(s.theta), std::sin(s.phi), cp * std::sin(s.theta)};
}

double great_circle_angle(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace panoflow
