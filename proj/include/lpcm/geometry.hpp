// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Cartesian/spherical coordinate transforms for rotating-head LiDAR, laser
// calibration handling, and the closed-form per-axis distortion calculus.

#ifndef LPCM_GEOMETRY_HPP_
#define LPCM_GEOMETRY_HPP_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lpcm {

struct CartesianPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

using PointCloud = std::vector<CartesianPoint>;

// Spherical sample as coded: r is the HORIZONTAL radius sqrt(x^2 + y^2),
// not the 3D range; phi is the azimuth in degrees in (-180, 180]; theta is
// the elevation in degrees in (-90, 90).
struct SphericalPoint {
  double r = 0.0;
  double phi = 0.0;
  double theta = 0.0;
  int laser_id = 0;
};

// Per-laser mounting geometry of a rotating-head scanner: nominal elevation
// angle and vertical offset of each laser, indexed by dense IDs 0..N-1.
class LaserCalibration {
 public:
  struct Laser {
    double elevation_deg = 0.0;
    double height_m = 0.0;
  };

  // Throws ConfigError unless elevations are strictly monotonic in the ID.
  explicit LaserCalibration(std::vector<Laser> lasers);

  // Parses `<laser_id> <elevation_deg> <height_m>` lines; '#' starts a
  // comment; IDs must cover 0..N-1. Throws FormatError on malformed input
  // and ConfigError on invalid geometry.
  static LaserCalibration parse(std::istream& in);
  static LaserCalibration load(const std::string& path);

  std::size_t laser_count() const { return lasers_.size(); }
  const Laser& laser(std::size_t id) const { return lasers_[id]; }
  const std::vector<Laser>& lasers() const { return lasers_; }

 private:
  std::vector<Laser> lasers_;
};

// Picks the laser whose predicted height at the point's horizontal radius
// is closest to the observed z (smallest ID on ties). Throws
// InvalidInputError when r = 0.
int assign_laser_id(const CartesianPoint& p, const LaserCalibration& calib);

// Forward transform. With calibration the laser is assigned first and its
// height offset enters the elevation; r = 0 degenerates to phi = 0 and a
// clamped elevation of +/-89.999999 degrees. Throws InvalidInputError on
// non-finite input.
SphericalPoint cartesian_to_spherical(const CartesianPoint& p,
                                      const LaserCalibration* calib = nullptr);

// Inverse transform: x = r cos(phi), y = r sin(phi),
// z = r tan(theta) - height(laser). Throws InvalidInputError for
// |theta| >= 90.
CartesianPoint spherical_to_cartesian(const SphericalPoint& s,
                                      const LaserCalibration* calib = nullptr);

// Cartesian error caused by a radius error delta_r at elevation theta:
// delta_r / cos(theta).
double axis_distortion_radius(double delta_r_m, double theta_deg);

// Cartesian error caused by an elevation error delta_theta at horizontal
// radius r: r sin(delta_theta) / (cos(theta) cos(theta + delta_theta)).
// This is the exact vertical displacement of a point whose horizontal
// radius is held fixed; see the docs for how it relates to the chord form.
double axis_distortion_elevation(double r_m, double theta_deg,
                                 double delta_theta_deg);

// Cartesian error caused by an azimuth error delta_phi at horizontal
// radius r: the chord 2 r sin(delta_phi / 2).
double axis_distortion_azimuth(double r_m, double delta_phi_deg);

// Perturbation of exactly one spherical axis, for distortion studies.
struct AxisPerturbation {
  double delta_r_m = 0.0;
  double delta_theta_deg = 0.0;
  double delta_phi_deg = 0.0;
};

// Dispatches to the axis_distortion_* function for the one nonzero field.
// Throws InvalidInputError unless exactly one field is nonzero.
double axis_distortion(const AxisPerturbation& pert, double r_m,
                       double theta_deg);

// Median positive azimuth step between consecutive points of the same
// laser, in degrees. `laser_groups` holds each laser's azimuths in
// acquisition order. Throws InvalidInputError when no group has two points.
double estimate_angular_resolution(
    const std::vector<std::vector<double>>& laser_groups);

}  // namespace lpcm

#endif  // LPCM_GEOMETRY_HPP_
