// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpcm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "lpcm/errors.hpp"

namespace lpcm {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kDegToRad = kPi / 180.0;
constexpr double kRadToDeg = 180.0 / kPi;
constexpr double kClampedElevationDeg = 89.999999;

bool finite_point(const CartesianPoint& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

}  // namespace

LaserCalibration::LaserCalibration(std::vector<Laser> lasers)
    : lasers_(std::move(lasers)) {
  if (lasers_.empty()) throw ConfigError("calibration has no lasers");
  if (lasers_.size() > 1) {
    bool increasing = lasers_[1].elevation_deg > lasers_[0].elevation_deg;
    for (std::size_t i = 1; i < lasers_.size(); ++i) {
      double prev = lasers_[i - 1].elevation_deg;
      double cur = lasers_[i].elevation_deg;
      bool ok = increasing ? cur > prev : cur < prev;
      if (!ok) {
        std::ostringstream msg;
        msg << "laser elevations must be strictly monotonic; entry " << i
            << " (" << cur << " deg) breaks the trend";
        throw ConfigError(msg.str());
      }
    }
  }
}

LaserCalibration LaserCalibration::parse(std::istream& in) {
  struct Row {
    long id;
    Laser laser;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    long id;
    double elevation, height;
    if (!(fields >> id)) continue;  // blank or comment-only line
    if (!(fields >> elevation >> height)) {
      std::ostringstream msg;
      msg << "calibration line " << line_no
          << ": expected `<laser_id> <elevation_deg> <height_m>`";
      throw FormatError(msg.str());
    }
    std::string extra;
    if (fields >> extra) {
      std::ostringstream msg;
      msg << "calibration line " << line_no << ": trailing field `" << extra
          << "`";
      throw FormatError(msg.str());
    }
    if (id < 0) {
      std::ostringstream msg;
      msg << "calibration line " << line_no << ": negative laser ID " << id;
      throw FormatError(msg.str());
    }
    rows.push_back({id, {elevation, height}});
  }
  if (rows.empty()) throw FormatError("calibration file has no laser entries");
  std::vector<Laser> lasers(rows.size());
  std::vector<bool> seen(rows.size(), false);
  for (const Row& row : rows) {
    if (row.id >= static_cast<long>(rows.size()) || seen[static_cast<std::size_t>(row.id)]) {
      std::ostringstream msg;
      msg << "laser IDs must be dense 0.." << rows.size() - 1
          << " without repeats; offending ID " << row.id;
      throw FormatError(msg.str());
    }
    seen[static_cast<std::size_t>(row.id)] = true;
    lasers[static_cast<std::size_t>(row.id)] = row.laser;
  }
  return LaserCalibration(std::move(lasers));
}

LaserCalibration LaserCalibration::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open calibration file: " + path);
  return parse(in);
}

int assign_laser_id(const CartesianPoint& p, const LaserCalibration& calib) {
  if (!finite_point(p)) throw InvalidInputError("non-finite point");
  double r = std::hypot(p.x, p.y);
  if (r == 0.0) {
    throw InvalidInputError("laser assignment undefined for r = 0");
  }
  int best = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < calib.laser_count(); ++j) {
    const auto& laser = calib.laser(j);
    double residual =
        std::abs(p.z + laser.height_m - r * std::tan(laser.elevation_deg * kDegToRad));
    if (residual < best_residual) {
      best_residual = residual;
      best = static_cast<int>(j);
    }
  }
  return best;
}

SphericalPoint cartesian_to_spherical(const CartesianPoint& p,
                                      const LaserCalibration* calib) {
  if (!finite_point(p)) throw InvalidInputError("non-finite point");
  SphericalPoint s;
  s.r = std::hypot(p.x, p.y);
  if (s.r == 0.0) {
    // Degenerate column along the scanner axis: azimuth is arbitrary, the
    // elevation saturates. The laser falls back to the closest height match.
    s.phi = 0.0;
    double lifted = p.z;
    if (calib) {
      int best = 0;
      double best_residual = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < calib->laser_count(); ++j) {
        double residual = std::abs(p.z + calib->laser(j).height_m);
        if (residual < best_residual) {
          best_residual = residual;
          best = static_cast<int>(j);
        }
      }
      s.laser_id = best;
      lifted += calib->laser(static_cast<std::size_t>(best)).height_m;
    }
    s.theta = lifted > 0.0   ? kClampedElevationDeg
              : lifted < 0.0 ? -kClampedElevationDeg
                             : 0.0;
    return s;
  }
  s.phi = std::atan2(p.y, p.x) * kRadToDeg;
  if (s.phi <= -180.0) s.phi += 360.0;
  double lifted = p.z;
  if (calib) {
    s.laser_id = assign_laser_id(p, *calib);
    lifted += calib->laser(static_cast<std::size_t>(s.laser_id)).height_m;
  }
  s.theta = std::atan2(lifted, s.r) * kRadToDeg;
  return s;
}

CartesianPoint spherical_to_cartesian(const SphericalPoint& s,
                                      const LaserCalibration* calib) {
  if (!(std::isfinite(s.r) && std::isfinite(s.phi) && std::isfinite(s.theta))) {
    throw InvalidInputError("non-finite spherical point");
  }
  if (std::abs(s.theta) >= 90.0) {
    throw InvalidInputError("elevation must satisfy |theta| < 90 degrees");
  }
  double phi_rad = s.phi * kDegToRad;
  double theta_rad = s.theta * kDegToRad;
  CartesianPoint p;
  p.x = s.r * std::cos(phi_rad);
  p.y = s.r * std::sin(phi_rad);
  p.z = s.r * std::tan(theta_rad);
  if (calib) {
    if (s.laser_id < 0 ||
        static_cast<std::size_t>(s.laser_id) >= calib->laser_count()) {
      throw InvalidInputError("laser ID outside calibration range");
    }
    p.z -= calib->laser(static_cast<std::size_t>(s.laser_id)).height_m;
  }
  return p;
}

double axis_distortion_radius(double delta_r_m, double theta_deg) {
  if (std::abs(theta_deg) >= 90.0) {
    throw InvalidInputError("|theta| must be < 90 degrees");
  }
  return std::abs(delta_r_m) / std::cos(theta_deg * kDegToRad);
}

double axis_distortion_elevation(double r_m, double theta_deg,
                                 double delta_theta_deg) {
  double theta = theta_deg * kDegToRad;
  double delta = delta_theta_deg * kDegToRad;
  if (std::abs(theta_deg) >= 90.0 || std::abs(theta_deg + delta_theta_deg) >= 90.0) {
    throw InvalidInputError("|theta| and |theta + delta| must be < 90 degrees");
  }
  // Vertical displacement of a fixed-horizontal-radius point:
  // r |tan(theta + d) - tan(theta)| = r sin(d) / (cos(theta) cos(theta + d)).
  return std::abs(r_m * std::sin(delta) / (std::cos(theta) * std::cos(theta + delta)));
}

double axis_distortion_azimuth(double r_m, double delta_phi_deg) {
  // Chord form 2 r sin(d/2); algebraically equal to r sqrt(2 (1 - cos d))
  // but without the cancellation that form suffers for small d.
  return std::abs(2.0 * r_m * std::sin(0.5 * delta_phi_deg * kDegToRad));
}

double axis_distortion(const AxisPerturbation& pert, double r_m,
                       double theta_deg) {
  int nonzero = (pert.delta_r_m != 0.0) + (pert.delta_theta_deg != 0.0) +
                (pert.delta_phi_deg != 0.0);
  if (nonzero != 1) {
    throw InvalidInputError("exactly one perturbation axis must be nonzero");
  }
  if (pert.delta_r_m != 0.0) return axis_distortion_radius(pert.delta_r_m, theta_deg);
  if (pert.delta_theta_deg != 0.0) {
    return axis_distortion_elevation(r_m, theta_deg, pert.delta_theta_deg);
  }
  return axis_distortion_azimuth(r_m, pert.delta_phi_deg);
}

double estimate_angular_resolution(
    const std::vector<std::vector<double>>& laser_groups) {
  std::vector<double> deltas;
  for (const auto& group : laser_groups) {
    for (std::size_t i = 1; i < group.size(); ++i) {
      double d = group[i] - group[i - 1];
      if (d > 0.0) deltas.push_back(d);
    }
  }
  if (deltas.empty()) {
    throw InvalidInputError(
        "angular resolution needs at least two points on one laser");
  }
  std::size_t mid = deltas.size() / 2;
  std::nth_element(deltas.begin(), deltas.begin() + static_cast<std::ptrdiff_t>(mid),
                   deltas.end());
  double median = deltas[mid];
  if (deltas.size() % 2 == 0) {
    double lower = *std::max_element(deltas.begin(),
                                     deltas.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (lower + median);
  }
  return median;
}

}  // namespace lpcm
