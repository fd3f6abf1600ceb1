#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kartmpc/errors.hpp"

namespace kartmpc {

struct TrackSample {
  double s = 0.0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // unwrapped, continuous in s
  double curvature = 0.0;  // zeta = 1/rho, left turns positive
  double w_left = 0.0;
  double w_right = 0.0;
};

// Closed circuit sampled along arc length; linear interpolation between
// samples (~0.1 m apart).
struct Track {
  double length = 0.0;
  bool closed = true;
  std::vector<TrackSample> samples;

  double wrap_s(double s) const;
  double curvature_at(double s) const;
  // Raw signed lateral corridor: (e_y lower, e_y upper) = (-w_right, +w_left).
  std::pair<double, double> bounds_at(double s) const;
  double heading_at(double s) const;  // unwrapped
  std::pair<double, double> position_at(double s) const;
};

// Segment list for synthetic tracks. Positive arc angle turns left.
struct TrackSegment {
  enum class Kind { Straight, Arc } kind = Kind::Straight;
  double length = 0.0;  // straights
  double radius = 0.0;  // arcs
  double angle = 0.0;   // arcs, signed, radians
  static TrackSegment straight(double len) { return {Kind::Straight, len, 0, 0}; }
  static TrackSegment arc(double radius, double angle) {
    return {Kind::Arc, 0, radius, angle};
  }
};

struct TrackSpec {
  std::vector<TrackSegment> segments;
  double w_left = 2.0;
  double w_right = 2.0;
  double resample_ds = 0.1;
};

Track make_synthetic_track(const TrackSpec& spec);

// Stadium circuit of ~180 m with two 180-degree left arcs and a
// right-left-left-right chicane on one straight, so both turn directions
// appear in recorded data.
TrackSpec default_track_spec();

struct FrenetPose {
  double s = 0.0;
  double e_y = 0.0;      // left of centerline positive
  double e_theta = 0.0;  // wrapped to (-pi, pi]
};

FrenetPose global_to_frenet(const Track& track, double x, double y, double psi);
// Inverse reconstruction (x, y, psi); for checks and plotting.
void frenet_to_global(const Track& track, const FrenetPose& fp, double& x,
                      double& y, double& psi);

double wrap_angle(double a);

void save_track(const std::string& path, const Track& track);
Track load_track(const std::string& path);

}  // namespace kartmpc
