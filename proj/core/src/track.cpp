#include "kartmpc/track.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace kartmpc {

double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

double Track::wrap_s(double s) const {
  if (closed) {
    s = std::fmod(s, length);
    if (s < 0.0) s += length;
    return s;
  }
  if (s < 0.0 || s > length)
    throw std::invalid_argument("track: abscissa out of range on open track");
  return s;
}

namespace {

// index of the sample interval containing s, plus interpolation weight
std::pair<std::size_t, double> locate(const Track& t, double s) {
  const double ds = t.length / static_cast<double>(t.samples.size());
  std::size_t i = static_cast<std::size_t>(std::floor(s / ds));
  if (i >= t.samples.size()) i = t.samples.size() - 1;
  // guard against rounding at interval edges
  while (i + 1 < t.samples.size() && s >= t.samples[i + 1].s) ++i;
  while (i > 0 && s < t.samples[i].s) --i;
  const double s0 = t.samples[i].s;
  const double s1 = (i + 1 < t.samples.size()) ? t.samples[i + 1].s : t.length;
  const double w = (s1 > s0) ? (s - s0) / (s1 - s0) : 0.0;
  return {i, w};
}

const TrackSample& next_sample(const Track& t, std::size_t i) {
  return t.samples[(i + 1) % t.samples.size()];
}

}  // namespace

double Track::curvature_at(double s) const {
  s = wrap_s(s);
  auto [i, w] = locate(*this, s);
  const TrackSample& a = samples[i];
  const TrackSample& b = next_sample(*this, i);
  return (1.0 - w) * a.curvature + w * b.curvature;
}

std::pair<double, double> Track::bounds_at(double s) const {
  s = wrap_s(s);
  auto [i, w] = locate(*this, s);
  const TrackSample& a = samples[i];
  const TrackSample& b = next_sample(*this, i);
  const double wl = (1.0 - w) * a.w_left + w * b.w_left;
  const double wr = (1.0 - w) * a.w_right + w * b.w_right;
  return {-wr, wl};
}

double Track::heading_at(double s) const {
  s = wrap_s(s);
  auto [i, w] = locate(*this, s);
  const TrackSample& a = samples[i];
  double hb;
  if (i + 1 < samples.size()) {
    hb = samples[i + 1].heading;
  } else {
    // closing interval: continue the unwrapped heading past the last sample
    hb = samples.back().heading +
         samples.back().curvature * (length - samples.back().s);
  }
  return (1.0 - w) * a.heading + w * hb;
}

std::pair<double, double> Track::position_at(double s) const {
  s = wrap_s(s);
  auto [i, w] = locate(*this, s);
  const TrackSample& a = samples[i];
  const TrackSample& b = next_sample(*this, i);
  return {(1.0 - w) * a.x + w * b.x, (1.0 - w) * a.y + w * b.y};
}

Track make_synthetic_track(const TrackSpec& spec) {
  if (spec.segments.empty())
    throw std::invalid_argument("make_synthetic_track: no segments");
  if (spec.w_left <= 0.5 || spec.w_right <= 0.5)
    throw std::invalid_argument(
        "make_synthetic_track: half-widths must exceed 0.5 m");

  struct SegGeom {
    double s0;      // start abscissa
    double len;
    double x0, y0, h0;
    const TrackSegment* seg;
  };
  std::vector<SegGeom> geoms;
  double x = 0.0, y = 0.0, h = 0.0, s = 0.0;
  for (const auto& seg : spec.segments) {
    SegGeom g{s, 0.0, x, y, h, &seg};
    if (seg.kind == TrackSegment::Kind::Straight) {
      if (seg.length <= 0.0)
        throw std::invalid_argument("make_synthetic_track: straight length <= 0");
      g.len = seg.length;
      x += seg.length * std::cos(h);
      y += seg.length * std::sin(h);
    } else {
      if (seg.radius <= 0.0 || seg.angle == 0.0)
        throw std::invalid_argument("make_synthetic_track: bad arc");
      g.len = seg.radius * std::abs(seg.angle);
      const double sgn = seg.angle > 0.0 ? 1.0 : -1.0;
      // circle center sits a radius to the left (or right) of the heading
      const double cx = x - sgn * seg.radius * std::sin(h);
      const double cy = y + sgn * seg.radius * std::cos(h);
      const double h1 = h + seg.angle;
      x = cx + sgn * seg.radius * std::sin(h1);
      y = cy - sgn * seg.radius * std::cos(h1);
      h = h1;
    }
    s += g.len;
    geoms.push_back(g);
  }
  const double total = s;
  if (std::hypot(x, y) > 1e-3 || std::abs(wrap_angle(h)) > 1e-3)
    throw std::invalid_argument("make_synthetic_track: segment list does not close");

  Track track;
  track.closed = true;
  track.length = total;
  const std::size_t n =
      static_cast<std::size_t>(std::ceil(total / spec.resample_ds));
  const double ds = total / static_cast<double>(n);
  track.samples.reserve(n);

  std::size_t gi = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double sk = static_cast<double>(k) * ds;
    while (gi + 1 < geoms.size() && sk >= geoms[gi].s0 + geoms[gi].len) ++gi;
    const SegGeom& g = geoms[gi];
    const double u = sk - g.s0;
    TrackSample smp;
    smp.s = sk;
    smp.w_left = spec.w_left;
    smp.w_right = spec.w_right;
    if (g.seg->kind == TrackSegment::Kind::Straight) {
      smp.x = g.x0 + u * std::cos(g.h0);
      smp.y = g.y0 + u * std::sin(g.h0);
      smp.heading = g.h0;
      smp.curvature = 0.0;
    } else {
      const double sgn = g.seg->angle > 0.0 ? 1.0 : -1.0;
      const double cx = g.x0 - sgn * g.seg->radius * std::sin(g.h0);
      const double cy = g.y0 + sgn * g.seg->radius * std::cos(g.h0);
      const double hu = g.h0 + sgn * u / g.seg->radius;
      smp.x = cx + sgn * g.seg->radius * std::sin(hu);
      smp.y = cy - sgn * g.seg->radius * std::cos(hu);
      smp.heading = hu;
      smp.curvature = sgn / g.seg->radius;
    }
    track.samples.push_back(smp);
  }
  return track;
}

TrackSpec default_track_spec() {
  // stadium with a chicane: total length exactly 180 m
  const double r_main = 8.0;
  const double r_c = 6.0;
  const double theta = M_PI / 4.0;
  const double chicane_arc = 4.0 * r_c * theta;
  const double chicane_advance = 4.0 * r_c * std::sin(theta);
  const double total = 180.0;
  const double arcs = 2.0 * M_PI * r_main;
  // straight side L1 and chicane side (pre + advance + post = L1)
  const double l1 = (total - arcs - chicane_arc + chicane_advance) / 2.0;
  const double pre = (l1 - chicane_advance) / 2.0;

  TrackSpec spec;
  spec.w_left = 2.0;
  spec.w_right = 2.0;
  spec.segments = {
      TrackSegment::straight(l1),
      TrackSegment::arc(r_main, M_PI),
      TrackSegment::straight(pre),
      TrackSegment::arc(r_c, -theta),
      TrackSegment::arc(r_c, theta),
      TrackSegment::arc(r_c, theta),
      TrackSegment::arc(r_c, -theta),
      TrackSegment::straight(pre),
      TrackSegment::arc(r_main, M_PI),
  };
  return spec;
}

namespace {

double point_dist2(const Track& t, double s, double px, double py) {
  auto [cx, cy] = t.position_at(s);
  const double dx = px - cx, dy = py - cy;
  return dx * dx + dy * dy;
}

}  // namespace

FrenetPose global_to_frenet(const Track& track, double x, double y, double psi) {
  // coarse scan over the samples, then golden-section refine
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < track.samples.size(); ++i) {
    const double dx = x - track.samples[i].x;
    const double dy = y - track.samples[i].y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  const double ds = track.length / static_cast<double>(track.samples.size());
  double lo = track.samples[best].s - 1.5 * ds;
  double hi = track.samples[best].s + 1.5 * ds;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
  double fa = point_dist2(track, a, x, y), fb = point_dist2(track, b, x, y);
  while (hi - lo > 1e-7) {
    if (fa < fb) {
      hi = b; b = a; fb = fa;
      a = hi - gr * (hi - lo);
      fa = point_dist2(track, a, x, y);
    } else {
      lo = a; a = b; fa = fb;
      b = lo + gr * (hi - lo);
      fb = point_dist2(track, b, x, y);
    }
  }
  FrenetPose fp;
  fp.s = track.wrap_s(0.5 * (lo + hi));
  const double h = track.heading_at(fp.s);
  auto [cx, cy] = track.position_at(fp.s);
  fp.e_y = -(x - cx) * std::sin(h) + (y - cy) * std::cos(h);
  fp.e_theta = wrap_angle(psi - h);

  double max_hw = 0.0;
  for (const auto& smp : track.samples)
    max_hw = std::max({max_hw, smp.w_left, smp.w_right});
  if (std::abs(fp.e_y) > max_hw + 2.0)
    throw LocalizationError("global_to_frenet: position too far from centerline");
  return fp;
}

void frenet_to_global(const Track& track, const FrenetPose& fp, double& x,
                      double& y, double& psi) {
  const double h = track.heading_at(fp.s);
  auto [cx, cy] = track.position_at(fp.s);
  x = cx - fp.e_y * std::sin(h);
  y = cy + fp.e_y * std::cos(h);
  psi = wrap_angle(h + fp.e_theta);
}

void save_track(const std::string& path, const Track& track) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write track file: " + path);
  char buf[256];
  std::snprintf(buf, sizeof(buf), "kartmpc-track v1\nlength %.17g closed %d\n",
                track.length, track.closed ? 1 : 0);
  os << buf << "s x y heading curvature w_left w_right\n";
  for (const auto& smp : track.samples) {
    std::snprintf(buf, sizeof(buf),
                  "%.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", smp.s, smp.x,
                  smp.y, smp.heading, smp.curvature, smp.w_left, smp.w_right);
    os << buf;
  }
}

Track load_track(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read track file: " + path);
  std::string line;
  if (!std::getline(is, line) || line != "kartmpc-track v1")
    throw std::invalid_argument("track file: bad header");
  Track t;
  if (!std::getline(is, line))
    throw std::invalid_argument("track file: truncated");
  {
    std::istringstream ss(line);
    std::string k1, k2;
    int closed = 1;
    if (!(ss >> k1 >> t.length >> k2 >> closed) || k1 != "length" || k2 != "closed")
      throw std::invalid_argument("track file: bad length line");
    t.closed = closed != 0;
  }
  std::getline(is, line);  // column header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    TrackSample smp;
    if (!(ss >> smp.s >> smp.x >> smp.y >> smp.heading >> smp.curvature >>
          smp.w_left >> smp.w_right))
      throw std::invalid_argument("track file: bad sample row");
    t.samples.push_back(smp);
  }
  if (t.samples.empty()) throw std::invalid_argument("track file: no samples");
  for (std::size_t i = 1; i < t.samples.size(); ++i)
    if (t.samples[i].s <= t.samples[i - 1].s)
      throw std::invalid_argument("track file: abscissae not increasing");
  return t;
}

}  // namespace kartmpc
