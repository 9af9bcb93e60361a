#include "asaprl/sim/route.hpp"

#include <cmath>
#include <numbers>
#include <limits>
#include <stdexcept>

#include "asaprl/core/types.hpp"

namespace asaprl::sim {

void Route::add_straight(double length) {
  if (!(length > 0.0)) throw std::invalid_argument("route segment length must be positive");
  Segment g;
  g.arc = false;
  g.length = length;
  g.s0 = total_;
  g.x0 = end_x_;
  g.y0 = end_y_;
  g.h0 = end_h_;
  segs_.push_back(g);
  end_x_ += length * std::cos(end_h_);
  end_y_ += length * std::sin(end_h_);
  total_ += length;
}

void Route::add_arc(double radius, double angle) {
  if (!(radius > 0.0) || angle == 0.0) throw std::invalid_argument("bad arc parameters");
  Segment g;
  g.arc = true;
  g.radius = radius;
  g.dir = angle > 0.0 ? 1.0 : -1.0;
  g.length = radius * std::abs(angle);
  g.s0 = total_;
  g.x0 = end_x_;
  g.y0 = end_y_;
  g.h0 = end_h_;
  segs_.push_back(g);
  double h1 = end_h_ + angle;
  // center = entry + r * left-normal * dir
  double cx = end_x_ + g.dir * radius * (-std::sin(end_h_));
  double cy = end_y_ + g.dir * radius * std::cos(end_h_);
  end_x_ = cx - g.dir * radius * (-std::sin(h1));
  end_y_ = cy - g.dir * radius * std::cos(h1);
  end_h_ = wrap_angle(h1);
  total_ += g.length;
}

void Route::segment_pose(const Segment& g, double u, double lateral, double& x, double& y,
                         double& heading) const {
  if (!g.arc) {
    double c = std::cos(g.h0), s = std::sin(g.h0);
    x = g.x0 + u * c - lateral * s;
    y = g.y0 + u * s + lateral * c;
    heading = g.h0;
    return;
  }
  double h = g.h0 + g.dir * u / g.radius;
  double cx = g.x0 + g.dir * g.radius * (-std::sin(g.h0));
  double cy = g.y0 + g.dir * g.radius * std::cos(g.h0);
  // point on reference line, then offset along the left normal
  double nx = -std::sin(h), ny = std::cos(h);
  x = cx - g.dir * g.radius * nx + lateral * nx;
  y = cy - g.dir * g.radius * ny + lateral * ny;
  heading = wrap_angle(h);
}

void Route::pose_at(double s, double lateral, double& x, double& y, double& heading) const {
  if (segs_.empty()) throw std::logic_error("empty route");
  const Segment* g = &segs_.front();
  if (s >= total_) g = &segs_.back();
  else {
    for (const auto& seg : segs_) {
      if (s < seg.s0 + seg.length) {
        g = &seg;
        break;
      }
    }
  }
  double u = s - g->s0;
  if (g->arc) {
    // extrapolate arcs tangentially beyond their span
    if (u < 0.0) {
      double px, py, ph;
      segment_pose(*g, 0.0, 0.0, px, py, ph);
      x = px + u * std::cos(ph) - lateral * std::sin(ph);
      y = py + u * std::sin(ph) + lateral * std::cos(ph);
      heading = ph;
      return;
    }
    if (u > g->length) {
      double px, py, ph;
      segment_pose(*g, g->length, 0.0, px, py, ph);
      double e = u - g->length;
      x = px + e * std::cos(ph) - lateral * std::sin(ph);
      y = py + e * std::sin(ph) + lateral * std::cos(ph);
      heading = ph;
      return;
    }
  }
  segment_pose(*g, u, lateral, x, y, heading);
}

double Route::heading_at(double s) const {
  double x, y, h;
  pose_at(s, 0.0, x, y, h);
  return h;
}

double Route::segment_project(const Segment& g, double x, double y, bool first, bool last,
                              double& u_out, double& lat_out) const {
  double u, lat;
  if (!g.arc) {
    double c = std::cos(g.h0), s = std::sin(g.h0);
    double dx = x - g.x0, dy = y - g.y0;
    u = dx * c + dy * s;
    lat = -dx * s + dy * c;
  } else {
    double cx = g.x0 + g.dir * g.radius * (-std::sin(g.h0));
    double cy = g.y0 + g.dir * g.radius * std::cos(g.h0);
    double vx = x - cx, vy = y - cy;
    double r_pt = std::hypot(vx, vy);
    if (r_pt < 1e-9) {
      u_out = 0.0;
      lat_out = g.dir * g.radius;
      return g.radius * g.radius;
    }
    double h, angle;
    if (g.dir > 0.0) {
      h = std::atan2(vx / r_pt, -vy / r_pt);
      angle = wrap_angle(h - g.h0);
      lat = g.radius - r_pt;
    } else {
      h = std::atan2(-vx / r_pt, vy / r_pt);
      angle = wrap_angle(g.h0 - h);
      lat = r_pt - g.radius;
    }
    // the wrap is ambiguous for arcs spanning more than pi radians: pick the
    // branch that lands inside (or nearest to) the segment span
    u = angle * g.radius;
    double alt = (angle + 2.0 * std::numbers::pi) * g.radius;
    auto span_dist = [&](double cand) {
      if (cand < 0.0) return -cand;
      if (cand > g.length) return cand - g.length;
      return 0.0;
    };
    if (span_dist(alt) < span_dist(u)) u = alt;
  }
  double u_clamped = u;
  if (!(first && u < 0.0) && !(last && u > g.length)) u_clamped = clamp(u, 0.0, g.length);
  double px, py, ph;
  if (!g.arc || (u_clamped >= 0.0 && u_clamped <= g.length)) {
    segment_pose(g, u_clamped, 0.0, px, py, ph);
  } else {
    // extrapolated arc region handled as straight from the endpoint
    double base = clamp(u_clamped, 0.0, g.length);
    segment_pose(g, base, 0.0, px, py, ph);
    px += (u_clamped - base) * std::cos(ph);
    py += (u_clamped - base) * std::sin(ph);
  }
  double dx = x - px, dy = y - py;
  u_out = u_clamped;
  lat_out = -dx * std::sin(ph) + dy * std::cos(ph);
  return dx * dx + dy * dy;
}

void Route::project(double x, double y, double& s, double& lateral, double s_hint) const {
  if (segs_.empty()) throw std::logic_error("empty route");
  double best_cost = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < segs_.size(); ++i) {
    double u, lat;
    double d2 = segment_project(segs_[i], x, y, i == 0, i + 1 == segs_.size(), u, lat);
    double cand_s = segs_[i].s0 + u;
    // soft continuity preference: distant-in-s candidates must be clearly closer
    double cost = d2 + 1e-3 * std::min(std::abs(cand_s - s_hint), 100.0);
    if (cost < best_cost) {
      best_cost = cost;
      s = cand_s;
      lateral = lat;
    }
  }
}

}  // namespace asaprl::sim
