#pragma once

#include <vector>

namespace asaprl::sim {

/// Piecewise straight/arc reference line with a lane-frame (s, lateral)
/// parameterization. Lateral is positive to the left of the direction of
/// travel. Poses extrapolate linearly beyond both ends.
class Route {
 public:
  void add_straight(double length);
  /// Signed angle in radians, positive = left turn.
  void add_arc(double radius, double angle);

  double total_length() const { return total_; }
  int segment_count() const { return static_cast<int>(segs_.size()); }

  void pose_at(double s, double lateral, double& x, double& y, double& heading) const;
  double heading_at(double s) const;

  /// Project a world point to (s, lateral). When several segments are
  /// plausible (e.g. a roundabout exit passing near the entry), candidates
  /// near s_hint are preferred.
  void project(double x, double y, double& s, double& lateral, double s_hint) const;

 private:
  struct Segment {
    bool arc = false;
    double length = 0.0;
    double s0 = 0.0;            // cumulative arc length at entry
    double x0 = 0.0, y0 = 0.0;  // entry pose
    double h0 = 0.0;
    double radius = 0.0;  // arc only
    double dir = 0.0;     // +1 left, -1 right
  };

  void segment_pose(const Segment& g, double u, double lateral, double& x, double& y,
                    double& heading) const;
  // returns squared distance of the foot point; u_out clamped to the segment
  // unless it is the first/last one
  double segment_project(const Segment& g, double x, double y, bool first, bool last,
                         double& u_out, double& lat_out) const;

  std::vector<Segment> segs_;
  double total_ = 0.0;
  double end_x_ = 0.0, end_y_ = 0.0, end_h_ = 0.0;
};

}  // namespace asaprl::sim
