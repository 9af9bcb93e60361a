#pragma once

#include "asaprl/demo/io.hpp"
#include "asaprl/recovery/recovery.hpp"

namespace asaprl::recovery {

struct RecoveryReport {
  int segments = 0;
  int converged = 0;
  int flagged = 0;
  double mean_residual = 0.0;
  double residual_histogram[8] = {0};  // counts; bucket edges in report JSON
  double convergence_rate() const { return segments ? double(converged) / segments : 0.0; }
  std::string to_json_string() const;
};

struct AnnotateOptions {
  RecoveryConfig recovery;
  int segment_stride = 1;  // recover every k-th segment (subsampling knob)
  int jobs = 1;            // parallel workers; output order is index-keyed
};

/// Convert control-space demonstrations into skill space: replay each
/// trajectory to capture observations at decision points, split into T-step
/// windows, and run inverse recovery per window. Per-segment failures are
/// recorded, never fatal.
demo::SkillDataset annotate_demonstrations(const demo::ControlDemoSet& demos,
                                           const SkillBounds& bounds, int skill_steps,
                                           const AnnotateOptions& opt,
                                           RecoveryReport* report = nullptr);

}  // namespace asaprl::recovery
