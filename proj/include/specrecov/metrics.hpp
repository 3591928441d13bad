#pragma once

#include <cmath>

#include "specrecov/error.hpp"

namespace specrecov {

// Specification violation rate: percentage of intended violations that were
// actually observed. Undefined when nothing was intended.
inline double compute_svr(long observed, long intended) {
  if (intended <= 0)
    throw Error(ErrorCode::undefined_metric, "SVR over zero intended violations");
  return 100.0 * static_cast<double>(observed) / static_cast<double>(intended);
}

// Recovery success rate: percentage of attacked missions that still finished
// successfully (reached the final waypoint without crash or stall).
inline double compute_rsr(long successes, long attacked) {
  if (attacked <= 0)
    throw Error(ErrorCode::undefined_metric, "RSR over zero attacked missions");
  return 100.0 * static_cast<double>(successes) / static_cast<double>(attacked);
}

// Mission delay: completion-time overhead relative to the baseline duration
// T_b = (T_min + T_max) / 2 from attack-free calibration runs.
inline double compute_md(double t_completed, double t_ground_truth,
                         double t_min, double t_max) {
  const double t_b = 0.5 * (t_min + t_max);
  if (!(t_b > 0))
    throw Error(ErrorCode::undefined_metric, "MD with non-positive baseline");
  return 100.0 * (t_completed - t_ground_truth) / t_b;
}

// Time to recovery: seconds from alarm onset until the estimate error drops
// back under the given bound; negative when it never does.
inline double compute_t2r(double alarm_t, double recovered_t) {
  if (recovered_t < alarm_t) return -1.0;
  return recovered_t - alarm_t;
}

}  // namespace specrecov
