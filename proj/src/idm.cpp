#include "bevplan/idm.h"

#include <algorithm>
#include <cmath>

namespace bevplan {

double IdmFreeRoadAcceleration(double v, const IdmParams& params) {
  return params.max_accel *
         (1.0 - std::pow(v / params.desired_speed, params.exponent));
}

double IdmAcceleration(double v, double v_lead, double gap,
                       const IdmParams& params) {
  if (gap < 0.0) return IdmFreeRoadAcceleration(v, params);
  const double s = std::max(gap, 0.1);
  const double s_star =
      params.min_gap +
      std::max(0.0, v * params.headway_time +
                        v * (v - v_lead) /
                            (2.0 * std::sqrt(params.max_accel *
                                             params.comfort_decel)));
  return params.max_accel *
         (1.0 - std::pow(v / params.desired_speed, params.exponent) -
          (s_star / s) * (s_star / s));
}

}  // namespace bevplan
