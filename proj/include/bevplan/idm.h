#ifndef BEVPLAN_IDM_H_
#define BEVPLAN_IDM_H_

namespace bevplan {

// Intelligent Driver Model parameters, standard published values.
struct IdmParams {
  double desired_speed = 8.0;   // v0; overridden by lane speed in sim
  double headway_time = 1.5;    // T, s
  double max_accel = 1.5;       // a, m/s^2
  double comfort_decel = 2.0;   // b, m/s^2
  double min_gap = 2.0;         // s0, m
  double exponent = 4.0;        // delta
};

// IDM acceleration for a follower at speed v with a lead vehicle at
// bumper-to-bumper `gap` moving at v_lead. Pass a negative gap sentinel
// (or call IdmFreeRoadAcceleration) when there is no leader.
double IdmAcceleration(double v, double v_lead, double gap,
                       const IdmParams& params);

double IdmFreeRoadAcceleration(double v, const IdmParams& params);

}  // namespace bevplan

#endif  // BEVPLAN_IDM_H_
