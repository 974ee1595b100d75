#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sphero/controller.h"
#include "sphero/dynamics.h"
#include "sphero/reference.h"

namespace sphero {

struct InitialConditions {
  Vec3 o{2.0, -2.0, 0.0};  // z is replaced by the radius
  Vec3 w{-0.1, -0.2, 0.5};
  /// Cart and gyroscopic actuators.
  Vec3 actuator_w{0.2, -0.1, 0.1};
  /// Wheel pairs: axial rate R Gamma_i . w_i of each pair.
  std::vector<double> wheel_spin{0.2, -0.1, 0.1};
};

struct ScenarioConfig {
  std::string name{"scenario"};
  /// True plant parameters. e_g and e_g0 are overwritten from the inclines.
  RobotParams params;
  /// The controller sees every mass and inertia diagonal scaled by (1 + u),
  /// u uniform in [-perturb, perturb].
  double perturb{0.5};
  std::uint64_t seed{1};
  double incline{0.0};          // rad, true plane
  double nominal_incline{0.0};  // rad, assumed by the controller
  ReferenceTrajectory reference;
  ControllerGains gains;
  Vec3 disturbance{Vec3::Zero()};
  InitialConditions initial;
  double h{1e-3};
  double duration{60.0};
  int decimation{10};
  /// With the controller off all control moments are zero and o_I is frozen.
  bool controller_enabled{true};
};

/// Throws ValidationError naming the offending field.
void validate(const ScenarioConfig& c);

/// Controller parameters drawn from the true ones.
RobotParams perturbed(const RobotParams& p, double fraction,
                      std::uint64_t seed);

struct StageEval {
  ReferenceSample ref;
  Vec3 w_ref{Vec3::Zero()};
  ErrorState err;
  ControlOutput control;
  Accelerations acc;
  Vec3 o_I_dot{Vec3::Zero()};
};

/// Closed-loop plant for one scenario. Immutable after construction, so one
/// instance may be shared by threads.
class Simulator {
 public:
  explicit Simulator(const ScenarioConfig& config);

  const ScenarioConfig& config() const { return config_; }
  const RobotParams& truth() const { return truth_; }
  const RobotParams& nominal() const { return nominal_; }

  SystemState initial_state() const;
  StageEval evaluate(const SystemState& s, double t) const;

  /// One step of the Runge-Kutta-Munthe-Kaas method of order 4. Rotations
  /// are advanced through exp_so3 with the dexp_inv correction, the centre
  /// through noslip_velocity. Attitudes are re-projected when their drift
  /// exceeds 1e-9 and wheel velocities are returned to their axes.
  SystemState step(const SystemState& s, double t) const;
  SystemState step(const SystemState& s, double t,
                   const StageEval& first) const;

 private:
  ScenarioConfig config_;
  RobotParams truth_;
  RobotParams nominal_;
};

/// Convenience form of Simulator(config).step(s, t).
SystemState step(const SystemState& s, const ScenarioConfig& config,
                 double t);

struct LogRow {
  double t{0.0};
  Vec3 o, o_ref, o_e, w_e, o_I;
  std::vector<Vec3> w_i;
  std::vector<double> spin;  // wheel axial rates
  std::vector<Vec3> tau;
  std::vector<double> u;     // wheel torques
  double f_n{0.0};
};

struct RunSummary {
  std::string name;
  bool ok{true};
  std::string error;
  double terminal_error{0.0};
  double max_actuator_speed{0.0};
  double max_wheel_spin{0.0};
  double fit_slope{0.0};
  double fit_r2{0.0};
  bool contact_lost{false};
  Vec3 terminal_o_I{Vec3::Zero()};
  std::size_t rows{0};
};

struct TrajectoryLog {
  ActuatorClass kind{ActuatorClass::kBarycentricCart};
  std::size_t actuators{0};
  std::vector<LogRow> rows;
  RunSummary summary;
};

/// Integrates [0, T]. Numerical failures are reported in summary.ok/error
/// together with the rows logged so far.
TrajectoryLog run(const ScenarioConfig& config);

/// Least-squares line through (t, log |o_e|) for t <= fraction * T.
void fit_exponential(const TrajectoryLog& log, double t_end, double fraction,
                     double* slope, double* r2);

std::vector<std::string> csv_header(const TrajectoryLog& log);
void write_csv(const TrajectoryLog& log, std::ostream& out);
/// key = value lines.
std::string summary_text(const RunSummary& s);

/// Runs each scenario on up to `parallel` threads. Failures stay confined to
/// their own row. Results are in input order.
std::vector<TrajectoryLog> campaign(const std::vector<ScenarioConfig>& configs,
                                    int parallel);

}  // namespace sphero
