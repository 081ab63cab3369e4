#pragma once

#include "confined/domain.hpp"
#include "confined/integrators.hpp"
#include "confined/rng.hpp"
#include "confined/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace confined {

/// Time grid and coefficients shared by both diffusions. The grid is
/// uniform with N h = T exactly.
struct DynamicsConfig {
  Drift<double> drift;
  double gamma = 1.0;
  double T = 1.0;
  double h = 0.01;
  bool rademacher = false;

  int steps() const;
  void validate() const;
};

enum class ForwardModel { Cld, Reflected, Unconstrained };

ForwardModel forward_model_from_string(const std::string& name);
std::string to_string(ForwardModel model);

struct ForwardConfig {
  ForwardModel model = ForwardModel::Cld;
  KineticScheme kinetic_scheme = KineticScheme::AcOAc;
  ReflectedMethod reflected_method = ReflectedMethod::Symmetrized;
  ReflectedParams<double> reflected_params;
  Domain<double> domain;
  DynamicsConfig dynamics;
};

/// Sparse record of the boundary interactions of one trajectory.
struct ExitEvent {
  int step = 0;  // event happened between t_step and t_{step+1}
  double d = 0.0;
  VecXd p_proj;
  VecXd n_proj;
  int reflections = 0;
  bool fallback = false;
};

/// Forward trajectories on the uniform grid. positions[k] (and, for the
/// kinetic model, velocities[k]) hold the batch state at t_k = k h, row per
/// trajectory. Boundary events are stored sparsely per trajectory.
struct TrajectoryBatch {
  int n_trajectories = 0;
  int n_steps = 0;
  int dim = 0;
  double h = 0.0;
  bool kinetic = false;
  std::vector<MatXd> positions;
  std::vector<MatXd> velocities;
  std::vector<std::vector<ExitEvent>> events;

  double t(int k) const { return k * h; }
};

/// Simulate a batch of forward trajectories, one per row of x0. Trajectory i
/// draws from NoiseStream(seed, stream_offset + i); results are bit-identical
/// whatever the worker count. For the kinetic model v0 ~ N(0, I) is drawn
/// from the same stream. Constrained schemes assert containment every step.
TrajectoryBatch simulate_batch(const ForwardConfig& config, const MatXd& x0,
                               std::uint64_t seed,
                               std::uint64_t stream_offset = 0,
                               int threads = 1);

/// As simulate_batch, but keeps only the states at t = T (for stationarity
/// and convergence studies where full trajectories would not fit in memory).
struct FinalStates {
  MatXd positions;
  MatXd velocities;  // kinetic model only
};
FinalStates simulate_final_states(const ForwardConfig& config, const MatXd& x0,
                                  std::uint64_t seed,
                                  std::uint64_t stream_offset = 0,
                                  int threads = 1);

/// Trajectory dump: step,t,x0..x{d-1}[,v0..v{d-1}].
void write_trajectory_csv(const TrajectoryBatch& batch, int trajectory,
                          const std::string& path);
/// Event-log dump: step,t,d,px...,nx... (zero rows for non-exit steps).
void write_event_csv(const TrajectoryBatch& batch, int trajectory,
                     const std::string& path);

}  // namespace confined
