#pragma once

#include "confined/score_network.hpp"
#include "confined/simulate.hpp"
#include "confined/types.hpp"

#include <vector>

namespace confined {

/// Loss value split into its Monte-Carlo terms:
///   total = sq + div - 2 * correction  (correction enters only when the
///   corrected variant is active; it is still reported otherwise).
struct LossTerms {
  double total = 0.0;
  double sq = 0.0;          // mean |s|^2
  double div = 0.0;         // 2 * mean divergence
  double correction = 0.0;  // mean (c/t_m) sum_k d <s, n>
};

/// Assembled Monte-Carlo batch for one loss evaluation. Each base row is one
/// (trajectory, sampled time) pair; correction rows hold that pair's boundary
/// events with weights d_{k+1} * (c / t_m).
struct LossBatch {
  MatXd base;          // B x (1 + d) or B x (1 + 2d)
  MatXd corr_inputs;   // E x (1 + d), rows [t_k, Pi(X'_{k+1})]
  MatXd corr_normals;  // E x d
  VecXd corr_weights;  // E
};

/// Sample one time index per (trajectory, repetition) uniformly from grid
/// indices 1..N (t = 0 excluded).
std::vector<int> sample_time_indices(int n_trajectories, int times_per_traj,
                                     int n_steps, NoiseStream& rng);

LossBatch assemble_cld_batch(const TrajectoryBatch& batch,
                             const std::vector<int>& time_indices);
LossBatch assemble_reflected_batch(const TrajectoryBatch& batch,
                                   const std::vector<int>& time_indices,
                                   double correction_factor);

/// Proposition-1 objective: mean |s(t,X,V)|^2 + 2 div_v s(t,X,V).
/// Gradients flow through every forward evaluation, including the 2d
/// finite-difference probes. Pass grad = nullptr for value only.
LossTerms ism_cld_loss(const MlpNetwork& net, const LossBatch& batch, int dim,
                       double delta, VecXd* grad);

/// Proposition-2 objective with the Proposition-3 discrete boundary
/// estimator; `corrected` drops the boundary term from value and gradient
/// (it is still reported in LossTerms for the ablation logs).
LossTerms ism_reflected_loss(const MlpNetwork& net, const LossBatch& batch,
                             int dim, bool corrected, double delta,
                             VecXd* grad);

/// Standalone Proposition-3 sum for one trajectory:
/// (c / t_m) sum_{k < m} d_{k+1} <s(t_k, Pi(X'_{k+1})), n^pi_{k+1}> over its
/// exit events. The network is evaluated at the projected boundary point.
double local_time_correction(const MlpNetwork& net,
                             const std::vector<ExitEvent>& events, int m,
                             double t_m, double h, double correction_factor);

}  // namespace confined
