#include "confined/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace confined {

std::vector<int> sample_time_indices(int n_trajectories, int times_per_traj,
                                     int n_steps, NoiseStream& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n_trajectories) *
                       times_per_traj);
  for (auto& k : idx)
    k = 1 + static_cast<int>(rng.uniform_index(
                static_cast<std::uint64_t>(n_steps)));
  return idx;
}

LossBatch assemble_cld_batch(const TrajectoryBatch& batch,
                             const std::vector<int>& time_indices) {
  const int d = batch.dim;
  const int reps = static_cast<int>(time_indices.size()) /
                   batch.n_trajectories;
  LossBatch out;
  out.base.resize(time_indices.size(), 1 + 2 * d);
  for (std::size_t row = 0; row < time_indices.size(); ++row) {
    const int traj = static_cast<int>(row) / reps;
    const int k = time_indices[row];
    out.base(row, 0) = batch.t(k);
    out.base.row(row).segment(1, d) = batch.positions[k].row(traj);
    out.base.row(row).segment(1 + d, d) = batch.velocities[k].row(traj);
  }
  return out;
}

LossBatch assemble_reflected_batch(const TrajectoryBatch& batch,
                                   const std::vector<int>& time_indices,
                                   double correction_factor) {
  const int d = batch.dim;
  const int reps = static_cast<int>(time_indices.size()) /
                   batch.n_trajectories;
  LossBatch out;
  out.base.resize(time_indices.size(), 1 + d);
  std::size_t n_events = 0;
  for (std::size_t row = 0; row < time_indices.size(); ++row) {
    const int traj = static_cast<int>(row) / reps;
    const int k = time_indices[row];
    out.base(row, 0) = batch.t(k);
    out.base.row(row).segment(1, d) = batch.positions[k].row(traj);
    for (const auto& e : batch.events[traj])
      if (e.step < k) ++n_events;
  }
  out.corr_inputs.resize(n_events, 1 + d);
  out.corr_normals.resize(n_events, d);
  out.corr_weights.resize(n_events);
  std::size_t e_row = 0;
  for (std::size_t row = 0; row < time_indices.size(); ++row) {
    const int traj = static_cast<int>(row) / reps;
    const int m = time_indices[row];
    const double t_m = batch.t(m);
    for (const auto& e : batch.events[traj]) {
      if (e.step >= m) continue;
      out.corr_inputs(e_row, 0) = batch.t(e.step);
      out.corr_inputs.row(e_row).segment(1, d) = e.p_proj.transpose();
      out.corr_normals.row(e_row) = e.n_proj.transpose();
      out.corr_weights[e_row] = e.d * correction_factor / t_m;
      ++e_row;
    }
  }
  return out;
}

namespace {

// mean |s|^2 + 2 * mean div over the batch, with cotangent backprop.
void quadratic_terms(const MlpNetwork& net, const MatXd& inputs,
                     Index diff_start, Index diff_dim, double delta,
                     VecXd* grad, LossTerms& terms) {
  const double n = static_cast<double>(inputs.rows());
  MlpNetwork::Cache cache;

  const MatXd s = grad ? net.forward_batch(inputs, cache)
                       : net.forward_batch(inputs);
  terms.sq = s.rowwise().squaredNorm().sum() / n;
  if (grad) net.backward_batch(cache, MatXd((2.0 / n) * s), *grad);

  double div_sum = 0.0;
  MatXd shifted = inputs;
  for (Index i = 0; i < diff_dim; ++i) {
    for (const double sign : {1.0, -1.0}) {
      shifted.col(diff_start + i).array() =
          inputs.col(diff_start + i).array() + sign * delta;
      const MatXd out = grad ? net.forward_batch(shifted, cache)
                             : net.forward_batch(shifted);
      div_sum += sign * out.col(i).sum() / (2.0 * delta);
      if (grad) {
        MatXd cot = MatXd::Zero(out.rows(), out.cols());
        cot.col(i).setConstant(sign * 2.0 / (2.0 * delta * n));
        net.backward_batch(cache, cot, *grad);
      }
    }
    shifted.col(diff_start + i) = inputs.col(diff_start + i);
  }
  terms.div = 2.0 * div_sum / n;
}

// mean over base rows of the weighted boundary sums; cotangent only when
// the correction contributes to the gradient.
double correction_term(const MlpNetwork& net, const LossBatch& batch,
                       VecXd* grad) {
  if (batch.corr_inputs.rows() == 0) return 0.0;
  const double n = static_cast<double>(batch.base.rows());
  MlpNetwork::Cache cache;
  const MatXd s = grad ? net.forward_batch(batch.corr_inputs, cache)
                       : net.forward_batch(batch.corr_inputs);
  const double value =
      (s.cwiseProduct(batch.corr_normals).rowwise().sum().array() *
       batch.corr_weights.array())
          .sum() /
      n;
  if (grad) {
    const MatXd cot = (batch.corr_normals.array().colwise() *
                       (batch.corr_weights.array() * (-2.0 / n)))
                          .matrix();
    net.backward_batch(cache, cot, *grad);
  }
  return value;
}

}  // namespace

LossTerms ism_cld_loss(const MlpNetwork& net, const LossBatch& batch, int dim,
                       double delta, VecXd* grad) {
  if (batch.base.cols() != 1 + 2 * dim)
    throw std::invalid_argument("ism_cld_loss: bad input width");
  LossTerms terms;
  quadratic_terms(net, batch.base, 1 + dim, dim, delta, grad, terms);
  terms.total = terms.sq + terms.div;
  return terms;
}

LossTerms ism_reflected_loss(const MlpNetwork& net, const LossBatch& batch,
                             int dim, bool corrected, double delta,
                             VecXd* grad) {
  if (batch.base.cols() != 1 + dim)
    throw std::invalid_argument("ism_reflected_loss: bad input width");
  LossTerms terms;
  quadratic_terms(net, batch.base, 1, dim, delta, grad, terms);
  terms.correction = correction_term(net, batch, corrected ? grad : nullptr);
  terms.total = terms.sq + terms.div;
  if (corrected) terms.total -= 2.0 * terms.correction;
  return terms;
}

double local_time_correction(const MlpNetwork& net,
                             const std::vector<ExitEvent>& events, int m,
                             double t_m, double h, double correction_factor) {
  if (!(t_m > 0.0))
    throw std::invalid_argument("local_time_correction: t_m must be > 0");
  double sum = 0.0;
  for (const auto& e : events) {
    if (e.step >= m) continue;
    const Index d = e.p_proj.size();
    VecXd input(1 + d);
    input[0] = e.step * h;
    input.segment(1, d) = e.p_proj;
    sum += e.d * net.forward(input).dot(e.n_proj);
  }
  return correction_factor / t_m * sum;
}

}  // namespace confined
