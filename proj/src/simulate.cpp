#include "confined/simulate.hpp"

#include "confined/parallel.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace confined {

int DynamicsConfig::steps() const {
  const double n = T / h;
  const int ni = static_cast<int>(std::lround(n));
  if (ni <= 0 || std::abs(n - ni) > 1e-9 * std::max(1.0, n))
    throw std::invalid_argument("DynamicsConfig: T/h must be a whole number");
  return ni;
}

void DynamicsConfig::validate() const {
  if (!(h > 0.0) || !(T > 0.0))
    throw std::invalid_argument("DynamicsConfig: T and h must be positive");
  if (!(gamma > 0.0))
    throw std::invalid_argument("DynamicsConfig: gamma must be positive");
  steps();
}

ForwardModel forward_model_from_string(const std::string& name) {
  if (name == "cld") return ForwardModel::Cld;
  if (name == "reflected") return ForwardModel::Reflected;
  if (name == "unconstrained") return ForwardModel::Unconstrained;
  throw std::invalid_argument("unknown forward model '" + name + "'");
}

std::string to_string(ForwardModel model) {
  switch (model) {
    case ForwardModel::Cld:
      return "cld";
    case ForwardModel::Reflected:
      return "reflected";
    case ForwardModel::Unconstrained:
      return "unconstrained";
  }
  return "?";
}

namespace {

void simulate_one_cld(const ForwardConfig& config, int traj, int n_steps,
                      TrajectoryBatch& batch, NoiseStream& stream) {
  const auto& dyn = config.dynamics;
  const Index d = batch.dim;
  KineticState<double> state;
  state.x = batch.positions[0].row(traj).transpose();
  state.v = stream.gaussian_vector(d);  // V_0 ~ N(0, I)
  batch.velocities[0].row(traj) = state.v.transpose();
  for (int k = 0; k < n_steps; ++k) {
    auto event = forward_cld_step(config.kinetic_scheme, config.domain, state,
                                  dyn.drift, dyn.gamma, dyn.h, stream,
                                  dyn.rademacher);
    if (!contains(config.domain, state.x))
      throw std::runtime_error("simulate_batch: kinetic step left the domain");
    batch.positions[k + 1].row(traj) = state.x.transpose();
    batch.velocities[k + 1].row(traj) = state.v.transpose();
    if (event.exited)
      batch.events[traj].push_back({k, event.d, event.p_proj, event.n_proj,
                                    event.reflections, false});
  }
}

void simulate_one_overdamped(const ForwardConfig& config, int traj,
                             int n_steps, TrajectoryBatch& batch,
                             NoiseStream& stream) {
  const auto& dyn = config.dynamics;
  const Index d = batch.dim;
  const bool constrained = config.model == ForwardModel::Reflected;
  VecXd x = batch.positions[0].row(traj).transpose();
  VecXd f = VecXd::Zero(d);
  for (int k = 0; k < n_steps; ++k) {
    f.setZero();
    dyn.drift.accumulate(x, 1.0, f);  // forward drift f = b
    const VecXd xi = stream.vector(d, dyn.rademacher);
    const VecXd delta = euler_aux<double>(f, dyn.h, xi);
    if (constrained) {
      auto event = reflected_step(config.reflected_method, config.domain, x,
                                  delta, dyn.h, config.reflected_params);
      const bool hard = config.reflected_method == ReflectedMethod::Projection ||
                        config.reflected_method == ReflectedMethod::Symmetrized;
      if (hard && !contains(config.domain, x))
        throw std::runtime_error(
            "simulate_batch: reflected step left the domain");
      if (event.exited)
        batch.events[traj].push_back({k, event.d, event.p_proj, event.n_proj,
                                      0, event.fallback});
    } else {
      unconstrained_euler_step(x, delta);
    }
    batch.positions[k + 1].row(traj) = x.transpose();
  }
}

}  // namespace

TrajectoryBatch simulate_batch(const ForwardConfig& config, const MatXd& x0,
                               std::uint64_t seed,
                               std::uint64_t stream_offset, int threads) {
  config.dynamics.validate();
  const int n = static_cast<int>(x0.rows());
  const int d = static_cast<int>(x0.cols());
  if (d != config.domain.dim())
    throw std::invalid_argument("simulate_batch: dimension mismatch");
  const int n_steps = config.dynamics.steps();
  if (config.model != ForwardModel::Unconstrained) {
    for (int i = 0; i < n; ++i) {
      const VecXd xi = x0.row(i).transpose();
      if (!contains(config.domain, xi))
        throw std::invalid_argument(
            "simulate_batch: data point outside the domain at row " +
            std::to_string(i));
    }
  }

  TrajectoryBatch batch;
  batch.n_trajectories = n;
  batch.n_steps = n_steps;
  batch.dim = d;
  batch.h = config.dynamics.h;
  batch.kinetic = config.model == ForwardModel::Cld;
  batch.positions.assign(n_steps + 1, MatXd::Zero(n, d));
  if (batch.kinetic) batch.velocities.assign(n_steps + 1, MatXd::Zero(n, d));
  batch.events.assign(n, {});
  batch.positions[0] = x0;

  parallel_for(n, threads, [&](long begin, long end) {
    for (long i = begin; i < end; ++i) {
      NoiseStream stream(seed, stream_offset + static_cast<std::uint64_t>(i));
      if (batch.kinetic)
        simulate_one_cld(config, static_cast<int>(i), n_steps, batch, stream);
      else
        simulate_one_overdamped(config, static_cast<int>(i), n_steps, batch,
                                stream);
    }
  });
  return batch;
}

FinalStates simulate_final_states(const ForwardConfig& config, const MatXd& x0,
                                  std::uint64_t seed,
                                  std::uint64_t stream_offset, int threads) {
  config.dynamics.validate();
  const int n = static_cast<int>(x0.rows());
  const Index d = x0.cols();
  if (d != config.domain.dim())
    throw std::invalid_argument("simulate_final_states: dimension mismatch");
  const int n_steps = config.dynamics.steps();
  const bool kinetic = config.model == ForwardModel::Cld;
  const auto& dyn = config.dynamics;

  FinalStates out;
  out.positions.resize(n, d);
  if (kinetic) out.velocities.resize(n, d);

  parallel_for(n, threads, [&](long begin, long end) {
    VecXd f(d);
    for (long i = begin; i < end; ++i) {
      NoiseStream stream(seed, stream_offset + static_cast<std::uint64_t>(i));
      if (kinetic) {
        KineticState<double> state{x0.row(i).transpose(),
                                   stream.gaussian_vector(d)};
        for (int k = 0; k < n_steps; ++k)
          forward_cld_step(config.kinetic_scheme, config.domain, state,
                           dyn.drift, dyn.gamma, dyn.h, stream,
                           dyn.rademacher);
        out.positions.row(i) = state.x.transpose();
        out.velocities.row(i) = state.v.transpose();
      } else {
        VecXd x = x0.row(i).transpose();
        for (int k = 0; k < n_steps; ++k) {
          f.setZero();
          dyn.drift.accumulate(x, 1.0, f);
          const VecXd xi = stream.vector(d, dyn.rademacher);
          const VecXd delta = euler_aux<double>(f, dyn.h, xi);
          if (config.model == ForwardModel::Reflected)
            reflected_step(config.reflected_method, config.domain, x, delta,
                           dyn.h, config.reflected_params);
          else
            unconstrained_euler_step(x, delta);
        }
        out.positions.row(i) = x.transpose();
      }
    }
  });
  return out;
}

void write_trajectory_csv(const TrajectoryBatch& batch, int trajectory,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "'");
  out << "step,t";
  for (int i = 0; i < batch.dim; ++i) out << ",x" << i;
  if (batch.kinetic)
    for (int i = 0; i < batch.dim; ++i) out << ",v" << i;
  out << "\n";
  out.precision(17);
  for (int k = 0; k <= batch.n_steps; ++k) {
    out << k << "," << batch.t(k);
    for (int i = 0; i < batch.dim; ++i)
      out << "," << batch.positions[k](trajectory, i);
    if (batch.kinetic)
      for (int i = 0; i < batch.dim; ++i)
        out << "," << batch.velocities[k](trajectory, i);
    out << "\n";
  }
}

void write_event_csv(const TrajectoryBatch& batch, int trajectory,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "'");
  out << "step,t,d";
  for (int i = 0; i < batch.dim; ++i) out << ",px" << i;
  for (int i = 0; i < batch.dim; ++i) out << ",nx" << i;
  out << "\n";
  out.precision(17);
  std::size_t next = 0;
  const auto& events = batch.events[trajectory];
  for (int k = 0; k < batch.n_steps; ++k) {
    out << k << "," << batch.t(k);
    if (next < events.size() && events[next].step == k) {
      const auto& e = events[next++];
      out << "," << e.d;
      for (int i = 0; i < batch.dim; ++i) out << "," << e.p_proj[i];
      for (int i = 0; i < batch.dim; ++i) out << "," << e.n_proj[i];
    } else {
      out << ",0";
      for (int i = 0; i < 2 * batch.dim; ++i) out << ",0";
    }
    out << "\n";
  }
}

}  // namespace confined
