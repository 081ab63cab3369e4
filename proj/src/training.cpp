#include "confined/training.hpp"

#include "confined/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace confined {

namespace {
constexpr std::uint64_t kInitTag = 101;
constexpr std::uint64_t kTimesTag = 202;
constexpr std::uint64_t kSubsetTag = 303;
}  // namespace

LossVariant loss_variant_from_string(const std::string& name) {
  if (name == "ism_cld") return LossVariant::IsmCld;
  if (name == "ism_reflected_uncorrected")
    return LossVariant::IsmReflectedUncorrected;
  if (name == "ism_reflected_corrected")
    return LossVariant::IsmReflectedCorrected;
  throw ConfigError("unknown loss variant '" + name + "'");
}

std::string to_string(LossVariant variant) {
  switch (variant) {
    case LossVariant::IsmCld:
      return "ism_cld";
    case LossVariant::IsmReflectedUncorrected:
      return "ism_reflected_uncorrected";
    case LossVariant::IsmReflectedCorrected:
      return "ism_reflected_corrected";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (iterations <= 0) throw ConfigError("train: iterations must be > 0");
  if (times_per_traj <= 0) throw ConfigError("train: times_per_traj must be > 0");
  forward.dynamics.validate();
  const bool cld_loss = loss == LossVariant::IsmCld;
  const bool cld_model = forward.model == ForwardModel::Cld;
  if (cld_loss != cld_model)
    throw ConfigError("train: loss variant does not match the forward model");
  if (!cld_model && forward.model == ForwardModel::Reflected &&
      loss == LossVariant::IsmReflectedCorrected &&
      forward.reflected_method != ReflectedMethod::Symmetrized &&
      forward.reflected_method != ReflectedMethod::Projection &&
      std::isnan(correction_factor))
    throw ConfigError(
        "train: corrected loss needs a symmetrized or projection forward "
        "scheme (or an explicit correction_factor)");
}

double TrainConfig::resolved_correction_factor() const {
  if (!std::isnan(correction_factor)) return correction_factor;
  return forward.reflected_method == ReflectedMethod::Projection ? 1.0 : 2.0;
}

ScoreInputLayout TrainConfig::layout() const {
  return forward.model == ForwardModel::Cld ? ScoreInputLayout::Cld
                                            : ScoreInputLayout::Reflected;
}

nlohmann::json TrainResult::checkpoint_header(const TrainConfig& config) const {
  nlohmann::json h;
  h["layer_sizes"] = net.layer_sizes();
  h["activation"] = "silu";
  h["input_layout"] = to_string(config.layout());
  h["dim"] = config.forward.domain.dim();
  h["T"] = config.forward.dynamics.T;
  h["gamma"] = config.forward.dynamics.gamma;
  h["domain"] = domain_to_json(config.forward.domain);
  h["loss"] = to_string(config.loss);
  h["seed"] = config.seed;
  return h;
}

TrainResult train(const TrainConfig& config, const MatXd& dataset) {
  config.validate();
  if (dataset.rows() == 0) throw ConfigError("train: empty dataset");
  const int d = static_cast<int>(config.forward.domain.dim());
  if (dataset.cols() != d) throw ConfigError("train: dataset dimension mismatch");
  const int n_data = static_cast<int>(dataset.rows());
  const int batch_size =
      config.batch > 0 ? std::min(config.batch, n_data) : n_data;
  const int n_steps = config.forward.dynamics.steps();
  const bool corrected = config.loss == LossVariant::IsmReflectedCorrected;
  const double c = config.resolved_correction_factor();

  TrainResult result{MlpNetwork::score_net(config.layout(), d, config.hidden),
                     VecXd(), {}};
  {
    NoiseStream init_rng(config.seed, kInitTag);
    result.net.init_params(init_rng);
  }
  AdamState adam(result.net.param_count());
  adam.lr = config.lr;
  EmaState ema;
  ema.decay = config.ema_decay;
  ema.init(result.net.params());

  NoiseStream times_rng(config.seed, kTimesTag);
  NoiseStream subset_rng(config.seed, kSubsetTag);
  VecXd grad(result.net.param_count());
  std::vector<int> rows(n_data);
  for (int i = 0; i < n_data; ++i) rows[i] = i;

  TrajectoryBatch sim;
  MatXd x0(batch_size, d);
  result.history.reserve(config.iterations);
  for (int it = 0; it < config.iterations; ++it) {
    const bool fresh = !config.cache_batch || it == 0;
    if (fresh) {
      if (batch_size < n_data) {
        // Partial Fisher-Yates draw of batch_size distinct rows.
        for (int i = 0; i < batch_size; ++i) {
          const int j = i + static_cast<int>(subset_rng.uniform_index(
                                static_cast<std::uint64_t>(n_data - i)));
          std::swap(rows[i], rows[j]);
          x0.row(i) = dataset.row(rows[i]);
        }
      } else {
        x0 = dataset;
      }
      const std::uint64_t offset = (static_cast<std::uint64_t>(it) + 1) << 24;
      sim = simulate_batch(config.forward, x0, config.seed, offset,
                           config.threads);
    }
    const auto times = sample_time_indices(batch_size, config.times_per_traj,
                                           n_steps, times_rng);
    grad.setZero();
    LossTerms terms;
    if (config.loss == LossVariant::IsmCld) {
      const LossBatch lb = assemble_cld_batch(sim, times);
      terms = ism_cld_loss(result.net, lb, d, config.fd_delta, &grad);
    } else {
      const LossBatch lb = assemble_reflected_batch(sim, times, c);
      terms = ism_reflected_loss(result.net, lb, d, corrected, config.fd_delta,
                                 &grad);
    }
    if (!std::isfinite(terms.total)) {
      std::ostringstream os;
      os << "train: non-finite loss at iteration " << it << " (sq=" << terms.sq
         << ", div=" << terms.div << ", correction=" << terms.correction << ")";
      throw NumericError(os.str());
    }
    adam.update(result.net.params(), grad);
    ema.update(result.net.params());
    result.history.push_back(
        {it, terms.total, terms.sq, terms.div, terms.correction});
  }
  result.ema_params = ema.shadow;
  return result;
}

void write_loss_history_csv(const std::string& path,
                            const std::vector<LossRow>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "'");
  out << "iteration,total,term1,term2,correction\n";
  out.precision(17);
  for (const auto& row : history)
    out << row.iteration << "," << row.total << "," << row.sq << ","
        << row.div << "," << row.correction << "\n";
}

void save_train_checkpoint(const std::string& path, const TrainConfig& config,
                           const TrainResult& result) {
  Checkpoint ckpt;
  ckpt.header = result.checkpoint_header(config);
  ckpt.raw = result.net.params();
  ckpt.ema = result.ema_params;
  save_checkpoint(path, ckpt);
}

}  // namespace confined
