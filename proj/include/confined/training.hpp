#pragma once

#include "confined/losses.hpp"
#include "confined/score_network.hpp"
#include "confined/simulate.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace confined {

enum class LossVariant { IsmCld, IsmReflectedUncorrected, IsmReflectedCorrected };

LossVariant loss_variant_from_string(const std::string& name);
std::string to_string(LossVariant variant);

struct TrainConfig {
  ForwardConfig forward;
  LossVariant loss = LossVariant::IsmCld;
  int iterations = 5000;
  int batch = 0;  // 0: the whole dataset, every iteration
  int times_per_traj = 1;
  // Prop-3 factor c; NaN resolves from the forward scheme (2 symmetrized,
  // 1 projection).
  double correction_factor = std::numeric_limits<double>::quiet_NaN();
  double fd_delta = 1e-3;
  double lr = 5e-4;
  double ema_decay = 0.999;
  std::vector<int> hidden = {128, 128, 128};
  std::uint64_t seed = 1;
  int threads = 0;
  bool cache_batch = false;  // reuse the first simulated batch (speed studies)

  void validate() const;
  double resolved_correction_factor() const;
  ScoreInputLayout layout() const;
};

struct LossRow {
  int iteration;
  double total;
  double sq;
  double div;
  double correction;
};

struct TrainResult {
  MlpNetwork net;  // raw (non-EMA) parameters
  VecXd ema_params;
  std::vector<LossRow> history;

  nlohmann::json checkpoint_header(const TrainConfig& config) const;
};

/// Full training loop: simulate -> loss -> gradient -> Adam -> EMA, once per
/// iteration. Deterministic given the seed; throws NumericError with the
/// iteration and term breakdown if the loss goes non-finite.
TrainResult train(const TrainConfig& config, const MatXd& dataset);

void write_loss_history_csv(const std::string& path,
                            const std::vector<LossRow>& history);

void save_train_checkpoint(const std::string& path, const TrainConfig& config,
                           const TrainResult& result);

}  // namespace confined
