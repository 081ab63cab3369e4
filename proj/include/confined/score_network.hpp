#pragma once

#include "confined/domain.hpp"
#include "confined/rng.hpp"
#include "confined/types.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace confined {

/// Input layout of the score network: [t, x] for reflected models,
/// [t, x, v] for kinetic ones. Time is appended raw, no encoding.
enum class ScoreInputLayout { Reflected, Cld };

ScoreInputLayout layout_from_string(const std::string& name);
std::string to_string(ScoreInputLayout layout);

/// Fully connected MLP with SiLU hidden activations and identity output.
/// Parameters live in one flat vector (row-major weight blocks, then bias,
/// per layer) so optimizer and EMA state are plain vectors too.
class MlpNetwork {
 public:
  explicit MlpNetwork(std::vector<int> layer_sizes);

  /// The paper's toy architecture: hidden layers 128-128-128.
  static MlpNetwork score_net(ScoreInputLayout layout, int dim,
                              const std::vector<int>& hidden = {128, 128,
                                                                128});

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  Index param_count() const { return params_.size(); }
  VecXd& params() { return params_; }
  const VecXd& params() const { return params_; }

  /// Kaiming-uniform hidden layers, zero final layer (so the net starts as
  /// the zero score and early losses are predictable).
  void init_params(NoiseStream& rng);

  VecXd forward(const VecXd& input) const;
  MatXd forward_batch(const MatXd& inputs) const;

  struct Cache {
    std::vector<MatXd> activations;    // A_0 = input, ..., A_L = output
    std::vector<MatXd> preactivations; // Z_1, ..., Z_L
  };
  MatXd forward_batch(const MatXd& inputs, Cache& cache) const;

  /// Accumulate d(sum_ij cotangent_ij * output_ij)/dtheta into grad.
  void backward_batch(const Cache& cache, const MatXd& cotangent,
                      VecXd& grad) const;

  /// Central finite-difference divergence of the output with respect to the
  /// input block [block_start, block_start + block_dim); exact for scores
  /// quadratic in that block.
  double divergence_fd(const VecXd& input, Index block_start, Index block_dim,
                       double delta = 1e-3) const;

 private:
  std::vector<int> sizes_;
  std::vector<Index> weight_offsets_;
  std::vector<Index> bias_offsets_;
  VecXd params_;

  Eigen::Map<const MatXd> weight(int layer) const;
  Eigen::Map<const VecXd> bias(int layer) const;
  Eigen::Map<MatXd> weight(int layer);
  Eigen::Map<VecXd> bias(int layer);

  friend struct MlpBackprop;
};

/// Bias-corrected Adam.
struct AdamState {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  VecXd m;
  VecXd v;

  explicit AdamState(Index n = 0)
      : m(VecXd::Zero(n)), v(VecXd::Zero(n)) {}
  void update(VecXd& params, const VecXd& grad);
};

/// Exponential moving average of the parameters.
struct EmaState {
  double decay = 0.999;
  VecXd shadow;

  void init(const VecXd& params) { shadow = params; }
  void update(const VecXd& params) {
    shadow = decay * shadow + (1.0 - decay) * params;
  }
};

/// Checkpoint: one-line JSON header followed by raw little-endian float64
/// blocks (raw parameters, then EMA parameters).
struct Checkpoint {
  nlohmann::json header;
  VecXd raw;
  VecXd ema;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// FNV-1a hash of a file's bytes, as a hex string (provenance metadata).
std::string file_hash_hex(const std::string& path);

}  // namespace confined
