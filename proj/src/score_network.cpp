#include "confined/score_network.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace confined {

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
inline double silu(double z) { return z * sigmoid(z); }
inline double silu_grad(double z) {
  const double s = sigmoid(z);
  return s * (1.0 + z * (1.0 - s));
}

}  // namespace

ScoreInputLayout layout_from_string(const std::string& name) {
  if (name == "reflected") return ScoreInputLayout::Reflected;
  if (name == "cld") return ScoreInputLayout::Cld;
  throw std::invalid_argument("unknown input layout '" + name + "'");
}

std::string to_string(ScoreInputLayout layout) {
  return layout == ScoreInputLayout::Cld ? "cld" : "reflected";
}

MlpNetwork::MlpNetwork(std::vector<int> layer_sizes)
    : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2)
    throw std::invalid_argument("MlpNetwork: need at least in/out sizes");
  Index total = 0;
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    weight_offsets_.push_back(total);
    total += Index(sizes_[l]) * sizes_[l - 1];
    bias_offsets_.push_back(total);
    total += sizes_[l];
  }
  params_ = VecXd::Zero(total);
}

MlpNetwork MlpNetwork::score_net(ScoreInputLayout layout, int dim,
                                 const std::vector<int>& hidden) {
  const int in = layout == ScoreInputLayout::Cld ? 1 + 2 * dim : 1 + dim;
  std::vector<int> sizes;
  sizes.push_back(in);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(dim);
  return MlpNetwork(sizes);
}

Eigen::Map<const MatXd> MlpNetwork::weight(int layer) const {
  return {params_.data() + weight_offsets_[layer], sizes_[layer + 1],
          sizes_[layer]};
}
Eigen::Map<const VecXd> MlpNetwork::bias(int layer) const {
  return {params_.data() + bias_offsets_[layer], sizes_[layer + 1]};
}
Eigen::Map<MatXd> MlpNetwork::weight(int layer) {
  return {params_.data() + weight_offsets_[layer], sizes_[layer + 1],
          sizes_[layer]};
}
Eigen::Map<VecXd> MlpNetwork::bias(int layer) {
  return {params_.data() + bias_offsets_[layer], sizes_[layer + 1]};
}

void MlpNetwork::init_params(NoiseStream& rng) {
  const int layers = static_cast<int>(sizes_.size()) - 1;
  for (int l = 0; l < layers; ++l) {
    auto w = weight(l);
    auto b = bias(l);
    if (l == layers - 1) {
      w.setZero();
      b.setZero();
      continue;
    }
    const double bound = std::sqrt(6.0 / sizes_[l]);
    for (Index j = 0; j < w.cols(); ++j)
      for (Index i = 0; i < w.rows(); ++i)
        w(i, j) = bound * (2.0 * rng.uniform() - 1.0);
    b.setZero();
  }
}

MatXd MlpNetwork::forward_batch(const MatXd& inputs, Cache& cache) const {
  if (inputs.cols() != input_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  const int layers = static_cast<int>(sizes_.size()) - 1;
  cache.activations.assign(1, inputs);
  cache.preactivations.clear();
  MatXd a = inputs;
  for (int l = 0; l < layers; ++l) {
    MatXd z = a * weight(l).transpose();
    z.rowwise() += bias(l).transpose();
    if (l < layers - 1) {
      cache.preactivations.push_back(z);
      a = z.unaryExpr([](double v) { return silu(v); });
    } else {
      cache.preactivations.push_back(MatXd());
      a = std::move(z);
    }
    cache.activations.push_back(a);
  }
  return a;
}

MatXd MlpNetwork::forward_batch(const MatXd& inputs) const {
  const int layers = static_cast<int>(sizes_.size()) - 1;
  if (inputs.cols() != input_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  MatXd a = inputs;
  for (int l = 0; l < layers; ++l) {
    MatXd z = a * weight(l).transpose();
    z.rowwise() += bias(l).transpose();
    if (l < layers - 1)
      a = z.unaryExpr([](double v) { return silu(v); });
    else
      a = std::move(z);
  }
  return a;
}

VecXd MlpNetwork::forward(const VecXd& input) const {
  return forward_batch(input.transpose()).row(0);
}

void MlpNetwork::backward_batch(const Cache& cache, const MatXd& cotangent,
                                VecXd& grad) const {
  const int layers = static_cast<int>(sizes_.size()) - 1;
  if (grad.size() != params_.size())
    throw std::invalid_argument("backward: grad size mismatch");
  MatXd dz = cotangent;  // output layer is linear
  for (int l = layers - 1; l >= 0; --l) {
    Eigen::Map<MatXd> gw(grad.data() + weight_offsets_[l], sizes_[l + 1],
                         sizes_[l]);
    Eigen::Map<VecXd> gb(grad.data() + bias_offsets_[l], sizes_[l + 1]);
    gw.noalias() += dz.transpose() * cache.activations[l];
    gb += dz.colwise().sum().transpose();
    if (l == 0) break;
    MatXd da = dz * weight(l);
    const MatXd& z = cache.preactivations[l - 1];
    dz = da.cwiseProduct(z.unaryExpr([](double v) { return silu_grad(v); }));
  }
}

double MlpNetwork::divergence_fd(const VecXd& input, Index block_start,
                                 Index block_dim, double delta) const {
  if (delta <= 0.0) throw std::invalid_argument("divergence_fd: delta <= 0");
  if (block_start < 0 || block_start + block_dim > input.size() ||
      block_dim != output_dim())
    throw std::invalid_argument("divergence_fd: bad block");
  // One batched pass over the 2*block_dim shifted inputs.
  MatXd shifted(2 * block_dim, input.size());
  for (Index i = 0; i < block_dim; ++i) {
    shifted.row(2 * i) = input.transpose();
    shifted(2 * i, block_start + i) += delta;
    shifted.row(2 * i + 1) = input.transpose();
    shifted(2 * i + 1, block_start + i) -= delta;
  }
  const MatXd out = forward_batch(shifted);
  double div = 0.0;
  for (Index i = 0; i < block_dim; ++i)
    div += (out(2 * i, i) - out(2 * i + 1, i)) / (2.0 * delta);
  return div;
}

void AdamState::update(VecXd& params, const VecXd& grad) {
  if (m.size() != params.size()) {
    m = VecXd::Zero(params.size());
    v = VecXd::Zero(params.size());
  }
  ++step;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  VecXd denom = (v / bc2).cwiseSqrt();
  denom.array() += eps;
  params -= (lr / bc1) * m.cwiseQuotient(denom);
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  nlohmann::json header = ckpt.header;
  header["param_count"] = ckpt.raw.size();
  header["blocks"] = ckpt.ema.size() > 0
                         ? std::vector<std::string>{"raw", "ema"}
                         : std::vector<std::string>{"raw"};
  out << header.dump() << "\n";
  out.write(reinterpret_cast<const char*>(ckpt.raw.data()),
            static_cast<std::streamsize>(sizeof(double) * ckpt.raw.size()));
  if (ckpt.ema.size() > 0)
    out.write(reinterpret_cast<const char*>(ckpt.ema.data()),
              static_cast<std::streamsize>(sizeof(double) * ckpt.ema.size()));
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("checkpoint missing header: " + path);
  Checkpoint ckpt;
  ckpt.header = nlohmann::json::parse(line);
  const Index n = ckpt.header.at("param_count").get<Index>();
  ckpt.raw.resize(n);
  in.read(reinterpret_cast<char*>(ckpt.raw.data()),
          static_cast<std::streamsize>(sizeof(double) * n));
  const auto blocks =
      ckpt.header.value("blocks", std::vector<std::string>{"raw"});
  if (blocks.size() > 1) {
    ckpt.ema.resize(n);
    in.read(reinterpret_cast<char*>(ckpt.ema.data()),
            static_cast<std::streamsize>(sizeof(double) * n));
  }
  if (!in) throw std::runtime_error("checkpoint truncated: " + path);
  return ckpt;
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace confined
