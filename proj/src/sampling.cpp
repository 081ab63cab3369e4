#include "confined/sampling.hpp"

#include "confined/errors.hpp"
#include "confined/parallel.hpp"

#include <cmath>
#include <iostream>
#include <vector>

namespace confined {

NetworkScore::NetworkScore(MlpNetwork net, ScoreInputLayout layout, int dim)
    : net_(std::move(net)), layout_(layout), dim_(dim) {
  const int expect = layout == ScoreInputLayout::Cld ? 1 + 2 * dim : 1 + dim;
  if (net_.input_dim() != expect || net_.output_dim() != dim)
    throw ConfigError("NetworkScore: network shape does not match layout");
}

NetworkScore NetworkScore::from_checkpoint(const std::string& path,
                                           bool use_ema) {
  const Checkpoint ckpt = load_checkpoint(path);
  MlpNetwork net(ckpt.header.at("layer_sizes").get<std::vector<int>>());
  if (use_ema && ckpt.ema.size() == net.param_count())
    net.params() = ckpt.ema;
  else
    net.params() = ckpt.raw;
  const auto layout =
      layout_from_string(ckpt.header.at("input_layout").get<std::string>());
  return NetworkScore(std::move(net), layout,
                      ckpt.header.at("dim").get<int>());
}

MatXd NetworkScore::eval(double t_forward, const MatXd& x, const MatXd* v) {
  const Index n = x.rows();
  const bool kinetic = layout_ == ScoreInputLayout::Cld;
  if (kinetic && v == nullptr)
    throw std::invalid_argument("NetworkScore: kinetic layout needs v");
  MatXd input(n, kinetic ? 1 + 2 * dim_ : 1 + dim_);
  input.col(0).setConstant(t_forward);
  input.middleCols(1, dim_) = x;
  if (kinetic) input.middleCols(1 + dim_, dim_) = *v;
  return net_.forward_batch(input);
}

AnalyticScore AnalyticScore::zero(int dim, ScoreInputLayout layout) {
  return AnalyticScore(
      [](double, const MatXd& x, const MatXd*) {
        return MatXd::Zero(x.rows(), x.cols()).eval();
      },
      dim, layout);
}

AnalyticScore AnalyticScore::negative_velocity(int dim) {
  return AnalyticScore(
      [](double, const MatXd&, const MatXd* v) { return MatXd(-*v); }, dim,
      ScoreInputLayout::Cld);
}

GenInit gen_init_from_string(const std::string& name) {
  if (name == "auto") return GenInit::Auto;
  if (name == "uniform_gauss") return GenInit::UniformGauss;
  if (name == "truncated_gibbs") return GenInit::TruncatedGibbs;
  throw ConfigError("unknown init '" + name + "'");
}

std::string to_string(GenInit init) {
  switch (init) {
    case GenInit::Auto:
      return "auto";
    case GenInit::UniformGauss:
      return "uniform_gauss";
    case GenInit::TruncatedGibbs:
      return "truncated_gibbs";
  }
  return "?";
}

GenFamily gen_family_from_string(const std::string& name) {
  if (name == "kinetic") return GenFamily::Kinetic;
  if (name == "reflected") return GenFamily::Reflected;
  if (name == "unconstrained") return GenFamily::Unconstrained;
  throw ConfigError("unknown sampler family '" + name + "'");
}

std::string to_string(GenFamily family) {
  switch (family) {
    case GenFamily::Kinetic:
      return "kinetic";
    case GenFamily::Reflected:
      return "reflected";
    case GenFamily::Unconstrained:
      return "unconstrained";
  }
  return "?";
}

void GenConfig::validate(ScoreInputLayout score_layout) const {
  dynamics.validate();
  if (n_samples <= 0) throw ConfigError("generate: n_samples must be > 0");
  const bool kinetic = family == GenFamily::Kinetic;
  if (kinetic && score_layout != ScoreInputLayout::Cld)
    throw ConfigError("generate: kinetic schemes need an (x, v) score");
  if (!kinetic && score_layout != ScoreInputLayout::Reflected)
    throw ConfigError("generate: reflected samplers need an x-only score");
  if (dynamics.gamma * dynamics.h > 0.5)
    std::cerr << "[confined] warning: gamma*h = "
              << dynamics.gamma * dynamics.h
              << " > 0.5; the reverse O step amplifies noise strongly\n";
}

int GenConfig::nfe_per_step() const {
  return family == GenFamily::Kinetic ? scheme_nfe_per_step(kinetic_scheme)
                                      : 1;
}

namespace {

GenInit resolve_init(GenInit init, const Drift<double>& drift) {
  if (init != GenInit::Auto) return init;
  switch (drift.kind) {
    case Drift<double>::Kind::Zero:
      return GenInit::UniformGauss;
    case Drift<double>::Kind::Linear:
      return GenInit::TruncatedGibbs;
    case Drift<double>::Kind::Custom:
      throw ConfigError(
          "generate: init 'auto' needs zero or linear drift; pass an "
          "explicit init");
  }
  return GenInit::UniformGauss;
}

// Nudge a point that is within tolerance of the boundary back into the
// closed set, so hard-guarantee samplers satisfy contains() exactly.
void snap_inside(const Domain<double>& domain, VecXd& x) {
  if (contains(domain, x, 0.0)) return;
  if (!contains(domain, x, kBoundaryTol))
    throw NumericError("sampler produced a point off the boundary");
  x = project(domain, x);
  if (domain.is_box()) return;
  const auto& ball = domain.ball();
  while (!contains(domain, x, 0.0))
    x = ball.center + (x - ball.center) * (1.0 - 1e-15);
}

}  // namespace

MatXd init_reverse_positions(const Domain<double>& domain, GenInit init,
                             const Drift<double>& drift, int n,
                             std::uint64_t seed,
                             std::uint64_t stream_offset) {
  const Index d = domain.dim();
  MatXd out(n, d);
  long attempts = 0;
  long accepted = 0;
  for (int i = 0; i < n; ++i) {
    NoiseStream rng(seed, stream_offset + static_cast<std::uint64_t>(i));
    VecXd x(d);
    bool ok = false;
    for (long tries = 0; tries < 1000000; ++tries) {
      ++attempts;
      if (init == GenInit::UniformGauss) {
        if (domain.is_box()) {
          const auto& box = domain.box();
          for (Index j = 0; j < d; ++j)
            x[j] = box.lo[j] + rng.uniform() * (box.hi[j] - box.lo[j]);
        } else {
          const auto& ball = domain.ball();
          for (Index j = 0; j < d; ++j)
            x[j] = ball.center[j] + (2.0 * rng.uniform() - 1.0) * ball.radius;
        }
      } else {
        const double scale =
            drift.kind == Drift<double>::Kind::Linear ? drift.scale : 1.0;
        const double sd = 1.0 / std::sqrt(scale);
        for (Index j = 0; j < d; ++j) x[j] = sd * rng.gaussian();
      }
      if (contains(domain, x, 0.0)) {
        ++accepted;
        ok = true;
        break;
      }
    }
    if (!ok || (attempts > 10000 && accepted < attempts / 10000))
      throw ConfigError(
          "init_reverse: rejection acceptance below 1e-4 (degenerate "
          "domain)");
    out.row(i) = x.transpose();
  }
  return out;
}

namespace {

struct SchemeOp {
  enum class Kind { S, B, Ac, O } kind;
  double h_frac;
  double gamma_mult;  // S only
};

std::vector<SchemeOp> scheme_ops(ReverseKineticScheme scheme) {
  using K = SchemeOp::Kind;
  switch (scheme) {
    case ReverseKineticScheme::Saoas:
      return {{K::S, 0.5, 1}, {K::Ac, 0.5, 0}, {K::O, 1, 0},
              {K::Ac, 0.5, 0}, {K::S, 0.5, 1}};
    case ReverseKineticScheme::Baoas:
      return {{K::B, 0.5, 0}, {K::Ac, 0.5, 0}, {K::O, 1, 0},
              {K::Ac, 0.5, 0}, {K::S, 0.5, 2}};
    case ReverseKineticScheme::Osaso:
      return {{K::O, 0.5, 0}, {K::S, 0.5, 1}, {K::Ac, 1, 0},
              {K::S, 0.5, 1}, {K::O, 0.5, 0}};
    case ReverseKineticScheme::Asosa:
      return {{K::Ac, 0.5, 0}, {K::S, 0.5, 1}, {K::O, 1, 0},
              {K::S, 0.5, 1}, {K::Ac, 0.5, 0}};
    case ReverseKineticScheme::Aosoa:
      return {{K::Ac, 0.5, 0}, {K::O, 0.5, 0}, {K::S, 1, 1},
              {K::O, 0.5, 0}, {K::Ac, 0.5, 0}};
    case ReverseKineticScheme::Obaso:
      return {{K::O, 0.5, 0}, {K::B, 0.5, 0}, {K::Ac, 1, 0},
              {K::S, 0.5, 2}, {K::O, 0.5, 0}};
    case ReverseKineticScheme::CbbkS:
      return {};  // handled separately
  }
  return {};
}

void batched_drift_kick(const Drift<double>& drift, const MatXd& q,
                        double coeff, MatXd& p) {
  // p += coeff * b(q), rowwise.
  switch (drift.kind) {
    case Drift<double>::Kind::Zero:
      return;
    case Drift<double>::Kind::Linear:
      p -= (coeff * drift.scale) * q;
      return;
    case Drift<double>::Kind::Custom:
      for (Index i = 0; i < q.rows(); ++i) {
        const VecXd b = drift.custom(q.row(i).transpose());
        p.row(i) += coeff * b.transpose();
      }
      return;
  }
}

class ReverseRunner {
 public:
  ReverseRunner(const GenConfig& config, ScoreSource& score)
      : config_(config),
        score_(score),
        n_(config.n_samples),
        d_(static_cast<int>(config.domain.dim())),
        h_(config.dynamics.h),
        gamma_(config.dynamics.gamma),
        horizon_(config.dynamics.T),
        threads_(resolve_threads(config.threads)) {
    streams_.reserve(n_);
    for (int i = 0; i < n_; ++i)
      streams_.emplace_back(config.seed,
                            (1ULL << 40) + static_cast<std::uint64_t>(i));
  }

  GenResult run() {
    const GenInit init = resolve_init(config_.init, config_.dynamics.drift);
    q_ = init_reverse_positions(config_.domain, init, config_.dynamics.drift,
                                n_, config_.seed, 0);
    const bool kinetic = config_.family == GenFamily::Kinetic;
    if (kinetic) {
      p_.resize(n_, d_);
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < d_; ++j) p_(i, j) = streams_[i].gaussian();
    }
    const int n_steps = config_.dynamics.steps();
    score_.reset_counters();
    for (int k = 0; k < n_steps; ++k) {
      const double t = k * h_;
      if (kinetic)
        kinetic_step(t);
      else
        overdamped_step(t);
    }
    GenResult result;
    result.samples = q_;
    if (config_.keep_velocities) result.velocities = p_;
    result.score_calls = score_.calls();
    result.score_rows = score_.rows();
    result.nfe_per_sample =
        static_cast<long>(n_steps) * config_.nfe_per_step();
    return result;
  }

 private:
  void kinetic_step(double t) {
    if (config_.kinetic_scheme == ReverseKineticScheme::CbbkS) {
      cbbk_s_step(t);
      return;
    }
    for (const auto& op : scheme_ops(config_.kinetic_scheme)) {
      const double hh = op.h_frac * h_;
      switch (op.kind) {
        case SchemeOp::Kind::S: {
          const MatXd s = score_(horizon_ - t, q_, &p_);
          batched_drift_kick(config_.dynamics.drift, q_, -hh, p_);
          p_ += (2.0 * op.gamma_mult * gamma_ * hh) * s;
          break;
        }
        case SchemeOp::Kind::B:
          batched_drift_kick(config_.dynamics.drift, q_, -hh, p_);
          break;
        case SchemeOp::Kind::Ac:
          ac_all(hh);
          break;
        case SchemeOp::Kind::O:
          o_all(hh);
          break;
      }
    }
    check_containment();
  }

  void cbbk_s_step(double t) {
    if (h_ * gamma_ / 2 >= 1.0)
      throw ConfigError("CBBK-S: h*gamma/2 >= 1, divisor <= 0");
    const double kick = std::sqrt(gamma_ * h_);
    MatXd xi(n_, d_);
    draw_all(xi);
    MatXd phalf = p_ + (h_ * gamma_ / 2) * p_ + kick * xi;
    batched_drift_kick(config_.dynamics.drift, q_, -h_ / 2, phalf);
    p_ = phalf;
    ac_all(h_);
    const MatXd s = score_(horizon_ - t, q_, &p_);
    draw_all(xi);
    MatXd pnew = p_ + kick * xi + (2.0 * h_ * gamma_) * s;
    batched_drift_kick(config_.dynamics.drift, q_, -h_ / 2, pnew);
    p_ = pnew / (1.0 - h_ * gamma_ / 2);
    check_containment();
  }

  void overdamped_step(double t) {
    const MatXd s = score_(horizon_ - t, q_, nullptr);
    MatXd f = 2.0 * s;
    batched_drift_kick(config_.dynamics.drift, q_, -1.0, f);  // f = -b + 2s
    MatXd xi(n_, d_);
    draw_all(xi);
    const double sq = std::sqrt(2.0 * h_);
    const bool constrained = config_.family == GenFamily::Reflected;
    const bool hard =
        constrained &&
        (config_.reflected_method == ReflectedMethod::Projection ||
         config_.reflected_method == ReflectedMethod::Symmetrized);
    parallel_for(n_, threads_, [&](long begin, long end) {
      for (long i = begin; i < end; ++i) {
        VecXd x = q_.row(i).transpose();
        const VecXd delta =
            f.row(i).transpose() * h_ + sq * xi.row(i).transpose();
        if (constrained) {
          reflected_step(config_.reflected_method, config_.domain, x, delta,
                         h_, config_.reflected_params);
          if (hard) snap_inside(config_.domain, x);
        } else {
          unconstrained_euler_step(x, delta);
        }
        q_.row(i) = x.transpose();
      }
    });
    if (hard) check_containment();
  }

  void ac_all(double hh) {
    parallel_for(n_, threads_, [&](long begin, long end) {
      for (long i = begin; i < end; ++i) {
        auto out = a_c_step(config_.domain, q_.row(i).transpose().eval(),
                            p_.row(i).transpose().eval(), hh,
                            /*reverse=*/true);
        snap_inside(config_.domain, out.x);
        q_.row(i) = out.x.transpose();
        p_.row(i) = out.v.transpose();
      }
    });
  }

  void o_all(double hh) {
    const double grow = std::exp(gamma_ * hh);
    const double amp = std::sqrt(grow * grow - 1.0);
    MatXd xi(n_, d_);
    draw_all(xi);
    p_ = grow * p_ + amp * xi;
  }

  void draw_all(MatXd& xi) {
    const bool rad = config_.dynamics.rademacher;
    parallel_for(n_, threads_, [&](long begin, long end) {
      for (long i = begin; i < end; ++i)
        for (int j = 0; j < d_; ++j) xi(i, j) = streams_[i].draw(rad);
    });
  }

  void check_containment() const {
    for (int i = 0; i < n_; ++i)
      if (!contains(config_.domain, VecXd(q_.row(i).transpose()), 0.0))
        throw NumericError("generate: sample left the domain");
  }

  const GenConfig& config_;
  ScoreSource& score_;
  int n_;
  int d_;
  double h_;
  double gamma_;
  double horizon_;
  int threads_;
  std::vector<NoiseStream> streams_;
  MatXd q_;
  MatXd p_;
};

}  // namespace

GenResult generate(const GenConfig& config, ScoreSource& score) {
  config.validate(score.layout());
  if (score.dim() != config.domain.dim())
    throw ConfigError("generate: score dimension mismatch");
  ReverseRunner runner(config, score);
  return runner.run();
}

}  // namespace confined
