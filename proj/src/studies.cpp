#include "confined/studies.hpp"

#include "confined/parallel.hpp"
#include "confined/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

namespace confined {

namespace {

double nan_to_null_roundtrip(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null())
    return std::numeric_limits<double>::quiet_NaN();
  return j.at(key).get<double>();
}

nlohmann::json number_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

}  // namespace

namespace {
bool same_double(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}
bool same_vec(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_double(a[i], b[i])) return false;
  return true;
}
}  // namespace

bool StudyEntry::operator==(const StudyEntry& o) const {
  return config == o.config && same_double(value, o.value) &&
         same_double(stderr_, o.stderr_) && runs == o.runs;
}

bool StudyReport::operator==(const StudyReport& o) const {
  return metric == o.metric && entries == o.entries &&
         same_vec(h_grid, o.h_grid) && same_vec(errors, o.errors) &&
         same_vec(error_stderr, o.error_stderr) &&
         same_double(observed_order, o.observed_order) &&
         same_double(runtime_seconds, o.runtime_seconds) && seeds == o.seeds;
}

nlohmann::json StudyReport::to_json() const {
  nlohmann::json j;
  j["metric"] = metric;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : entries) {
    if (!std::isnan(e.stderr_) && e.runs < 3)
      throw std::logic_error(
          "StudyReport: standard errors need >= 3 independent runs");
    j["entries"].push_back({{"config", e.config},
                            {"value", e.value},
                            {"stderr", number_or_null(e.stderr_)},
                            {"runs", e.runs}});
  }
  j["h_grid"] = h_grid;
  j["errors"] = errors;
  j["error_stderr"] = error_stderr;
  j["observed_order"] = number_or_null(observed_order);
  j["runtime_seconds"] = runtime_seconds;
  j["seeds"] = seeds;
  return j;
}

StudyReport StudyReport::from_json(const nlohmann::json& j) {
  StudyReport r;
  r.metric = j.at("metric").get<std::string>();
  for (const auto& e : j.at("entries")) {
    StudyEntry entry;
    entry.config = e.at("config").get<std::string>();
    entry.value = e.at("value").get<double>();
    entry.stderr_ = nan_to_null_roundtrip(e, "stderr");
    entry.runs = e.at("runs").get<int>();
    r.entries.push_back(entry);
  }
  r.h_grid = j.at("h_grid").get<std::vector<double>>();
  r.errors = j.at("errors").get<std::vector<double>>();
  r.error_stderr = j.at("error_stderr").get<std::vector<double>>();
  r.observed_order = nan_to_null_roundtrip(j, "observed_order");
  r.runtime_seconds = j.at("runtime_seconds").get<double>();
  r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  return r;
}

void StudyReport::write_json(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "'");
  out << to_json().dump(2) << "\n";
}

void StudyReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "'");
  out.precision(17);
  if (!h_grid.empty()) {
    out << "h,error,stderr\n";
    for (std::size_t i = 0; i < h_grid.size(); ++i)
      out << h_grid[i] << "," << errors[i] << ","
          << (i < error_stderr.size() ? error_stderr[i] : 0.0) << "\n";
  } else {
    out << "config,value,stderr,runs\n";
    for (const auto& e : entries)
      out << e.config << "," << e.value << ","
          << (std::isnan(e.stderr_) ? 0.0 : e.stderr_) << "," << e.runs
          << "\n";
  }
}

// ---------------------------------------------------------------------------
// 1D reflected kernels (scalar hot loops; the generic machinery is in
// integrators.hpp and the two are cross-checked in the tests)
// ---------------------------------------------------------------------------

namespace {

inline double reflect_1d(double xp, double lo, double hi,
                         ReflectedMethod method) {
  if (xp >= lo && xp <= hi) return xp;
  if (method == ReflectedMethod::Projection)
    return std::min(std::max(xp, lo), hi);
  const double mirrored = xp > hi ? 2 * hi - xp : 2 * lo - xp;
  if (mirrored >= lo && mirrored <= hi) return mirrored;
  return std::min(std::max(xp, lo), hi);  // overshoot past the far face
}

struct WeakOrderAccumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
  }
};

}  // namespace

StudyReport weak_order_study(const WeakOrderConfig& config) {
  if (config.h_list.size() < 3)
    throw std::invalid_argument("weak_order_study: need >= 3 h values");
  const auto t0 = std::chrono::steady_clock::now();
  const auto phi = config.observable
                       ? config.observable
                       : [](double x) { return x * x; };
  const int threads = resolve_threads(config.threads);

  StudyReport report;
  report.metric = "weak_order/" + to_string(config.method);
  report.seeds = {config.seed};
  for (std::size_t hi_idx = 0; hi_idx < config.h_list.size(); ++hi_idx) {
    const double h = config.h_list[hi_idx];
    const int n_coarse = static_cast<int>(std::lround(config.T / h));
    const int R = config.ref_multiple;
    const double hf = h / R;
    const double sq_c = std::sqrt(2.0 * h);
    const double sq_f = std::sqrt(2.0 * hf);
    const long M = config.trajectories;

    std::vector<WeakOrderAccumulator> acc(threads);
    parallel_for(M, threads, [&](long begin, long end) {
      // Thread slot index derived from the partition, deterministic.
      const int slot =
          static_cast<int>(begin / std::max<long>(1, (M + threads - 1) / threads));
      WeakOrderAccumulator local;
      for (long i = begin; i < end; ++i) {
        NoiseStream rng(config.seed,
                        (static_cast<std::uint64_t>(hi_idx) << 40) +
                            static_cast<std::uint64_t>(i));
        double xc = config.x0;
        double xf = config.x0;
        for (int k = 0; k < n_coarse; ++k) {
          double agg = 0.0;
          for (int r = 0; r < R; ++r) {
            const double xi = rng.gaussian();
            agg += xi;
            const double drift_f = -config.drift_scale * xf;
            xf = reflect_1d(xf + drift_f * hf + sq_f * xi, config.lo,
                            config.hi, config.method);
          }
          const double z = agg / std::sqrt(static_cast<double>(R));
          const double drift_c = -config.drift_scale * xc;
          xc = reflect_1d(xc + drift_c * h + sq_c * z, config.lo, config.hi,
                          config.method);
        }
        local.add(phi(xc) - phi(xf));
      }
      acc[slot].sum += local.sum;
      acc[slot].sum_sq += local.sum_sq;
    });
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& a : acc) {
      sum += a.sum;
      sum_sq += a.sum_sq;
    }
    const double mean = sum / M;
    const double var = (sum_sq / M - mean * mean) / (M - 1);
    report.h_grid.push_back(h);
    report.errors.push_back(std::abs(mean));
    report.error_stderr.push_back(std::sqrt(std::max(0.0, var)));
  }
  report.observed_order = stats::loglog_order(report.h_grid, report.errors);
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

// ---------------------------------------------------------------------------
// Local-time estimator study
// ---------------------------------------------------------------------------

namespace {

struct LocalTimeFunctional {
  double lo, hi, x0, t, factor;
  const std::function<double(double, double)>* psi;

  // One trajectory's (c/t) sum d_k psi(t_k, proj) I_exit at step size h.
  double run(double h, NoiseStream& rng, bool rademacher) const {
    const int n = static_cast<int>(std::lround(t / h));
    const double sq = std::sqrt(2.0 * h);
    double x = x0;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      const double xi = rademacher ? rng.rademacher() : rng.gaussian();
      const double xp = x + sq * xi;
      if (xp < lo) {
        const double d = lo - xp;
        acc += d * ((*psi) ? (*psi)(k * h, lo) : 1.0);
        const double mirrored = 2 * lo - xp;
        x = mirrored <= hi ? mirrored : hi;
      } else if (xp > hi) {
        const double d = xp - hi;
        acc += d * ((*psi) ? (*psi)(k * h, hi) : 1.0);
        const double mirrored = 2 * hi - xp;
        x = mirrored >= lo ? mirrored : lo;
      } else {
        x = xp;
      }
    }
    return factor / t * acc;
  }

  // Coupled coarse/fine pair sharing aggregated Gaussian increments;
  // returns (coarse functional, fine functional).
  std::pair<double, double> run_coupled(double h, int R,
                                        NoiseStream& rng) const {
    const int n = static_cast<int>(std::lround(t / h));
    const double hf = h / R;
    const double sq_c = std::sqrt(2.0 * h);
    const double sq_f = std::sqrt(2.0 * hf);
    double xc = x0, xf = x0;
    double acc_c = 0.0, acc_f = 0.0;
    for (int k = 0; k < n; ++k) {
      double agg = 0.0;
      for (int r = 0; r < R; ++r) {
        const double xi = rng.gaussian();
        agg += xi;
        const double tk = k * h + r * hf;
        const double xp = xf + sq_f * xi;
        if (xp < lo) {
          acc_f += (lo - xp) * ((*psi) ? (*psi)(tk, lo) : 1.0);
          const double m = 2 * lo - xp;
          xf = m <= hi ? m : hi;
        } else if (xp > hi) {
          acc_f += (xp - hi) * ((*psi) ? (*psi)(tk, hi) : 1.0);
          const double m = 2 * hi - xp;
          xf = m >= lo ? m : lo;
        } else {
          xf = xp;
        }
      }
      const double z = agg / std::sqrt(static_cast<double>(R));
      const double xp = xc + sq_c * z;
      if (xp < lo) {
        acc_c += (lo - xp) * ((*psi) ? (*psi)(k * h, lo) : 1.0);
        const double m = 2 * lo - xp;
        xc = m <= hi ? m : hi;
      } else if (xp > hi) {
        acc_c += (xp - hi) * ((*psi) ? (*psi)(k * h, hi) : 1.0);
        const double m = 2 * hi - xp;
        xc = m >= lo ? m : lo;
      } else {
        xc = xp;
      }
    }
    return {factor / t * acc_c, factor / t * acc_f};
  }
};

struct MomentAccumulator {
  double sum = 0.0, sum_sq = 0.0;
  long n = 0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  stats::MeanStderr finish() const {
    stats::MeanStderr out;
    out.mean = sum / n;
    const double var = (sum_sq / n - out.mean * out.mean) * n / (n - 1.0);
    out.stderr_ = std::sqrt(std::max(0.0, var) / n);
    return out;
  }
  void merge(const MomentAccumulator& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    n += o.n;
  }
};

}  // namespace

stats::MeanStderr local_time_estimate_1d(
    double lo, double hi, double x0, double t, double h, bool rademacher,
    double correction_factor, long trajectories, std::uint64_t seed,
    int threads, const std::function<double(double, double)>& psi) {
  const LocalTimeFunctional fn{lo, hi, x0, t, correction_factor, &psi};
  const int nthreads = resolve_threads(threads);
  std::vector<MomentAccumulator> acc(nthreads);
  const long chunk = (trajectories + nthreads - 1) / nthreads;
  parallel_for(trajectories, nthreads, [&](long begin, long end) {
    const int slot = static_cast<int>(begin / std::max<long>(1, chunk));
    MomentAccumulator local;
    for (long i = begin; i < end; ++i) {
      NoiseStream rng(seed, static_cast<std::uint64_t>(i));
      local.add(fn.run(h, rng, rademacher));
    }
    acc[slot].merge(local);
  });
  MomentAccumulator total;
  for (const auto& a : acc) total.merge(a);
  return total.finish();
}

StudyReport local_time_rate_study(const LocalTimeRateConfig& config) {
  if (config.h_list.size() < 3)
    throw std::invalid_argument("local_time_rate_study: need >= 3 h values");
  const auto t0 = std::chrono::steady_clock::now();
  const int threads = resolve_threads(config.threads);
  const LocalTimeFunctional fn{config.lo, config.hi, config.x0, config.t,
                               config.correction_factor, &config.psi};

  StudyReport report;
  report.metric = std::string("local_time_rate/") +
                  (config.rademacher ? "rademacher" : "gaussian");
  report.seeds = {config.seed};

  if (!config.rademacher) {
    // Coupled per-h h/R reference: the reported error is the mean coarse
    // minus fine functional difference over shared Brownian paths.
    for (std::size_t hidx = 0; hidx < config.h_list.size(); ++hidx) {
      const double h = config.h_list[hidx];
      std::vector<MomentAccumulator> acc(threads);
      const long M = config.trajectories;
      const long chunk = (M + threads - 1) / threads;
      parallel_for(M, threads, [&](long begin, long end) {
        const int slot = static_cast<int>(begin / std::max<long>(1, chunk));
        MomentAccumulator local;
        for (long i = begin; i < end; ++i) {
          NoiseStream rng(config.seed,
                          (static_cast<std::uint64_t>(hidx + 1) << 40) +
                              static_cast<std::uint64_t>(i));
          const auto [coarse, fine] =
              fn.run_coupled(h, config.ref_multiple, rng);
          local.add(coarse - fine);
        }
        acc[slot].merge(local);
      });
      MomentAccumulator total;
      for (const auto& a : acc) total.merge(a);
      const auto ms = total.finish();
      report.h_grid.push_back(h);
      report.errors.push_back(std::abs(ms.mean));
      report.error_stderr.push_back(ms.stderr_);
    }
  } else {
    // Rademacher increments cannot be aggregated across grids; use one
    // shared independent reference at (finest h)/R.
    const double h_min =
        *std::min_element(config.h_list.begin(), config.h_list.end());
    const auto ref = local_time_estimate_1d(
        config.lo, config.hi, config.x0, config.t, h_min / config.ref_multiple,
        true, config.correction_factor, config.ref_trajectories,
        config.seed + 777, threads, config.psi);
    report.entries.push_back({"reference", ref.mean, std::nan(""), 1});
    for (std::size_t hidx = 0; hidx < config.h_list.size(); ++hidx) {
      const double h = config.h_list[hidx];
      const auto est = local_time_estimate_1d(
          config.lo, config.hi, config.x0, config.t, h, true,
          config.correction_factor, config.trajectories,
          config.seed + hidx + 1, threads, config.psi);
      report.h_grid.push_back(h);
      report.errors.push_back(std::abs(est.mean - ref.mean));
      report.error_stderr.push_back(
          std::sqrt(est.stderr_ * est.stderr_ + ref.stderr_ * ref.stderr_));
    }
  }
  report.observed_order = stats::loglog_order(report.h_grid, report.errors);
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

// ---------------------------------------------------------------------------
// Stationarity study
// ---------------------------------------------------------------------------

StudyReport stationarity_study(const StationarityStudyConfig& config,
                               StationarityReport* detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const Index d = config.forward.domain.dim();
  const long M = config.trajectories;
  MatXd x0(M, d);
  if (config.start_at_center) {
    VecXd center;
    if (config.forward.domain.is_box())
      center = (config.forward.domain.box().lo +
                config.forward.domain.box().hi) /
               2.0;
    else
      center = config.forward.domain.ball().center;
    x0.rowwise() = center.transpose();
  } else {
    NoiseStream rng(config.seed, 909);
    const auto& box = config.forward.domain.box();
    for (long i = 0; i < M; ++i)
      for (Index j = 0; j < d; ++j)
        x0(i, j) = box.lo[j] + rng.uniform() * (box.hi[j] - box.lo[j]);
  }
  const auto finals = simulate_final_states(config.forward, x0, config.seed,
                                            1ULL << 32,
                                            resolve_threads(config.threads));
  const bool kinetic = config.forward.model == ForwardModel::Cld;
  const auto rep = stationarity_tests(
      finals.positions, kinetic ? &finals.velocities : nullptr,
      config.forward.domain, config.forward.dynamics.drift, config.grid);
  if (detail) *detail = rep;

  StudyReport report;
  report.metric = "stationarity/" + to_string(config.forward.model);
  report.seeds = {config.seed};
  report.entries.push_back(
      {"position_chi2_p", rep.position_p, std::nan(""), 1});
  for (Index a = 0; a < rep.velocity_var_z.size(); ++a)
    report.entries.push_back({"velocity_var_z[" + std::to_string(a) + "]",
                              rep.velocity_var_z[a], std::nan(""), 1});
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

}  // namespace confined
