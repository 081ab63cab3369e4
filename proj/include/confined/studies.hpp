#pragma once

#include "confined/eval.hpp"
#include "confined/integrators.hpp"
#include "confined/simulate.hpp"
#include "confined/stats.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace confined {

/// Serializable record of one numerical study.
struct StudyEntry {
  std::string config;
  double value = 0.0;
  double stderr_ = std::numeric_limits<double>::quiet_NaN();
  int runs = 1;

  bool operator==(const StudyEntry& o) const;
};

struct StudyReport {
  std::string metric;
  std::vector<StudyEntry> entries;
  std::vector<double> h_grid;
  std::vector<double> errors;
  std::vector<double> error_stderr;
  double observed_order = std::numeric_limits<double>::quiet_NaN();
  double runtime_seconds = 0.0;
  std::vector<std::uint64_t> seeds;

  nlohmann::json to_json() const;
  static StudyReport from_json(const nlohmann::json& j);
  void write_json(const std::string& path) const;
  void write_csv(const std::string& path) const;
  // NaN-tolerant equality (lossless JSON round trips compare equal).
  bool operator==(const StudyReport& o) const;
};

// ---------------------------------------------------------------------------
// Weak-order study for the reflected one-dimensional OU test problem.
// ---------------------------------------------------------------------------

struct WeakOrderConfig {
  ReflectedMethod method = ReflectedMethod::Symmetrized;
  double lo = -1.0, hi = 1.0;
  double x0 = 0.8;
  double T = 1.0;
  double drift_scale = 1.0;  // b(x) = -scale x
  std::vector<double> h_list = {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
  int ref_multiple = 128;
  long trajectories = 150000;
  std::uint64_t seed = 1;
  int threads = 0;
  std::function<double(double)> observable;  // default x^2
};

/// |E phi(X_T^h) - E phi(X_T^{h/ref})| per h with the reference coupled to
/// the coarse path through aggregated Brownian increments, then the log-log
/// slope of the errors.
StudyReport weak_order_study(const WeakOrderConfig& config);

// ---------------------------------------------------------------------------
// Proposition-3 local-time estimator rate study (1D box).
// ---------------------------------------------------------------------------

struct LocalTimeRateConfig {
  double lo = 0.0, hi = 1.0;
  double x0 = 0.5;
  double t = 1.0;
  bool rademacher = false;
  std::vector<double> h_list = {1.0 / 50, 1.0 / 100, 1.0 / 200, 1.0 / 400};
  int ref_multiple = 128;
  long trajectories = 100000;
  long ref_trajectories = 400000;  // independent-reference mode only
  double correction_factor = 2.0;  // symmetrized forward scheme
  std::uint64_t seed = 1;
  int threads = 0;
  std::function<double(double, double)> psi;  // (t_k, boundary x); default 1
};

/// Estimator value at each h against an h/ref_multiple reference: coupled
/// per-h references for Gaussian increments, a shared independent fine-grid
/// reference for Rademacher (no pathwise coupling exists there).
StudyReport local_time_rate_study(const LocalTimeRateConfig& config);

/// The bare estimator (c/t) E sum d_{k+1} psi(t_k, Pi(X'_{k+1})) I_exit for
/// the symmetrized scheme on a 1D box; returns (mean, stderr).
stats::MeanStderr local_time_estimate_1d(double lo, double hi, double x0,
                                         double t, double h, bool rademacher,
                                         double correction_factor,
                                         long trajectories, std::uint64_t seed,
                                         int threads,
                                         const std::function<double(
                                             double, double)>& psi = {});

// ---------------------------------------------------------------------------
// Forward-stationarity study
// ---------------------------------------------------------------------------

struct StationarityStudyConfig {
  ForwardConfig forward;
  long trajectories = 50000;
  bool start_at_center = true;  // else start from Uniform(G)
  int grid = 10;
  std::uint64_t seed = 1;
  int threads = 0;
};

/// Runs the forward dynamics to T and applies the chi-square / moment tests
/// against the stationary law.
StudyReport stationarity_study(const StationarityStudyConfig& config,
                               StationarityReport* detail = nullptr);

}  // namespace confined
