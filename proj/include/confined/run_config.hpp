#pragma once

#include "confined/sampling.hpp"
#include "confined/simulate.hpp"
#include "confined/training.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace confined {

/// JSON run configuration with dotted-path overrides and strict key
/// validation; every run echoes the resolved config next to its outputs.
class RunConfig {
 public:
  static RunConfig load(const std::string& path,
                        const std::vector<std::string>& overrides);
  static RunConfig from_json(nlohmann::json root,
                             const std::vector<std::string>& overrides = {});

  const nlohmann::json& root() const { return root_; }
  nlohmann::json& root() { return root_; }

  std::uint64_t seed() const;
  std::string out_dir() const;
  int threads() const;

  Domain<double> domain() const;
  Drift<double> drift() const;
  DynamicsConfig dynamics() const;
  ReflectedParams<double> reflected_params() const;
  ForwardConfig forward_config() const;   // needs train.model (+scheme)
  TrainConfig train_config() const;
  GenConfig gen_config() const;

  bool has(const std::string& section) const { return root_.contains(section); }

  /// Write the resolved configuration echo (config_resolved.json).
  void echo(const std::string& dir) const;

 private:
  void validate_keys() const;
  nlohmann::json root_;
};

/// Apply one --key.path=value override (value parsed as JSON when possible).
void apply_override(nlohmann::json& root, const std::string& spec);

Drift<double> drift_from_json(const nlohmann::json& j);
nlohmann::json drift_to_json(const Drift<double>& drift);

}  // namespace confined
