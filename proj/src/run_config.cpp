#include "confined/run_config.hpp"

#include "confined/errors.hpp"
#include "confined/parallel.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace confined {

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"", {"seed", "out_dir", "threads", "domain", "dynamics", "reflected",
            "data", "train", "generate", "eval", "study"}},
      {"domain", {"type", "lo", "hi", "center", "radius"}},
      {"dynamics", {"gamma", "drift", "T", "h", "increments"}},
      {"drift", {"type", "scale"}},
      {"reflected", {"lambda", "eta", "collar", "r_min"}},
      {"data", {"set", "n", "path", "out"}},
      {"train",
       {"model", "scheme", "method", "loss", "iterations", "batch",
        "times_per_traj", "correction_factor", "fd_delta", "lr", "ema_decay",
        "hidden", "checkpoint", "dataset", "loss_csv", "cache_batch",
        "dump_trajectories"}},
      {"generate",
       {"family", "scheme", "method", "n_samples", "init", "checkpoint",
        "use_ema", "keep_velocities", "out", "runs"}},
      {"eval", {"data", "samples", "runs", "bandwidth", "out"}},
      {"study",
       {"which", "h_list", "trajectories", "ref_trajectories", "ref_multiple",
        "increments", "x0", "t", "method", "grid", "start_at_center", "out",
        "correction_factor", "scheme"}},
  };
  return s;
}

void check_section(const nlohmann::json& j, const std::string& name) {
  if (!j.is_object()) return;
  const auto it = schema().find(name);
  if (it == schema().end()) return;
  for (const auto& [key, value] : j.items()) {
    if (!it->second.count(key))
      throw ConfigError("unknown config key '" +
                        (name.empty() ? key : name + "." + key) + "'");
    if (value.is_object() && schema().count(key)) check_section(value, key);
  }
}

}  // namespace

void apply_override(nlohmann::json& root, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + spec + "' is not key.path=value");
  std::string path = spec.substr(0, eq);
  if (path.rfind("--", 0) == 0) path = path.substr(2);
  const std::string value = spec.substr(eq + 1);
  nlohmann::json* node = &root;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ConfigError("override '" + spec + "': empty path");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i)
    node = &(*node)[parts[i]];
  nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;  // plain string
  (*node)[parts.back()] = parsed;
}

RunConfig RunConfig::from_json(nlohmann::json root,
                               const std::vector<std::string>& overrides) {
  RunConfig config;
  config.root_ = std::move(root);
  for (const auto& o : overrides) apply_override(config.root_, o);
  config.validate_keys();
  return config;
}

RunConfig RunConfig::load(const std::string& path,
                          const std::vector<std::string>& overrides) {
  nlohmann::json root = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    try {
      in >> root;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config parse error in '" + path + "': " + e.what());
    }
  }
  return from_json(std::move(root), overrides);
}

void RunConfig::validate_keys() const { check_section(root_, ""); }

std::uint64_t RunConfig::seed() const { return root_.value("seed", 1ULL); }
std::string RunConfig::out_dir() const { return root_.value("out_dir", "."); }
int RunConfig::threads() const {
  return resolve_threads(root_.value("threads", 0));
}

Domain<double> RunConfig::domain() const {
  if (!root_.contains("domain"))
    throw ConfigError("config: missing 'domain' section");
  try {
    return domain_from_json(root_.at("domain"));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: bad domain: ") + e.what());
  }
}

Drift<double> drift_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "zero") return Drift<double>::zero();
    if (name == "linear") return Drift<double>::linear();
    throw ConfigError("config: unknown drift '" + name + "'");
  }
  if (j.is_object()) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "zero") return Drift<double>::zero();
    if (type == "linear" || type == "quadratic")
      return Drift<double>::linear(j.value("scale", 1.0));
    throw ConfigError("config: unknown drift type '" + type + "'");
  }
  throw ConfigError("config: drift must be a string or object");
}

nlohmann::json drift_to_json(const Drift<double>& drift) {
  switch (drift.kind) {
    case Drift<double>::Kind::Zero:
      return "zero";
    case Drift<double>::Kind::Linear:
      return drift.scale == 1.0
                 ? nlohmann::json("linear")
                 : nlohmann::json{{"type", "linear"}, {"scale", drift.scale}};
    case Drift<double>::Kind::Custom:
      return "custom";
  }
  return "zero";
}

Drift<double> RunConfig::drift() const {
  const auto dyn = root_.value("dynamics", nlohmann::json::object());
  if (!dyn.contains("drift")) return Drift<double>::zero();
  return drift_from_json(dyn.at("drift"));
}

DynamicsConfig RunConfig::dynamics() const {
  DynamicsConfig dyn;
  const auto j = root_.value("dynamics", nlohmann::json::object());
  dyn.drift = drift();
  dyn.gamma = j.value("gamma", 1.0);
  dyn.T = j.value("T", 1.0);
  dyn.h = j.value("h", 0.01);
  const std::string inc = j.value("increments", "gaussian");
  if (inc == "gaussian")
    dyn.rademacher = false;
  else if (inc == "rademacher")
    dyn.rademacher = true;
  else
    throw ConfigError("config: increments must be gaussian or rademacher");
  dyn.validate();
  return dyn;
}

ReflectedParams<double> RunConfig::reflected_params() const {
  ReflectedParams<double> params;
  const auto j = root_.value("reflected", nlohmann::json::object());
  if (j.contains("lambda")) params.lambda = j.at("lambda").get<double>();
  if (j.contains("eta")) params.eta = j.at("eta").get<double>();
  if (j.contains("collar")) params.collar = j.at("collar").get<double>();
  if (j.contains("r_min")) params.r_min = j.at("r_min").get<double>();
  return params;
}

ForwardConfig RunConfig::forward_config() const {
  ForwardConfig fc;
  fc.domain = domain();
  fc.dynamics = dynamics();
  fc.reflected_params = reflected_params();
  const auto train = root_.value("train", nlohmann::json::object());
  fc.model = forward_model_from_string(train.value("model", "cld"));
  if (fc.model == ForwardModel::Cld) {
    const std::string def =
        fc.dynamics.drift.is_zero() ? "acoac" : "cbbk";
    fc.kinetic_scheme =
        kinetic_scheme_from_string(train.value("scheme", def));
  } else if (fc.model == ForwardModel::Reflected) {
    fc.reflected_method =
        reflected_method_from_string(train.value("method", "symmetrized"));
  }
  return fc;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig tc;
  tc.forward = forward_config();
  const auto j = root_.value("train", nlohmann::json::object());
  const std::string default_loss =
      tc.forward.model == ForwardModel::Cld ? "ism_cld"
                                            : "ism_reflected_corrected";
  tc.loss = loss_variant_from_string(j.value("loss", default_loss));
  tc.iterations = j.value("iterations", 5000);
  tc.batch = j.value("batch", 0);
  tc.times_per_traj = j.value("times_per_traj", 1);
  if (j.contains("correction_factor"))
    tc.correction_factor = j.at("correction_factor").get<double>();
  tc.fd_delta = j.value("fd_delta", 1e-3);
  tc.lr = j.value("lr", 5e-4);
  tc.ema_decay = j.value("ema_decay", 0.999);
  if (j.contains("hidden"))
    tc.hidden = j.at("hidden").get<std::vector<int>>();
  tc.seed = seed();
  tc.threads = threads();
  tc.cache_batch = j.value("cache_batch", false);
  return tc;
}

GenConfig RunConfig::gen_config() const {
  GenConfig gc;
  gc.domain = domain();
  gc.dynamics = dynamics();
  gc.reflected_params = reflected_params();
  const auto j = root_.value("generate", nlohmann::json::object());
  const std::string scheme = j.value("scheme", "");
  if (j.contains("family")) {
    gc.family = gen_family_from_string(j.at("family").get<std::string>());
  } else if (!scheme.empty()) {
    // Infer the family from the scheme name.
    if (scheme == "euler" || scheme == "unconstrained")
      gc.family = GenFamily::Unconstrained;
    else if (scheme == "projection" || scheme == "symmetrized" ||
             scheme == "reflection" || scheme == "penalty" ||
             scheme == "barrier")
      gc.family = GenFamily::Reflected;
    else
      gc.family = GenFamily::Kinetic;
  }
  if (gc.family == GenFamily::Kinetic && !scheme.empty())
    gc.kinetic_scheme = reverse_scheme_from_string(scheme);
  if (gc.family == GenFamily::Reflected) {
    const std::string method = j.value("method", scheme);
    if (!method.empty())
      gc.reflected_method = reflected_method_from_string(method);
  }
  gc.n_samples = j.value("n_samples", 1000);
  gc.init = gen_init_from_string(j.value("init", "auto"));
  gc.seed = seed();
  gc.keep_velocities = j.value("keep_velocities", false);
  gc.threads = threads();
  return gc;
}

void RunConfig::echo(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / "config_resolved.json");
  if (!out) throw std::runtime_error("cannot write config echo in " + dir);
  out << root_.dump(2) << "\n";
}

}  // namespace confined
