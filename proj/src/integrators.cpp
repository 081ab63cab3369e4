#include "confined/integrators.hpp"

#include <stdexcept>

namespace confined {

KineticScheme kinetic_scheme_from_string(const std::string& name) {
  if (name == "acoac") return KineticScheme::AcOAc;
  if (name == "oaco") return KineticScheme::OAcO;
  if (name == "cbbk") return KineticScheme::Cbbk;
  throw std::invalid_argument("unknown forward kinetic scheme '" + name + "'");
}

std::string to_string(KineticScheme scheme) {
  switch (scheme) {
    case KineticScheme::AcOAc:
      return "acoac";
    case KineticScheme::OAcO:
      return "oaco";
    case KineticScheme::Cbbk:
      return "cbbk";
  }
  return "?";
}

ReverseKineticScheme reverse_scheme_from_string(const std::string& name) {
  if (name == "saoas" || name == "saoas_2fe") return ReverseKineticScheme::Saoas;
  if (name == "baoas" || name == "saoas_1fe") return ReverseKineticScheme::Baoas;
  if (name == "osaso") return ReverseKineticScheme::Osaso;
  if (name == "asosa") return ReverseKineticScheme::Asosa;
  if (name == "aosoa") return ReverseKineticScheme::Aosoa;
  if (name == "obaso") return ReverseKineticScheme::Obaso;
  if (name == "cbbk_s") return ReverseKineticScheme::CbbkS;
  throw std::invalid_argument("unknown reverse kinetic scheme '" + name + "'");
}

std::string to_string(ReverseKineticScheme scheme) {
  switch (scheme) {
    case ReverseKineticScheme::Saoas:
      return "saoas";
    case ReverseKineticScheme::Baoas:
      return "baoas";
    case ReverseKineticScheme::Osaso:
      return "osaso";
    case ReverseKineticScheme::Asosa:
      return "asosa";
    case ReverseKineticScheme::Aosoa:
      return "aosoa";
    case ReverseKineticScheme::Obaso:
      return "obaso";
    case ReverseKineticScheme::CbbkS:
      return "cbbk_s";
  }
  return "?";
}

int scheme_nfe_per_step(ReverseKineticScheme scheme) {
  switch (scheme) {
    case ReverseKineticScheme::Saoas:
    case ReverseKineticScheme::Osaso:
    case ReverseKineticScheme::Asosa:
      return 2;
    case ReverseKineticScheme::Baoas:
    case ReverseKineticScheme::Aosoa:
    case ReverseKineticScheme::Obaso:
    case ReverseKineticScheme::CbbkS:
      return 1;
  }
  return 0;
}

bool scheme_uses_drift(ReverseKineticScheme) { return true; }

ReflectedMethod reflected_method_from_string(const std::string& name) {
  if (name == "projection") return ReflectedMethod::Projection;
  if (name == "symmetrized" || name == "reflection")
    return ReflectedMethod::Symmetrized;
  if (name == "penalty") return ReflectedMethod::Penalty;
  if (name == "barrier") return ReflectedMethod::Barrier;
  throw std::invalid_argument("unknown reflected method '" + name + "'");
}

std::string to_string(ReflectedMethod method) {
  switch (method) {
    case ReflectedMethod::Projection:
      return "projection";
    case ReflectedMethod::Symmetrized:
      return "symmetrized";
    case ReflectedMethod::Penalty:
      return "penalty";
    case ReflectedMethod::Barrier:
      return "barrier";
  }
  return "?";
}

}  // namespace confined
