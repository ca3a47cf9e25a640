#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "ggn/error.hpp"

namespace ggn {

enum class Activation { SiLU, ReLU };

/// sup |d/dz SiLU(z)| rounded up; the true value is about 1.0998.
inline constexpr double kSiluDerivativeBound = 1.1;

inline double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::SiLU:
      return z * logistic(z);
    case Activation::ReLU:
      return z > 0.0 ? z : 0.0;
  }
  return 0.0;
}

// ReLU uses the subgradient 0 at the kink.
inline double activate_derivative(Activation a, double z) {
  switch (a) {
    case Activation::SiLU: {
      const double s = logistic(z);
      return s * (1.0 + z * (1.0 - s));
    }
    case Activation::ReLU:
      return z > 0.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

inline std::string to_string(Activation a) { return a == Activation::SiLU ? "silu" : "relu"; }

inline Activation activation_from_string(std::string_view s) {
  if (s == "silu" || s == "SiLU") return Activation::SiLU;
  if (s == "relu" || s == "ReLU") return Activation::ReLU;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

}  // namespace ggn
