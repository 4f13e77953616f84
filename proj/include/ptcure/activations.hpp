#pragma once

#include <cmath>
#include <string>

#include "ptcure/errors.hpp"

namespace ptcure {

enum class Activation { relu, tanh, sigmoid, elu, linear };

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::elu: return z > 0.0 ? z : std::expm1(z);
    case Activation::linear: return z;
  }
  return z;
}

// Derivative in terms of pre-activation z and activation value a.
// ReLU takes subgradient 0 at z = 0; ELU' = a + 1 below zero.
inline double activate_grad(Activation act, double z, double a) {
  switch (act) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - a * a;
    case Activation::sigmoid: return a * (1.0 - a);
    case Activation::elu: return z > 0.0 ? 1.0 : a + 1.0;
    case Activation::linear: return 1.0;
  }
  return 1.0;
}

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::elu: return "elu";
    case Activation::linear: return "linear";
  }
  return "linear";
}

inline Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "elu") return Activation::elu;
  if (s == "linear") return Activation::linear;
  throw ValidationError("unknown activation '" + s + "'");
}

}  // namespace ptcure
