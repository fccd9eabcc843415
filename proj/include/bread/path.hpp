#pragma once

#include <functional>
#include <stdexcept>
#include <utility>

#include "bread/logspace.hpp"

namespace bread {

// Geometric bridge between two unnormalized densities:
//   log f_beta(x) = (1 - beta) log f_initial(x) + beta log f_target(x).
// Gradients, when present, combine by the same linear rule; models without
// gradients leave them empty and gradient-based kernels are unavailable.
template <class State>
struct GeometricPath {
  std::function<double(const State&)> log_f_initial;
  std::function<double(const State&)> log_f_target;
  std::function<State(const State&)> grad_log_f_initial;  // optional
  std::function<State(const State&)> grad_log_f_target;   // optional

  bool has_gradients() const {
    return static_cast<bool>(grad_log_f_initial) && static_cast<bool>(grad_log_f_target);
  }
};

// Combine endpoint log densities at inverse temperature beta. A -inf endpoint
// with nonzero coefficient forces -inf; a zero coefficient ignores its
// endpoint entirely so the exact endpoint densities are returned at beta 0, 1.
inline double combine_log_endpoints(double log_initial, double log_target, double beta) {
  if (beta == 0.0) return log_initial;
  if (beta == 1.0) return log_target;
  if (is_log_zero(log_initial) || is_log_zero(log_target)) return log_zero;
  return (1.0 - beta) * log_initial + beta * log_target;
}

template <class State>
double log_f_at(const GeometricPath<State>& path, double beta, const State& x) {
  if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("log_f_at: beta outside [0,1]");
  const double li = sanitize_log_density(path.log_f_initial(x));
  const double lt = sanitize_log_density(path.log_f_target(x));
  return combine_log_endpoints(li, lt, beta);
}

template <class State>
State grad_log_f_at(const GeometricPath<State>& path, double beta, const State& x) {
  if (!path.has_gradients()) throw std::invalid_argument("path has no gradients");
  if (beta == 0.0) return path.grad_log_f_initial(x);
  if (beta == 1.0) return path.grad_log_f_target(x);
  State g = path.grad_log_f_initial(x);
  State h = path.grad_log_f_target(x);
  g = (1.0 - beta) * g + beta * h;
  return g;
}

// Annealing path for Bayesian posterior inference: f_1 is the prior (Z_1 = 1)
// and f_T is prior * likelihood, so Z_T is the marginal likelihood of y.
// The observation is captured by value and never mutated.
template <class Model, class Data>
GeometricPath<typename Model::State> posterior_path(const Model& model, Data y) {
  using State = typename Model::State;
  GeometricPath<State> path;
  path.log_f_initial = [model](const State& t) { return model.log_prior(t); };
  path.log_f_target = [model, y](const State& t) {
    return model.log_prior(t) + model.log_likelihood(t, y);
  };
  if constexpr (requires(const Model& m, const State& t, const Data& d) {
                  m.grad_log_prior(t);
                  m.grad_log_likelihood(t, d);
                }) {
    path.grad_log_f_initial = [model](const State& t) { return model.grad_log_prior(t); };
    path.grad_log_f_target = [model, y](const State& t) {
      State g = model.grad_log_prior(t);
      g += model.grad_log_likelihood(t, y);
      return g;
    };
  }
  return path;
}

}  // namespace bread
