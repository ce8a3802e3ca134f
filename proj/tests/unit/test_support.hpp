#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "enzygen/autodiff.hpp"
#include "enzygen/rng.hpp"
#include "enzygen/tensor.hpp"

namespace enzygen::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Largest |analytic − central difference| / (|central difference| + 1e-8)
/// over every coordinate of every input.
inline double max_gradient_error(const ScalarFn& f, std::vector<Tensor> inputs, double h = 1e-5) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  {
    Tape tape;
    std::vector<Var> vars;
    for (auto& t : inputs) vars.push_back(tape.leaf(t));
    tape.backward(f(tape, vars));
  }
  auto evaluate = [&]() {
    Tape tape;
    std::vector<Var> vars;
    for (auto& t : inputs) vars.push_back(tape.constant(t));
    return f(tape, vars).item();
  };
  double worst = 0.0;
  for (auto& t : inputs) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + h;
      const double up = evaluate();
      t[i] = saved - h;
      const double down = evaluate();
      t[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      worst = std::max(worst, std::abs(t.grad()[i] - numeric) / (std::abs(numeric) + 1e-8));
    }
  }
  return worst;
}

/// Contracts a tensor-valued op with fixed random weights to get a scalar.
inline Var project(Tape& tape, Var out, std::uint64_t seed) {
  Rng rng(seed);
  Tensor w = random_tensor(out.value().shape(), rng, 0.5, 1.5);
  return sum(mul(out, tape.constant(std::move(w))));
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace enzygen::testing
