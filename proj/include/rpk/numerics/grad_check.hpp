// Copyright 2026 The rpk Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rpk/errors.hpp"
#include "rpk/numerics/tape.hpp"

namespace rpk::ad {

struct Parameter {
  std::string id;
  Tensor value;
  bool requires_grad = true;
};

// Builds a scalar from one Var per Parameter, in the same order.
using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

namespace detail {

inline double evaluate(const ScalarFn& fn, std::span<const Parameter> params, bool track) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) {
    vars.push_back(track && p.requires_grad ? tape.parameter(p.id, p.value) : tape.constant(p.value));
  }
  const Var out = fn(tape, vars);
  if (out.value().size() != 1) throw ShapeError("grad_check: function output is not scalar");
  const double v = out.value().item();
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite function value");
  return v;
}

}  // namespace detail

// Max over every entry of every trainable parameter of
// |analytic - central difference| / max(1, |central difference|).
inline double grad_check(const ScalarFn& fn, std::vector<Parameter> params, double step) {
  if (!(step > 0.0)) throw ConfigError("grad_check: step must be positive");

  Gradients analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& p : params) {
      vars.push_back(p.requires_grad ? tape.parameter(p.id, p.value) : tape.constant(p.value));
    }
    const Var out = fn(tape, vars);
    if (!std::isfinite(out.value().item())) throw NumericError("grad_check: non-finite function value");
    analytic = backward(out);
  }

  double worst = 0.0;
  for (auto& p : params) {
    if (!p.requires_grad) continue;
    const Tensor& g = analytic.at(p.id);
    if (!g.all_finite()) throw NumericError("grad_check: non-finite gradient for '" + p.id + "'");
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double original = p.value[i];
      p.value[i] = original + step;
      const double up = detail::evaluate(fn, params, false);
      p.value[i] = original - step;
      const double down = detail::evaluate(fn, params, false);
      p.value[i] = original;
      const double numeric = (up - down) / (2.0 * step);
      worst = std::max(worst, std::abs(g[i] - numeric) / std::max(1.0, std::abs(numeric)));
    }
  }
  return worst;
}

}  // namespace rpk::ad
