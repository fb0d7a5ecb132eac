// Copyright 2026 The SVC Authors. All Rights Reserved.
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

#include <cmath>
#include <functional>

#include "svc/nn/tensor.hpp"

namespace svc::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  Eigen::Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps coordinates whose true
/// gradient is ~0 from reporting pure rounding noise as relative error.
inline double relative_error(double analytic, double numeric, double floor = 1e-3) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares `analytic` against central differences of `f` at `x`.
/// `skip(i)` excludes coordinates (e.g. sitting on a kink).
inline GradCheckResult grad_check(const std::function<double(const Vec<double>&)>& f,
                                  const Vec<double>& analytic, const Vec<double>& x,
                                  double eps = 1e-3,
                                  const std::function<bool(Eigen::Index)>& skip = {}) {
  GradCheckResult result;
  Vec<double> probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (skip && skip(i)) continue;
    probe(i) = x(i) + eps;
    const double up = f(probe);
    probe(i) = x(i) - eps;
    const double down = f(probe);
    probe(i) = x(i);
    const double numeric = (up - down) / (2.0 * eps);
    const double err = relative_error(analytic(i), numeric);
    if (result.worst_index < 0 || err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst_index = i;
      result.analytic = analytic(i);
      result.numeric = numeric;
    }
  }
  return result;
}

}  // namespace svc::nn
