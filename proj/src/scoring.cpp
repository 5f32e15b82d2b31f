// Copyright 2026 The lateint Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lateint/scoring.hpp"

#include <cmath>

namespace lateint {

namespace {

void validate(const NWayScoreVector& v, double temperature) {
  if (v.student.size() != v.teacher.size()) {
    throw DimMismatch("student has " + std::to_string(v.student.size()) + " scores, teacher has " +
                      std::to_string(v.teacher.size()));
  }
  if (v.student.size() < 2) throw Error("n-way score vector needs n >= 2");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error("temperature must be a positive finite number");
  }
  if (!v.student.allFinite() || !v.teacher.allFinite()) {
    throw NonFiniteScore("n-way score vector contains NaN or infinity");
  }
}

}  // namespace

Eigen::VectorXd log_softmax(const Eigen::VectorXd& scores, double temperature) {
  const Eigen::VectorXd z = scores / temperature;
  const double shift = z.maxCoeff();
  const double log_norm = shift + std::log((z.array() - shift).exp().sum());
  return z.array() - log_norm;
}

double kl_distill_loss(const NWayScoreVector& v, double temperature) {
  validate(v, temperature);
  const Eigen::VectorXd log_p = log_softmax(v.teacher, temperature);
  const Eigen::VectorXd log_q = log_softmax(v.student, temperature);
  double loss = 0.0;
  for (Index k = 0; k < log_p.size(); ++k) {
    const double p = std::exp(log_p[k]);
    if (p > 0.0) loss += p * (log_p[k] - log_q[k]);
  }
  // Rounding can leave a tiny negative residue when the distributions match.
  return std::max(loss, 0.0);
}

Eigen::VectorXd kl_distill_grad(const NWayScoreVector& v, double temperature) {
  validate(v, temperature);
  const Eigen::VectorXd p = log_softmax(v.teacher, temperature).array().exp();
  const Eigen::VectorXd q = log_softmax(v.student, temperature).array().exp();
  return (q - p) / temperature;
}

}  // namespace lateint
