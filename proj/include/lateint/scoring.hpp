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

#pragma once

#include <string>

#include "lateint/errors.hpp"
#include "lateint/types.hpp"

namespace lateint {

namespace detail {

template <typename DQ, typename DD>
void check_same_dim(const Eigen::MatrixBase<DQ>& q, const Eigen::MatrixBase<DD>& d) {
  if (q.cols() != d.cols()) {
    throw DimMismatch("query dim " + std::to_string(q.cols()) + " != document dim " +
                      std::to_string(d.cols()));
  }
}

// Query-token x document-token similarity, accumulated in double.
template <typename DQ, typename DD>
Eigen::MatrixXd similarity(const Eigen::MatrixBase<DQ>& q, const Eigen::MatrixBase<DD>& d) {
  return q.template cast<double>() * d.template cast<double>().transpose();
}

}  // namespace detail

// Late-interaction score: for each query token the best dot product against any
// document token, summed over query tokens. Inputs are expected unit-normalized.
template <typename DQ, typename DD>
double maxsim(const Eigen::MatrixBase<DQ>& q, const Eigen::MatrixBase<DD>& d) {
  detail::check_same_dim(q, d);
  if (q.rows() == 0 || d.rows() == 0) return 0.0;
  return detail::similarity(q, d).rowwise().maxCoeff().sum();
}

// Subgradient of maxsim with respect to the query: row i is the document token
// that wins row i's max. Ties go to the lowest document-token index.
template <typename DQ, typename DD>
TokenMatrixd maxsim_grad_query(const Eigen::MatrixBase<DQ>& q, const Eigen::MatrixBase<DD>& d) {
  detail::check_same_dim(q, d);
  TokenMatrixd grad = TokenMatrixd::Zero(q.rows(), q.cols());
  if (d.rows() == 0) return grad;
  const Eigen::MatrixXd sim = detail::similarity(q, d);
  for (Index i = 0; i < sim.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < sim.cols(); ++j) {
      if (sim(i, j) > sim(i, best)) best = j;
    }
    grad.row(i) = d.row(best).template cast<double>();
  }
  return grad;
}

// Student and teacher scores for one query over n candidates; index 0 is the
// positive by convention.
struct NWayScoreVector {
  Eigen::VectorXd student;
  Eigen::VectorXd teacher;
};

inline constexpr const char* kKlDirection = "KL(teacher || student)";

Eigen::VectorXd log_softmax(const Eigen::VectorXd& scores, double temperature = 1.0);

// KL(softmax(teacher / T) || softmax(student / T)).
double kl_distill_loss(const NWayScoreVector& v, double temperature = 1.0);

// d loss / d student_k = (P_student(k) - P_teacher(k)) / T.
Eigen::VectorXd kl_distill_grad(const NWayScoreVector& v, double temperature = 1.0);

}  // namespace lateint
