// src/linalg.cc

// Copyright 2026  Jdiar Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "jdiar/linalg.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace jdiar {

static void CheckSquare(const Tensor &a, const char *what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw DimensionError(std::string(what) + ": matrix must be square, got " +
                         a.ShapeString());
  }
}

Tensor CholeskyFactor(const Tensor &a) {
  CheckSquare(a, "cholesky");
  const int n = a.rows();
  Tensor l({n, n});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = a.at(i, j);
      for (int k = 0; k < j; ++k) sum -= l.at(i, k) * l.at(j, k);
      if (i == j) {
        if (sum <= 0.0 || !std::isfinite(sum)) {
          throw NumericalError("cholesky: matrix not positive definite");
        }
        l.at(i, j) = std::sqrt(sum);
      } else {
        l.at(i, j) = sum / l.at(j, j);
      }
    }
  }
  return l;
}

std::vector<double> CholeskySolve(const Tensor &chol_l,
                                  const std::vector<double> &b) {
  const int n = chol_l.rows();
  if (static_cast<int>(b.size()) != n) {
    throw DimensionError("cholesky solve: vector length mismatch");
  }
  std::vector<double> y(n), x(n);
  for (int i = 0; i < n; ++i) {
    double sum = b[i];
    for (int k = 0; k < i; ++k) sum -= chol_l.at(i, k) * y[k];
    y[i] = sum / chol_l.at(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    double sum = y[i];
    for (int k = i + 1; k < n; ++k) sum -= chol_l.at(k, i) * x[k];
    x[i] = sum / chol_l.at(i, i);
  }
  return x;
}

Tensor LowerTriangularInverse(const Tensor &chol_l) {
  const int n = chol_l.rows();
  Tensor inv({n, n});
  for (int j = 0; j < n; ++j) {
    inv.at(j, j) = 1.0 / chol_l.at(j, j);
    for (int i = j + 1; i < n; ++i) {
      double sum = 0.0;
      for (int k = j; k < i; ++k) sum += chol_l.at(i, k) * inv.at(k, j);
      inv.at(i, j) = -sum / chol_l.at(i, i);
    }
  }
  return inv;
}

Tensor CholeskyInverse(const Tensor &chol_l) {
  Tensor linv = LowerTriangularInverse(chol_l);
  // A^{-1} = L^{-T} L^{-1}
  const int n = linv.rows();
  Tensor out({n, n});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = 0.0;
      for (int k = std::max(i, j); k < n; ++k) {
        sum += linv.at(k, i) * linv.at(k, j);
      }
      out.at(i, j) = sum;
      out.at(j, i) = sum;
    }
  }
  return out;
}

double CholeskyLogDet(const Tensor &chol_l) {
  double logdet = 0.0;
  for (int i = 0; i < chol_l.rows(); ++i) {
    logdet += 2.0 * std::log(chol_l.at(i, i));
  }
  return logdet;
}

Tensor Transpose(const Tensor &a) {
  Tensor out({a.cols(), a.rows()});
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  }
  return out;
}

void SymmetricEig(const Tensor &a, Tensor *eigvecs,
                  std::vector<double> *eigvals) {
  CheckSquare(a, "symmetric eig");
  const int n = a.rows();
  Tensor m = a;
  Tensor v({n, n});
  for (int i = 0; i < n; ++i) v.at(i, i) = 1.0;

  double off = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) off += m.at(i, j) * m.at(i, j);
  }
  double norm = 0.0;
  for (size_t i = 0; i < m.size(); ++i) norm += m[i] * m[i];
  const double tol = 1e-24 * std::max(norm, 1e-300);

  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps && off > tol; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = m.at(p, q);
        if (apq == 0.0) continue;
        const double app = m.at(p, p), aqq = m.at(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double mkp = m.at(k, p), mkq = m.at(k, q);
          m.at(k, p) = c * mkp - s * mkq;
          m.at(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const double mpk = m.at(p, k), mqk = m.at(q, k);
          m.at(p, k) = c * mpk - s * mqk;
          m.at(q, k) = s * mpk + c * mqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v.at(k, p), vkq = v.at(k, q);
          v.at(k, p) = c * vkp - s * vkq;
          v.at(k, q) = s * vkp + c * vkq;
        }
      }
    }
    off = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) off += m.at(i, j) * m.at(i, j);
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> diag(n);
  for (int i = 0; i < n; ++i) diag[i] = m.at(i, i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return diag[x] > diag[y]; });

  eigvals->resize(n);
  *eigvecs = Tensor({n, n});
  for (int j = 0; j < n; ++j) {
    (*eigvals)[j] = diag[order[j]];
    for (int i = 0; i < n; ++i) eigvecs->at(i, j) = v.at(i, order[j]);
  }
}

}  // namespace jdiar
