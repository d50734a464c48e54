// include/jdiar/linalg.h

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

#ifndef JDIAR_LINALG_H_
#define JDIAR_LINALG_H_

#include <vector>

#include "jdiar/tensor.h"

namespace jdiar {

// Lower Cholesky factor of a symmetric positive definite matrix;
// NumericalError when the matrix is not PD.
Tensor CholeskyFactor(const Tensor &a);

// Solve A x = b given the lower factor L of A.
std::vector<double> CholeskySolve(const Tensor &chol_l,
                                  const std::vector<double> &b);

// A^{-1} from its lower Cholesky factor.
Tensor CholeskyInverse(const Tensor &chol_l);

// log|A| from its lower Cholesky factor.
double CholeskyLogDet(const Tensor &chol_l);

// Inverse of a lower-triangular matrix.
Tensor LowerTriangularInverse(const Tensor &chol_l);

// Cyclic Jacobi eigendecomposition of a symmetric matrix:
// a = V diag(values) V^T, eigenvalues descending, eigenvectors in the
// columns of V.
void SymmetricEig(const Tensor &a, Tensor *eigvecs,
                  std::vector<double> *eigvals);

Tensor Transpose(const Tensor &a);

}  // namespace jdiar

#endif  // JDIAR_LINALG_H_
