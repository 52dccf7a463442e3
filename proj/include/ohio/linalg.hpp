#pragma once

#include "ohio/core.hpp"

namespace ohio {

struct PseudoInverse {
  Mat matrix;
  int rank = 0;
  bool rank_deficient = false;
};

// SVD-based Moore-Penrose inverse; singular values below rel_tol * sigma_max
// are treated as zero.
PseudoInverse pseudo_inverse(const Mat& m, double rel_tol = 1e-10);

Mat symmetrize(const Mat& m);

// Ratio of extreme singular values; +inf for singular or empty matrices.
double condition_number(const Mat& m);

}  // namespace ohio
