#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "impactsynth/common/rng.hpp"

namespace impactsynth::metrics {

/// n x d, one feature vector per row.
using Embeddings = Eigen::MatrixXd;

/// Frechet distance between Gaussian fits (unbiased covariances):
/// |m1 - m2|^2 + Tr(S1 + S2 - 2 (S1 S2)^(1/2)). The trace of the square root
/// comes from the eigenvalues of the symmetric S1^(1/2) S2 S1^(1/2).
/// Throws InvalidArgument on a dimension mismatch, fewer than two rows,
/// non-finite values, or eigenvalues below -1e-6 * max(1, largest).
double fid(const Embeddings& real, const Embeddings& fake);

struct KidResult {
  double mean = 0.0;
  double stddev = 0.0;  ///< sample standard deviation; NaN for a single subset
};

/// Unbiased MMD^2 with the kernel (x.y / d + 1)^3 on `num_subsets` pairs of
/// random subsets (without replacement) of `subset_size` rows.
KidResult kid(const Embeddings& real, const Embeddings& fake, std::size_t num_subsets, std::size_t subset_size,
              Rng& rng);

/// Unbiased MMD^2 between two whole sets with the cubic polynomial kernel.
double mmd2_polynomial(const Embeddings& x, const Embeddings& y);

/// Smoothing applied to q before taking logs.
inline constexpr double kKlEpsilon = 1e-10;

/// Mean over paired rows of sum_i p_i ln(p_i / max(q_i, eps)), with terms
/// where p_i = 0 or p_i = q_i contributing exactly 0. Rows must be
/// non-negative and sum to 1 within 1e-6.
double kl_divergence(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q);

/// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> row);

/// Fraction of rows whose argmax equals the label.
double recognition_accuracy(const Eigen::MatrixXd& probs, std::span<const int> labels);

}  // namespace impactsynth::metrics
