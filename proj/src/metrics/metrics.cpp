#include "impactsynth/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "impactsynth/common/error.hpp"

namespace impactsynth::metrics {

namespace {

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite values");
}

Eigen::MatrixXd covariance(const Embeddings& x, const Eigen::RowVectorXd& mean) {
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  return (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
}

// Symmetric PSD square root; small negative eigenvalues from rounding are
// clamped to zero, larger ones are an error.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  if (eig.info() != Eigen::Success) throw InvalidArgument("fid: eigendecomposition failed");
  Eigen::VectorXd values = eig.eigenvalues();
  const double tol = 1e-6 * std::max(1.0, values.maxCoeff());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < -tol) throw InvalidArgument("fid: covariance is not positive semi-definite");
    values[i] = std::sqrt(std::max(values[i], 0.0));
  }
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

std::vector<std::size_t> choose(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(k);
  return idx;
}

void check_probabilities(const Eigen::MatrixXd& m, const char* what) {
  check_finite(m, what);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (m.row(r).minCoeff() < 0.0) throw InvalidArgument(std::string(what) + ": negative probability in row " + std::to_string(r));
    if (std::abs(m.row(r).sum() - 1.0) > 1e-6) throw InvalidArgument(std::string(what) + ": row " + std::to_string(r) + " does not sum to 1");
  }
}

}  // namespace

double fid(const Embeddings& real, const Embeddings& fake) {
  if (real.cols() != fake.cols()) throw InvalidArgument("fid: feature dimensions differ");
  if (real.rows() < 2 || fake.rows() < 2) throw InvalidArgument("fid: need at least two rows per set");
  check_finite(real, "fid");
  check_finite(fake, "fid");
  const Eigen::RowVectorXd m1 = real.colwise().mean();
  const Eigen::RowVectorXd m2 = fake.colwise().mean();
  const Eigen::MatrixXd s1 = covariance(real, m1);
  const Eigen::MatrixXd s2 = covariance(fake, m2);

  const Eigen::MatrixXd r1 = psd_sqrt(s1);
  Eigen::MatrixXd inner = r1 * s2 * r1;
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw InvalidArgument("fid: eigendecomposition failed");
  const Eigen::VectorXd values = eig.eigenvalues();
  const double tol = 1e-6 * std::max(1.0, values.maxCoeff());
  double trace_sqrt = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < -tol) throw InvalidArgument("fid: covariance product is not positive semi-definite");
    trace_sqrt += std::sqrt(std::max(values[i], 0.0));
  }
  const double value = (m1 - m2).squaredNorm() + s1.trace() + s2.trace() - 2.0 * trace_sqrt;
  return std::max(value, 0.0);
}

double mmd2_polynomial(const Embeddings& x, const Embeddings& y) {
  if (x.cols() != y.cols()) throw InvalidArgument("kid: feature dimensions differ");
  if (x.rows() < 2 || y.rows() < 2) throw InvalidArgument("kid: need at least two rows per set");
  const double d = static_cast<double>(x.cols());
  auto kernel = [d](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return ((a * b.transpose()).array() / d + 1.0).cube().matrix().eval();
  };
  const Eigen::MatrixXd kxx = kernel(x, x);
  const Eigen::MatrixXd kyy = kernel(y, y);
  const Eigen::MatrixXd kxy = kernel(x, y);
  const double m = static_cast<double>(x.rows());
  const double n = static_cast<double>(y.rows());
  const double sxx = (kxx.sum() - kxx.trace()) / (m * (m - 1.0));
  const double syy = (kyy.sum() - kyy.trace()) / (n * (n - 1.0));
  const double sxy = kxy.sum() / (m * n);
  return sxx + syy - 2.0 * sxy;
}

KidResult kid(const Embeddings& real, const Embeddings& fake, std::size_t num_subsets, std::size_t subset_size,
              Rng& rng) {
  if (real.cols() != fake.cols()) throw InvalidArgument("kid: feature dimensions differ");
  check_finite(real, "kid");
  check_finite(fake, "kid");
  if (num_subsets == 0) throw InvalidArgument("kid: need at least one subset");
  if (subset_size < 2) throw InvalidArgument("kid: subset size must be at least 2");
  const auto limit = static_cast<std::size_t>(std::min(real.rows(), fake.rows()));
  if (subset_size > limit) {
    throw InvalidArgument("kid: subset size " + std::to_string(subset_size) + " exceeds the smaller set (" +
                          std::to_string(limit) + " rows)");
  }
  std::vector<double> values;
  for (std::size_t s = 0; s < num_subsets; ++s) {
    const auto ri = choose(static_cast<std::size_t>(real.rows()), subset_size, rng);
    const auto fi = choose(static_cast<std::size_t>(fake.rows()), subset_size, rng);
    Embeddings a(static_cast<Eigen::Index>(subset_size), real.cols());
    Embeddings b(static_cast<Eigen::Index>(subset_size), fake.cols());
    for (std::size_t i = 0; i < subset_size; ++i) {
      a.row(static_cast<Eigen::Index>(i)) = real.row(static_cast<Eigen::Index>(ri[i]));
      b.row(static_cast<Eigen::Index>(i)) = fake.row(static_cast<Eigen::Index>(fi[i]));
    }
    values.push_back(mmd2_polynomial(a, b));
  }
  KidResult out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() < 2) {
    out.stddev = std::numeric_limits<double>::quiet_NaN();
  } else {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

double kl_divergence(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) {
    throw InvalidArgument("kl: shape mismatch (" + std::to_string(p.rows()) + "x" + std::to_string(p.cols()) + " vs " +
                          std::to_string(q.rows()) + "x" + std::to_string(q.cols()) + ")");
  }
  if (p.rows() == 0) throw InvalidArgument("kl: no rows");
  check_probabilities(p, "kl");
  check_probabilities(q, "kl");
  double total = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    double row = 0.0;
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      const double pi = p(r, c);
      const double qi = q(r, c);
      if (pi == 0.0 || pi == qi) continue;
      row += pi * std::log(pi / std::max(qi, kKlEpsilon));
    }
    total += std::max(row, 0.0);
  }
  return total / static_cast<double>(p.rows());
}

std::size_t argmax(std::span<const double> row) {
  if (row.empty()) throw InvalidArgument("argmax of an empty row");
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

double recognition_accuracy(const Eigen::MatrixXd& probs, std::span<const int> labels) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) {
    throw InvalidArgument("accuracy: " + std::to_string(labels.size()) + " labels for " + std::to_string(probs.rows()) +
                          " rows");
  }
  if (probs.rows() == 0) throw InvalidArgument("accuracy: no rows");
  check_finite(probs, "accuracy");
  std::size_t hits = 0;
  std::vector<double> row(static_cast<std::size_t>(probs.cols()));
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const int label = labels[static_cast<std::size_t>(r)];
    if (label < 0 || label >= probs.cols()) {
      throw InvalidArgument("accuracy: label " + std::to_string(label) + " out of range for " +
                            std::to_string(probs.cols()) + " classes");
    }
    for (Eigen::Index c = 0; c < probs.cols(); ++c) row[static_cast<std::size_t>(c)] = probs(r, c);
    if (argmax(row) == static_cast<std::size_t>(label)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probs.rows());
}

}  // namespace impactsynth::metrics
