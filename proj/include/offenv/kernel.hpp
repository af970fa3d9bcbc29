#pragma once

#include <memory>
#include <vector>

#include "offenv/features.hpp"

namespace offenv {

enum class KernelKind { gaussian };

/// Gaussian kernel exp(-|e(x) - e(y)|^2 / (2 h^2)) on an embedding of the
/// state-action pairs. The full Gram matrix over all pairs is built once.
class Kernel {
 public:
  Kernel(FeatureMap embedding, double bandwidth);

  double operator()(int x, int y) const { return gram_(x, y); }
  const Eigen::MatrixXd& gram() const { return gram_; }
  double bandwidth() const { return bandwidth_; }
  KernelKind kind() const { return KernelKind::gaussian; }
  const FeatureMap& embedding() const { return embedding_; }

  /// Smallest eigenvalue of the Gram matrix (>= -1e-8 for a valid kernel).
  double min_eigenvalue() const;

 private:
  FeatureMap embedding_;
  double bandwidth_;
  Eigen::MatrixXd gram_;
};

using KernelPtr = std::shared_ptr<const Kernel>;

/// Median Euclidean distance between embeddings of the distinct pairs listed
/// (duplicates ignored). Returns 1 when fewer than two distinct pairs exist.
double median_pairwise_distance(const FeatureMap& embedding, const std::vector<int>& pairs);

/// {h/3, h/2, h}.
std::vector<double> bandwidth_sweep(double median_distance);

}  // namespace offenv
