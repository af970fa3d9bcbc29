#include "offenv/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "offenv/errors.hpp"

namespace offenv {

Kernel::Kernel(FeatureMap embedding, double bandwidth)
    : embedding_(std::move(embedding)), bandwidth_(bandwidth) {
  if (!(bandwidth_ > 0.0)) throw InvalidModel("kernel bandwidth must be positive");
  embedding_.validate();
  const int n = embedding_.n_pairs();
  gram_.resize(n, n);
  const double denom = 2.0 * bandwidth_ * bandwidth_;
  for (int i = 0; i < n; ++i) {
    gram_(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const double d2 = (embedding_.row(i) - embedding_.row(j)).squaredNorm();
      gram_(i, j) = gram_(j, i) = std::exp(-d2 / denom);
    }
  }
}

double Kernel::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram_, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

double median_pairwise_distance(const FeatureMap& embedding, const std::vector<int>& pairs) {
  const std::set<int> distinct(pairs.begin(), pairs.end());
  const std::vector<int> xs(distinct.begin(), distinct.end());
  std::vector<double> dists;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j)
      dists.push_back((embedding.row(xs[i]) - embedding.row(xs[j])).norm());
  if (dists.empty()) return 1.0;
  const auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  double median = *mid;
  if (dists.size() % 2 == 0) median = 0.5 * (median + *std::max_element(dists.begin(), mid));
  return median > 0.0 ? median : 1.0;
}

std::vector<double> bandwidth_sweep(double median_distance) {
  return {median_distance / 3.0, median_distance / 2.0, median_distance};
}

}  // namespace offenv
