#pragma once

#include <cstddef>
#include <stdexcept>

#include "data.hpp"
#include "losses.hpp"

namespace sdca_admm {

struct TestMetrics {
  double loss = 0.0;
  double error = 0.0;
};

/// Mean loss and 0/1 error of the linear classifier w on `test`. A zero
/// margin counts as a misclassification.
inline TestMetrics compute_test_metrics(std::span<const double> w, const Dataset& test, LossKind kind) {
  const std::size_t n = test.sample_count();
  if (n == 0) throw std::invalid_argument("compute_test_metrics: empty test set");
  if (w.size() != test.feature_dim()) throw std::invalid_argument("compute_test_metrics: dimension mismatch");
  double loss = 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = test.Z.column_dot(i, w);
    const double y = test.labels[i];
    loss += loss_value(kind, u, y);
    if (y * u <= 0.0) ++wrong;
  }
  return {loss / static_cast<double>(n), static_cast<double>(wrong) / static_cast<double>(n)};
}

}  // namespace sdca_admm
