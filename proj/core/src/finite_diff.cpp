#include "samkit/finite_diff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace samkit {

std::vector<double> finite_diff_grad(const ScalarFn& f, std::span<const double> x, double h) {
  if (!(h > 0.0)) {
    throw std::invalid_argument("finite_diff_grad: step must be positive");
  }
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> grad(x.size(), 0.0);
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + h;
    const double hi = f(point);
    point[i] = saved - h;
    const double lo = f(point);
    point[i] = saved;
    if (!std::isfinite(hi) || !std::isfinite(lo)) {
      throw std::runtime_error("finite_diff_grad: non-finite evaluation at coordinate " +
                               std::to_string(i));
    }
    grad[i] = (hi - lo) / (2.0 * h);
  }
  return grad;
}

}  // namespace samkit
