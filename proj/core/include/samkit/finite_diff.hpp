#pragma once

#include <functional>
#include <span>
#include <vector>

namespace samkit {

using ScalarFn = std::function<double(std::span<const double>)>;

/// Central-difference gradient estimate (f(x + h e_i) - f(x - h e_i)) / 2h.
/// Deliberately independent of the tape machinery so it can serve as an
/// oracle for it. Throws if f evaluates to a non-finite value, naming the
/// offending coordinate.
std::vector<double> finite_diff_grad(const ScalarFn& f, std::span<const double> x, double h);

}  // namespace samkit
