#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "neada/core.hpp"

namespace testutil {

// Central difference of a scalar function along coordinate i.
inline double central_diff(const std::function<double(const neada::Vec&)>& f, neada::Vec p,
                           std::size_t i, double h) {
  const double orig = p[i];
  p[i] = orig + h;
  const double up = f(p);
  p[i] = orig - h;
  const double down = f(p);
  return (up - down) / (2.0 * h);
}

inline bool rel_close(double a, double b, double rel, double abs_floor = 0.0) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), abs_floor});
}

}  // namespace testutil
