// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "jumprev/core.hpp"

namespace jumprev {

struct Integral {
  double value = 0.0;
  bool divergent = false;
};

/// Integrates g over [lo, hi] minus {|xi| <= cutoff} using a dyadic shell
/// decomposition {2^-m < |xi| <= 2^-m+1}, m <= 40, plus outer shells above
/// 1.  Each shell uses 20-point Gauss-Legendre.  The integral is declared
/// divergent when a partial sum exceeds 1e12 or the innermost shell
/// contributions fail to decay geometrically; otherwise the geometric tail
/// below 2^-40 is added.
Integral integrate_shells(const std::function<double(double)>& g, double lo, double hi,
                          double cutoff = 0.0);

/// int f(xi) K(dxi) over {|xi| > cutoff} for a frozen kernel.
Integral integrate_kernel(const LocalKernel& kernel, const std::function<double(const Point&)>& f,
                          double cutoff = 0.0);

/// int g(xi) K(dxi) for a jump-vector valued integrand, one component at a
/// time.  Density parts are one-dimensional.
struct VectorIntegral {
  Point value;
  bool divergent = false;
};
VectorIntegral integrate_kernel_vector(const LocalKernel& kernel, int dimension,
                                       const std::function<Point(const Point&)>& f,
                                       double cutoff = 0.0);

/// Smallest dyadic radius 2^k outside which the kernel mass is below 1e-12
/// (0 for the null kernel).
double dyadic_jump_range(const LocalKernel& kernel);

}  // namespace jumprev
