// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#include "jumprev/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>

namespace jumprev {

namespace {

constexpr int kInnerShells = 40;
constexpr double kDivergenceBound = 1e12;
constexpr double kDecayRatio = 0.999;
constexpr double kNegligibleMass = 1e-12;

double gauss(const std::function<double(double)>& g, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss<double, 20>::integrate(g, a, b);
}

// Integral of r -> g(sign * r) over (rmin, rmax], split into dyadic shells.
Integral radial(const std::function<double(double)>& g, double sign, double rmin, double rmax) {
  Integral out;
  if (!(rmax > rmin)) return out;
  auto gr = [&](double r) { return g(sign * r); };

  // Outer shells (1, 2], (2, 4], ...
  for (double lo = 1.0; lo < rmax; lo *= 2.0) {
    const double a = std::max(lo, rmin);
    const double b = std::min(2.0 * lo, rmax);
    out.value += gauss(gr, a, b);
  }

  // Inner shells (2^-m, 2^-m+1], innermost last.
  double prev = 0.0;
  double last = 0.0;
  bool reached_floor = true;
  for (int m = 1; m <= kInnerShells; ++m) {
    const double hi = std::ldexp(1.0, -m + 1);
    const double lo = std::ldexp(1.0, -m);
    if (hi <= rmin) {
      reached_floor = false;
      break;
    }
    const double c = gauss(gr, std::max(lo, rmin), std::min(hi, rmax));
    out.value += c;
    if (!std::isfinite(out.value) || std::abs(out.value) > kDivergenceBound) {
      out.divergent = true;
      return out;
    }
    prev = last;
    last = c;
    if (lo <= rmin) {
      reached_floor = false;
      break;
    }
  }

  if (reached_floor && last != 0.0) {
    // Singular behaviour below 2^-40: extrapolate the geometric tail, or
    // declare divergence if the shells stopped shrinking.
    if (prev == 0.0) {
      out.divergent = true;
      return out;
    }
    const double ratio = last / prev;
    if (std::abs(ratio) >= kDecayRatio) {
      out.divergent = true;
      return out;
    }
    out.value += last * ratio / (1.0 - ratio);
  }
  return out;
}

}  // namespace

Integral integrate_shells(const std::function<double(double)>& g, double lo, double hi,
                          double cutoff) {
  Integral out;
  cutoff = std::max(cutoff, 0.0);
  // Positive side: xi in (max(lo, 0), hi].
  if (hi > 0.0) {
    const Integral pos = radial(g, 1.0, std::max({lo, 0.0, cutoff}), hi);
    out.value += pos.value;
    out.divergent = out.divergent || pos.divergent;
  }
  // Negative side: xi in [lo, min(hi, 0)), r = -xi.
  if (lo < 0.0) {
    const Integral neg = radial(g, -1.0, std::max({-hi, 0.0, cutoff}), -lo);
    out.value += neg.value;
    out.divergent = out.divergent || neg.divergent;
  }
  if (out.divergent) out.value = std::numeric_limits<double>::infinity();
  return out;
}

Integral integrate_kernel(const LocalKernel& kernel, const std::function<double(const Point&)>& f,
                          double cutoff) {
  Integral out;
  for (const auto& atom : kernel.atoms) {
    if (atom.rate == 0.0 || atom.jump.norm() <= cutoff) continue;
    out.value += atom.rate * f(atom.jump);
  }
  if (kernel.density) {
    const auto& d = *kernel.density;
    Point xi(1);
    const Integral part = integrate_shells(
        [&](double s) {
          xi[0] = s;
          return f(xi) * d.density(s);
        },
        d.lo, d.hi, cutoff);
    out.value += part.value;
    out.divergent = part.divergent;
  }
  return out;
}

VectorIntegral integrate_kernel_vector(const LocalKernel& kernel, int dimension,
                                       const std::function<Point(const Point&)>& f,
                                       double cutoff) {
  VectorIntegral out{Point::Zero(dimension), false};
  for (const auto& atom : kernel.atoms) {
    if (atom.rate == 0.0 || atom.jump.norm() <= cutoff) continue;
    out.value += atom.rate * f(atom.jump);
  }
  if (kernel.density) {
    const auto& d = *kernel.density;
    Point xi(1);
    for (int c = 0; c < dimension; ++c) {
      const Integral part = integrate_shells(
          [&](double s) {
            xi[0] = s;
            return f(xi)[c] * d.density(s);
          },
          d.lo, d.hi, cutoff);
      out.value[c] += part.value;
      out.divergent = out.divergent || part.divergent;
    }
  }
  return out;
}

double dyadic_jump_range(const LocalKernel& kernel) {
  auto mass_beyond = [&](double radius) {
    double mass = 0.0;
    for (const auto& atom : kernel.atoms) {
      if (atom.rate > 0.0 && atom.jump.norm() > radius) mass += atom.rate;
    }
    if (kernel.density) {
      const auto& d = *kernel.density;
      const Integral part = integrate_shells(d.density, d.lo, d.hi, radius);
      mass += part.divergent ? std::numeric_limits<double>::infinity() : part.value;
    }
    return mass;
  };

  double sup = 0.0;
  for (const auto& atom : kernel.atoms) {
    if (atom.rate > 0.0) sup = std::max(sup, atom.jump.norm());
  }
  if (kernel.density) sup = std::max({sup, std::abs(kernel.density->lo), kernel.density->hi});
  if (sup == 0.0) return 0.0;

  // Mass beyond 2^k is nonincreasing in k: bisect on the exponent.
  int hi = static_cast<int>(std::ceil(std::log2(sup)));
  int lo = -kInnerShells;
  if (mass_beyond(std::ldexp(1.0, lo)) < kNegligibleMass) return std::ldexp(1.0, lo);
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (mass_beyond(std::ldexp(1.0, mid)) < kNegligibleMass) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::ldexp(1.0, hi);
}

}  // namespace jumprev
