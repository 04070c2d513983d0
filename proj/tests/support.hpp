// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

// Independent oracles and fixtures shared by the unit tests.

#pragma once

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "jumprev/config.hpp"

namespace jrtest {

/// exp(tQ)^T p0 by uniformization: sum_n Pois(n; L t) p0^T P^n with
/// P = I + Q / L.  Independent of the library's matrix exponential.
inline Eigen::VectorXd uniformization(const Eigen::MatrixXd& rates, const Eigen::VectorXd& p0, double t) {
  const Eigen::Index n = rates.rows();
  Eigen::MatrixXd q = rates;
  q.diagonal().setZero();
  double lambda = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double out = q.row(i).sum();
    q(i, i) = -out;
    lambda = std::max(lambda, out);
  }
  lambda = std::max(lambda, 1e-300) * 1.05;
  const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n) + q / lambda;
  Eigen::RowVectorXd v = p0.transpose();
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(n);
  const double mu = lambda * t;
  double logw = -mu;
  double tail = 1.0;
  for (int k = 0; k < 100000 && tail > 1e-17; ++k) {
    const double w = std::exp(logw);
    acc += w * v;
    tail -= w;
    v = v * P;
    logw += std::log(mu) - std::log(k + 1.0);
    if (k > mu && w < 1e-18) break;
  }
  return acc.transpose();
}

inline double poisson_pmf(int k, double mu) {
  return std::exp(-mu + k * std::log(mu) - std::lgamma(k + 1.0));
}

/// Off-diagonal rates uniform on [lo, hi], zero diagonal.
inline Eigen::MatrixXd random_rates(int n, std::mt19937_64& rng, double lo = 0.1, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) m(i, j) = u(rng);
    }
  }
  return m;
}

inline std::string matrix_json(const Eigen::MatrixXd& m) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    s += i ? ",[" : "[";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s%.17g", j ? "," : "", m(i, j));
      s += buf;
    }
    s += "]";
  }
  return s + "]";
}

/// A finite chain document with the given rate matrix and initial vector.
inline std::string chain_document(const Eigen::MatrixXd& rates, const std::vector<double>& p0, double horizon,
                                  const std::string& run = "{}") {
  std::string probs = "[";
  for (std::size_t i = 0; i < p0.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", p0[i]);
    probs += buf;
  }
  probs += "]";
  char h[64];
  std::snprintf(h, sizeof h, "%.17g", horizon);
  return R"({"space": {"type": "finite", "n_states": )" + std::to_string(rates.rows()) +
         R"(}, "kernel": {"type": "rate_matrix", "rates": )" + matrix_json(rates) +
         R"(}, "drift": "0", "delta": 0, "initial_law": {"type": "vector", "probabilities": )" + probs +
         R"(}, "horizon": )" + h + R"(, "run": )" + run + "}";
}

/// Poisson(lambda) on the lattice {0..top} started at 0.
inline std::string poisson_document(double lambda, int top = 50, const std::string& run = "{}") {
  char l[64];
  std::snprintf(l, sizeof l, "%.17g", lambda);
  return R"({"params": {"lambda": )" + std::string(l) +
         R"(}, "space": {"type": "lattice", "box": {"lo": [0], "hi": [)" + std::to_string(top) +
         R"(]}}, "kernel": {"type": "atomic", "atoms": [{"jump": [1], "rate": "lambda"}]},)"
         R"( "drift": "0", "delta": 0, "initial_law": {"type": "point", "x": [0]}, "horizon": 1, "run": )" +
         run + "}";
}

}  // namespace jrtest
