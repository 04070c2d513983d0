// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#include "jumprev/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "jumprev/errors.hpp"

namespace jumprev {

DriftFlow::DriftFlow(DriftField drift, double step) : drift_(std::move(drift)), step_(step) {
  if (!(step > 0.0)) throw Error(ErrorKind::InvalidArgument, "flow step must be positive");
}

Point DriftFlow::operator()(double t0, const Point& x0, double t1) const {
  if (!(t1 > t0) || drift_.is_zero()) return x0;
  if (drift_.hints().is_constant) return x0 + (t1 - t0) * drift_(t0, x0);
  const double span = t1 - t0;
  const auto n = std::max<long>(1, static_cast<long>(std::ceil(span / step_ - 1e-9)));
  const double h = span / static_cast<double>(n);
  Point x = x0;
  for (long i = 0; i < n; ++i) {
    const double t = t0 + h * static_cast<double>(i);
    const Point k1 = drift_(t, x);
    const Point k2 = drift_(t + h / 2, x + h / 2 * k1);
    const Point k3 = drift_(t + h / 2, x + h / 2 * k2);
    const Point k4 = drift_(t + h, x + h * k3);
    x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return x;
}

// ---------------------------------------------------------------------------

Trajectory::Trajectory(const Point& initial, double horizon, std::shared_ptr<const DriftFlow> flow)
    : dim_(static_cast<int>(initial.size())), horizon_(horizon), flow_(std::move(flow)) {
  states_.assign(initial.data(), initial.data() + dim_);
}

void Trajectory::add_event(double t, const Point& pre, const Point& post) {
  if (reversed_ || finished_) throw Error(ErrorKind::InvalidArgument, "trajectory is closed");
  if (!(t > 0.0 && t <= horizon_) || (!times_.empty() && !(t > times_.back()))) {
    throw Error(ErrorKind::TimeOutOfRange, "event times must be strictly increasing in (0, T]");
  }
  times_.push_back(t);
  states_.insert(states_.end(), pre.data(), pre.data() + dim_);
  states_.insert(states_.end(), post.data(), post.data() + dim_);
}

void Trajectory::finish(const Point& terminal) {
  if (reversed_ || finished_) throw Error(ErrorKind::InvalidArgument, "trajectory is closed");
  states_.insert(states_.end(), terminal.data(), terminal.data() + dim_);
  finished_ = true;
}

Point Trajectory::stored(std::size_t slot) const {
  Point p(dim_);
  std::memcpy(p.data(), states_.data() + slot * static_cast<std::size_t>(dim_),
              sizeof(double) * static_cast<std::size_t>(dim_));
  return p;
}

namespace {
constexpr std::size_t pre_slot(std::size_t i) { return 2 * i + 1; }
constexpr std::size_t post_slot(std::size_t i) { return 2 * i + 2; }
}  // namespace

Point Trajectory::initial_state() const {
  return reversed_ ? stored(2 * times_.size() + 1) : stored(0);
}

Point Trajectory::terminal_state() const {
  if (!finished_) throw Error(ErrorKind::InvalidArgument, "trajectory has no terminal state yet");
  return reversed_ ? stored(0) : stored(2 * times_.size() + 1);
}

Trajectory::Event Trajectory::event(std::size_t i) const {
  const std::size_t n = times_.size();
  if (!reversed_) return Event{times_[i], stored(pre_slot(i)), stored(post_slot(i))};
  const std::size_t j = n - 1 - i;
  return Event{horizon_ - times_[j], stored(post_slot(j)), stored(pre_slot(j))};
}

std::vector<Trajectory::Event> Trajectory::events() const {
  std::vector<Event> out;
  out.reserve(times_.size());
  for (std::size_t i = 0; i < times_.size(); ++i) out.push_back(event(i));
  return out;
}

Point Trajectory::state_at(double t) const {
  if (!(t >= 0.0 && t <= horizon_)) {
    throw Error(ErrorKind::TimeOutOfRange, "state_at: t outside [0, T]");
  }
  const std::size_t n = times_.size();
  auto flow = [&](double t0, const Point& x0, double t1) {
    return (flow_ && !flow_->is_trivial()) ? (*flow_)(t0, x0, t1) : x0;
  };

  if (!reversed_) {
    if (t == horizon_ && finished_) return terminal_state();
    // k = number of events at or before t.
    const auto k = static_cast<std::size_t>(std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
    if (k == 0) return flow(0.0, stored(0), t);
    if (times_[k - 1] == t) return stored(post_slot(k - 1));
    return flow(times_[k - 1], stored(post_slot(k - 1)), t);
  }

  if (t == 0.0) return initial_state();
  // Reversed event r (0-based) sits at T - times_[n-1-r]; count those <= t.
  std::size_t k = 0;
  {
    std::size_t lo = 0, hi = n;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (horizon_ - times_[n - 1 - mid] <= t) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    k = lo;
  }
  if (k > 0 && horizon_ - times_[n - k] == t) return stored(pre_slot(n - k));
  // Forward segment starting at event n-k-1 (or at time 0).
  const double u = horizon_ - t;
  if (k == n) return flow(0.0, stored(0), u);
  const std::size_t m = n - k - 1;
  return flow(times_[m], stored(post_slot(m)), std::max(u, times_[m]));
}

Trajectory Trajectory::reversed_path() const {
  Trajectory r = *this;
  r.reversed_ = !reversed_;
  return r;
}

bool Trajectory::operator==(const Trajectory& o) const {
  return dim_ == o.dim_ && horizon_ == o.horizon_ && reversed_ == o.reversed_ &&
         finished_ == o.finished_ && times_ == o.times_ && states_ == o.states_;
}

Trajectory reverse_path(const Trajectory& traj) { return traj.reversed_path(); }

Point state_at(const Trajectory& traj, double t) { return traj.state_at(t); }

PathEnsemble PathEnsemble::reversed() const {
  PathEnsemble out;
  out.spec_fingerprint = spec_fingerprint;
  out.seed = seed;
  out.horizon = horizon;
  out.direction = direction == Direction::Forward ? Direction::Reversed : Direction::Forward;
  out.paths.reserve(paths.size());
  for (const auto& p : paths) out.paths.push_back(p.reversed_path());
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void append_number(std::string& s, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  s += buf;
}

void append_point(std::string& s, const Point& p) {
  s += '[';
  for (int i = 0; i < p.size(); ++i) {
    if (i) s += ',';
    append_number(s, p[i]);
  }
  s += ']';
}

Point to_point(const nlohmann::json& v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) p[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  return p;
}

}  // namespace

void write_ensemble_jsonl(const PathEnsemble& e, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  std::string line = "{\"type\":\"header\",\"fingerprint\":\"" + e.spec_fingerprint + "\",\"seed\":" +
                     std::to_string(e.seed) + ",\"direction\":\"" +
                     (e.direction == PathEnsemble::Direction::Forward ? "forward" : "reversed") +
                     "\",\"horizon\":";
  append_number(line, e.horizon);
  line += ",\"n_paths\":" + std::to_string(e.paths.size()) + "}\n";
  out << line;
  for (const auto& p : e.paths) {
    line.assign("{\"x0\":");
    append_point(line, p.initial_state());
    line += ",\"events\":[";
    for (std::size_t i = 0; i < p.size(); ++i) {
      const auto ev = p.event(i);
      if (i) line += ',';
      line += '[';
      append_number(line, ev.t);
      for (int d = 0; d < ev.pre.size(); ++d) {
        line += ',';
        append_number(line, ev.pre[d]);
      }
      for (int d = 0; d < ev.post.size(); ++d) {
        line += ',';
        append_number(line, ev.post[d]);
      }
      line += ']';
    }
    line += "],\"xT\":";
    append_point(line, p.terminal_state());
    line += "}\n";
    out << line;
  }
  if (!out) throw Error(ErrorKind::Io, "error writing '" + path + "'");
}

ReadResult read_ensemble_jsonl(const std::string& path, const std::string& expected_fingerprint,
                               std::shared_ptr<const DriftFlow> flow) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  ReadResult r;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      if (!have_header) {
        if (j.value("type", "") != "header") {
          throw Error(ErrorKind::Io, path + ": first line must be the header object");
        }
        have_header = true;
        r.ensemble.spec_fingerprint = j.at("fingerprint").get<std::string>();
        r.ensemble.seed = j.at("seed").get<std::uint64_t>();
        r.ensemble.horizon = j.at("horizon").get<double>();
        r.ensemble.direction = j.at("direction").get<std::string>() == "reversed"
                                   ? PathEnsemble::Direction::Reversed
                                   : PathEnsemble::Direction::Forward;
        if (!expected_fingerprint.empty() && expected_fingerprint != r.ensemble.spec_fingerprint) {
          r.warnings.push_back("ensemble fingerprint " + r.ensemble.spec_fingerprint +
                               " does not match the configuration (" + expected_fingerprint + ")");
        }
        if (r.ensemble.direction == PathEnsemble::Direction::Reversed && flow && !flow->is_trivial()) {
          r.warnings.push_back("reversed ensemble: drift flow between events is not reconstructed");
          flow = nullptr;
        }
        continue;
      }
      const Point x0 = to_point(j.at("x0"));
      Trajectory traj(x0, r.ensemble.horizon, flow);
      const auto d = static_cast<std::size_t>(x0.size());
      for (const auto& ev : j.at("events")) {
        if (ev.size() != 1 + 2 * d) throw Error(ErrorKind::Io, path + ": malformed event");
        Point pre(static_cast<Eigen::Index>(d)), post(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i) {
          pre[static_cast<Eigen::Index>(i)] = ev[1 + i].get<double>();
          post[static_cast<Eigen::Index>(i)] = ev[1 + d + i].get<double>();
        }
        traj.add_event(ev[0].get<double>(), pre, post);
      }
      traj.finish(to_point(j.at("xT")));
      r.ensemble.paths.push_back(std::move(traj));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, path + ":" + std::to_string(lineno) + ": " + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(ErrorKind::Io, path + ":" + std::to_string(lineno) + ": " + e.what());
  }
  if (!have_header) throw Error(ErrorKind::Io, path + ": empty ensemble file");
  return r;
}

}  // namespace jumprev
