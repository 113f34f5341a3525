#include "pwsync/sim.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <ostream>
#include <thread>

namespace pwsync::sim {

namespace {

constexpr double kDivergence = 1e12;

// Per-node ring buffer of past states sampled every dt.
class DelayBuffer final : public dynamics::History {
 public:
  DelayBuffer(std::size_t dim, std::size_t capacity, double dt, std::span<const double> x0)
      : dim_(dim), capacity_(capacity), dt_(dt), x0_(x0.begin(), x0.end()),
        data_(capacity * dim, 0.0) {
    push(x0);
  }

  void push(std::span<const double> x) {
    std::copy(x.begin(), x.end(), data_.begin() + static_cast<std::ptrdiff_t>((count_ % capacity_) * dim_));
    ++count_;
  }

  double at(std::size_t component, double t) const override {
    if (t <= 0.0) return x0_[component];
    const double pos = t / dt_;
    auto k = static_cast<std::size_t>(std::floor(pos));
    const std::size_t newest = count_ - 1;
    if (k >= newest) return sample(newest, component);
    const std::size_t oldest = count_ > capacity_ ? count_ - capacity_ : 0;
    if (k < oldest) return sample(oldest, component);
    const double frac = pos - static_cast<double>(k);
    return (1.0 - frac) * sample(k, component) + frac * sample(k + 1, component);
  }

 private:
  double sample(std::size_t step, std::size_t component) const {
    return data_[(step % capacity_) * dim_ + component];
  }

  std::size_t dim_;
  std::size_t capacity_;
  double dt_;
  Vec x0_;
  std::vector<double> data_;
  std::size_t count_ = 0;
};

struct Neighbour {
  std::size_t j;
  double w;
};

class NetworkRhs {
 public:
  NetworkRhs(std::span<const dynamics::AffineDecomposedField> fields, const graph::Topology& topo,
             const CouplingSpec& coupling, double sign_width,
             std::span<const dynamics::History* const> histories)
      : fields_(fields), coupling_(coupling), sign_width_(sign_width),
        histories_(histories), dim_(fields.front().dim), g_buf_(dim_) {
    const std::size_t n = topo.size();
    adj_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && topo.weight(i, j) > 0.0) adj_[i].push_back({j, topo.weight(i, j)});
  }

  void operator()(double t, std::span<const double> x, std::span<double> dx) {
    const std::size_t n = fields_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto xi = x.subspan(i * dim_, dim_);
      std::span<double> out(dx.data() + i * dim_, dim_);
      fields_[i].h(t, xi, out);
      std::optional<dynamics::ConstantHistory> fallback;
      const dynamics::History* hist = histories_.empty() ? nullptr : histories_[i];
      if (hist == nullptr) {
        fallback.emplace(Vec(xi.begin(), xi.end()));
        hist = &*fallback;
      }
      fields_[i].g(dynamics::BoundedTermInput{t, xi, *hist, sign_width_}, g_buf_);
      for (std::size_t k = 0; k < dim_; ++k) out[k] += g_buf_[k];
    }
    std::visit([&](const auto& c) { add_coupling(c, x, dx); }, coupling_);
  }

 private:
  void add_coupling(const LinearCoupling& c, std::span<const double> x, std::span<double> dx) const {
    if (c.gain == 0.0) return;
    for (std::size_t i = 0; i < adj_.size(); ++i)
      for (const auto& nb : adj_[i])
        for (std::size_t k = 0; k < dim_; ++k) {
          if (c.gamma[k] == 0.0) continue;
          dx[i * dim_ + k] -= c.gain * nb.w * c.gamma[k] * (x[i * dim_ + k] - x[nb.j * dim_ + k]);
        }
  }

  void add_coupling(const NonlinearCoupling& c, std::span<const double> x, std::span<double> dx) const {
    if (c.gain == 0.0) return;
    for (std::size_t i = 0; i < adj_.size(); ++i)
      for (const auto& nb : adj_[i])
        for (std::size_t k = 0; k < dim_; ++k)
          dx[i * dim_ + k] -=
              c.gain * nb.w * c.component(k)(x[i * dim_ + k] - x[nb.j * dim_ + k]);
  }

  std::span<const dynamics::AffineDecomposedField> fields_;
  const CouplingSpec& coupling_;
  double sign_width_;
  std::span<const dynamics::History* const> histories_;
  std::size_t dim_;
  Vec g_buf_;
  std::vector<std::vector<Neighbour>> adj_;
};

bool finite_and_bounded(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) return false;
    acc += v * v;
  }
  return std::sqrt(acc) <= kDivergence;
}

std::string fmt17(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw ValidationError("tail_fraction must be in (0, 1]");
  if (!(t_end >= 10.0 * dt)) throw ValidationError("t_end must be at least 10 dt");
  if (!(regularization_width >= 0.0))
    throw ValidationError("regularization_width must be non-negative");
}

Trajectory integrate(std::span<const dynamics::AffineDecomposedField> fields,
                     const graph::Topology& topo, const CouplingSpec& coupling,
                     std::span<const double> x0, const SimConfig& config) {
  config.validate();
  if (fields.empty()) throw ValidationError("integrate: no node fields");
  const std::size_t n = fields.size();
  const std::size_t dim = fields.front().dim;
  for (const auto& f : fields)
    if (f.dim != dim) throw ValidationError("integrate: fields differ in dimension");
  if (topo.size() != n) throw ValidationError("integrate: topology size differs from node count");
  if (x0.size() != n * dim) throw ValidationError("integrate: x0 must have length N*n");
  std::visit([dim](const auto& c) { c.validate(dim); }, coupling);

  double max_delay = 0.0;
  for (const auto& f : fields) max_delay = std::max(max_delay, f.delay.value_or(0.0));

  std::vector<DelayBuffer> buffers;
  std::vector<const dynamics::History*> histories;
  if (max_delay > 0.0) {
    const auto capacity = static_cast<std::size_t>(std::ceil(max_delay / config.dt)) + 2;
    buffers.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      buffers.emplace_back(dim, capacity, config.dt, x0.subspan(i * dim, dim));
    for (const auto& b : buffers) histories.push_back(&b);
  }

  NetworkRhs rhs(fields, topo, coupling, config.regularization_width, histories);

  const auto steps = static_cast<std::size_t>(std::llround(config.t_end / config.dt));
  Trajectory traj;
  traj.n_nodes = n;
  traj.dim = dim;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.times.push_back(0.0);
  traj.states.emplace_back(x0.begin(), x0.end());
  traj.meta["dt"] = fmt17(config.dt);
  traj.meta["t_end"] = fmt17(config.t_end);
  traj.meta["integrator"] = "rk4-fixed";
  traj.meta["regularization_width"] = fmt17(config.regularization_width);
  traj.meta["seed"] = std::to_string(config.seed);

  const std::size_t len = n * dim;
  Vec x(x0.begin(), x0.end());
  Vec k1(len), k2(len), k3(len), k4(len), tmp(len);
  const double h = config.dt;
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * h;
    rhs(t, x, k1);
    for (std::size_t q = 0; q < len; ++q) tmp[q] = x[q] + 0.5 * h * k1[q];
    rhs(t + 0.5 * h, tmp, k2);
    for (std::size_t q = 0; q < len; ++q) tmp[q] = x[q] + 0.5 * h * k2[q];
    rhs(t + 0.5 * h, tmp, k3);
    for (std::size_t q = 0; q < len; ++q) tmp[q] = x[q] + h * k3[q];
    rhs(t + h, tmp, k4);
    for (std::size_t q = 0; q < len; ++q)
      tmp[q] = x[q] + h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
    if (!finite_and_bounded(tmp)) {
      traj.diverged = true;
      break;
    }
    x.swap(tmp);
    for (std::size_t i = 0; i < buffers.size(); ++i)
      buffers[i].push(std::span<const double>(x).subspan(i * dim, dim));
    traj.times.push_back(static_cast<double>(s + 1) * h);
    traj.states.push_back(x);
  }
  traj.last_valid_time = traj.times.back();
  traj.meta["diverged"] = traj.diverged ? "true" : "false";
  return traj;
}

ErrorSeries error_series(const Trajectory& traj) {
  ErrorSeries es;
  es.times = traj.times;
  es.n_nodes = traj.n_nodes;
  es.dim = traj.dim;
  es.diverged = traj.diverged;
  es.norms.reserve(traj.states.size());
  es.components.reserve(traj.states.size());
  Vec mean(traj.dim);
  for (const auto& x : traj.states) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t i = 0; i < traj.n_nodes; ++i)
      for (std::size_t k = 0; k < traj.dim; ++k) mean[k] += x[i * traj.dim + k];
    for (auto& v : mean) v /= static_cast<double>(traj.n_nodes);
    Vec e(x.size());
    for (std::size_t i = 0; i < traj.n_nodes; ++i)
      for (std::size_t k = 0; k < traj.dim; ++k) e[i * traj.dim + k] = x[i * traj.dim + k] - mean[k];
    es.norms.push_back(norm2(e));
    es.components.push_back(std::move(e));
  }
  return es;
}

double steady_state_eps(const ErrorSeries& series, double tail_fraction) {
  if (series.diverged) return std::numeric_limits<double>::infinity();
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw ValidationError("tail_fraction must be in (0, 1]");
  if (series.times.size() < 2) throw ValidationError("series too short for a tail window");
  const double t_end = series.times.back();
  const double t_start = t_end - tail_fraction * (t_end - series.times.front());
  double eps = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < series.times.size(); ++k) {
    // Half-step slack so the window start lands on a sample despite rounding.
    if (series.times[k] + 1e-9 * t_end >= t_start) {
      eps = std::max(eps, series.norms[k]);
      any = true;
    }
  }
  if (!any) throw ValidationError("tail window is empty");
  return eps;
}

std::vector<SweepRow> sweep_coupling(const SweepRunner& run, std::span<const double> c_values,
                                     bool parallel) {
  for (std::size_t k = 0; k < c_values.size(); ++k) {
    if (!(c_values[k] > 0.0)) throw ValidationError("sweep gains must be positive");
    if (k > 0 && !(c_values[k] > c_values[k - 1]))
      throw ValidationError("sweep gains must be strictly ascending");
  }
  std::vector<SweepRow> rows(c_values.size());
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (!parallel || workers == 1) {
    for (std::size_t k = 0; k < c_values.size(); ++k) rows[k] = run(c_values[k]);
    return rows;
  }
  // Bounded fan-out: at most `workers` runs in flight.
  for (std::size_t base = 0; base < c_values.size(); base += workers) {
    std::vector<std::future<SweepRow>> futs;
    const std::size_t end = std::min(c_values.size(), base + workers);
    for (std::size_t k = base; k < end; ++k)
      futs.push_back(std::async(std::launch::async, [&run, c = c_values[k]] { return run(c); }));
    for (std::size_t k = base; k < end; ++k) rows[k] = futs[k - base].get();
  }
  return rows;
}

std::vector<double> gain_grid(double c_min, double c_max, std::size_t n_points, bool logarithmic) {
  if (n_points == 0) throw ValidationError("gain grid needs at least one point");
  if (!(c_min > 0.0)) throw ValidationError("c_min must be positive");
  if (n_points == 1) return {c_min};
  if (!(c_max > c_min)) throw ValidationError("c_max must exceed c_min");
  std::vector<double> out(n_points);
  for (std::size_t k = 0; k < n_points; ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(n_points - 1);
    out[k] = logarithmic ? c_min * std::pow(c_max / c_min, f) : c_min + f * (c_max - c_min);
  }
  out.back() = c_max;
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t";
  for (std::size_t i = 0; i < traj.n_nodes; ++i)
    for (std::size_t k = 0; k < traj.dim; ++k) out << ",x_" << i + 1 << '_' << k + 1;
  out << '\n';
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    out << fmt17(traj.times[s]);
    for (double v : traj.states[s]) out << ',' << fmt17(v);
    out << '\n';
  }
}

void write_error_csv(std::ostream& out, const ErrorSeries& series) {
  out << "t,err_norm";
  for (std::size_t i = 0; i < series.n_nodes; ++i)
    for (std::size_t k = 0; k < series.dim; ++k) out << ",e_" << i + 1 << '_' << k + 1;
  out << '\n';
  for (std::size_t s = 0; s < series.times.size(); ++s) {
    out << fmt17(series.times[s]) << ',' << fmt17(series.norms[s]);
    for (double v : series.components[s]) out << ',' << fmt17(v);
    out << '\n';
  }
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "c,eps_hat,eps_bar,certified,diverged\n";
  for (const auto& r : rows)
    out << fmt17(r.c) << ',' << fmt17(r.eps_hat) << ',' << fmt17(r.eps_bar) << ','
        << (r.certified ? 1 : 0) << ',' << (r.diverged ? 1 : 0) << '\n';
}

}  // namespace pwsync::sim
