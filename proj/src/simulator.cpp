#include "mipp/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <ostream>
#include <thread>

#include "mipp/common.hpp"

namespace mipp {

namespace {

constexpr double kExplosionBound = 1e12;

std::size_t grid_steps(double t_end, double dt) {
  auto n = static_cast<std::size_t>(std::llround(t_end / dt));
  return n == 0 ? 1 : n;
}

// Column-compressed view of the coupling matrix: for each sender the list of
// receivers it actually touches.  Events are rare relative to grid steps, so
// all rate updates go through these lists.
struct ColumnTargets {
  explicit ColumnTargets(const Network& net) : targets(net.n_units()) {
    const std::size_t n = net.n_units();
    for (std::size_t from = 0; from < n; ++from)
      for (std::size_t to = 0; to < n; ++to)
        if (net.log_weight(to, from) != 0.0)
          targets[from].push_back({to, net.log_weight(to, from)});
  }
  struct Link {
    std::size_t to;
    double log_weight;
  };
  std::vector<std::vector<Link>> targets;
};

class TrialEngine {
 public:
  TrialEngine(const Network& net, const ColumnTargets& cols, double dt)
      : net_(net),
        cols_(cols),
        dt_(dt),
        rate_(net.base_rates()),
        prob_(net.n_units()),
        exponent_(net.n_units(), 0.0) {
    refresh_all_probs();
  }

  const std::vector<double>& rates() const { return rate_; }

  void set_rate(std::size_t unit, double value) {
    rate_[unit] = value;
    prob_[unit] = event_probability(value, dt_);
  }

  // Draws one step; fired unit indices are appended to `fired` (ascending).
  // Draw order is one uniform per unit per step, matching step().
  void advance(Rng& rng, std::vector<std::size_t>& fired, int trial_index) {
    const std::size_t n = net_.n_units();
    fired.clear();
    for (std::size_t u = 0; u < n; ++u)
      if (rng.uniform() < prob_[u]) fired.push_back(u);
    if (fired.empty()) return;

    touched_.clear();
    for (std::size_t f : fired) {
      for (const auto& link : cols_.targets[f]) {
        if (exponent_[link.to] == 0.0) touched_.push_back(link.to);
        exponent_[link.to] += link.log_weight;
      }
    }
    for (std::size_t u : touched_) {
      if (exponent_[u] == 0.0) continue;  // exact cancellation
      rate_[u] *= std::exp(exponent_[u]);
      exponent_[u] = 0.0;
      prob_[u] = event_probability(rate_[u], dt_);
      if (rate_[u] > kExplosionBound)
        throw ExplosionError("rate of unit " + std::to_string(u) +
                                 " exceeded 1e12 (unstable network)",
                             trial_index, rate_[u]);
    }
    // exponent_ entries that cancelled to zero were skipped above; clear them.
    for (std::size_t u : touched_) exponent_[u] = 0.0;
  }

 private:
  void refresh_all_probs() {
    for (std::size_t u = 0; u < net_.n_units(); ++u)
      prob_[u] = event_probability(rate_[u], dt_);
  }

  const Network& net_;
  const ColumnTargets& cols_;
  double dt_;
  std::vector<double> rate_;
  std::vector<double> prob_;
  std::vector<double> exponent_;
  std::vector<std::size_t> touched_;
};

}  // namespace

std::vector<std::string> SimConfig::validate(const Network& net) const {
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  if (!(t_end >= dt)) throw DomainError("t_end must be at least dt");
  if (n_trials == 0) throw DomainError("n_trials must be positive");
  if (rate_sample_stride == 0)
    throw DomainError("rate_sample_stride must be positive");
  if (warm_up) {
    if (!(warm_up->duration > 0.0))
      throw DomainError("warm-up duration must be positive");
    if (warm_up->input_rates.size() != net.n_units())
      throw DomainError("warm-up input rates need one entry per unit");
    for (std::size_t u = 0; u < net.n_units(); ++u) {
      double r = warm_up->input_rates[u];
      if (!(r >= 0.0) || !std::isfinite(r))
        throw DomainError("warm-up input rates must be finite and nonnegative");
      if (r != 0.0 && net.population_tag(u) == PopulationTag::recurrent)
        throw DomainError("warm-up rate set for recurrent unit " +
                          std::to_string(u));
    }
  }
  std::vector<std::string> warnings;
  double max_rate = 0.0;
  for (double r : net.base_rates()) max_rate = std::max(max_rate, r);
  if (dt * max_rate > 0.01)
    warnings.push_back("dt * max(base_rates) = " +
                       format_double(dt * max_rate) +
                       " > 0.01; grid discretization bias may be noticeable");
  return warnings;
}

double event_probability(double rate, double dt) {
  if (!(rate >= 0.0) || !std::isfinite(rate))
    throw DomainError("event_probability: rate must be nonnegative");
  if (!(dt > 0.0)) throw DomainError("event_probability: dt must be positive");
  return -std::expm1(-rate * dt);
}

StepResult step(const Network& net, const std::vector<double>& state,
                double dt, Rng& rng) {
  const std::size_t n = net.n_units();
  if (state.size() != n) throw DomainError("step: state size mismatch");
  for (double r : state)
    if (!(r >= 0.0)) throw DomainError("step: rates must be nonnegative");

  StepResult res;
  res.events.resize(n, 0);
  res.next_state = state;
  for (std::size_t u = 0; u < n; ++u)
    res.events[u] = rng.uniform() < event_probability(state[u], dt) ? 1 : 0;
  for (std::size_t u = 0; u < n; ++u) {
    double exponent = 0.0;
    for (std::size_t from = 0; from < n; ++from)
      if (res.events[from]) exponent += net.log_weight(u, from);
    if (exponent != 0.0) res.next_state[u] = state[u] * std::exp(exponent);
  }
  return res;
}

SpikeRecord simulate_trial(const Network& net, const SimConfig& config,
                           std::size_t trial_index) {
  config.validate(net);
  const ColumnTargets cols(net);
  const std::size_t n = net.n_units();
  Rng rng = Rng::for_trial(config.seed, trial_index);
  TrialEngine engine(net, cols, config.dt);
  std::vector<std::size_t> fired;

  if (config.warm_up) {
    for (std::size_t u = 0; u < n; ++u)
      if (net.is_input(u)) engine.set_rate(u, config.warm_up->input_rates[u]);
    const std::size_t wu_steps = grid_steps(config.warm_up->duration, config.dt);
    for (std::size_t j = 0; j < wu_steps; ++j)
      engine.advance(rng, fired, static_cast<int>(trial_index));
    for (std::size_t u = 0; u < n; ++u)
      if (net.is_input(u)) engine.set_rate(u, net.base_rate(u));
  }

  SpikeRecord rec;
  rec.trial_index = trial_index;
  rec.seed_used = config.seed;
  rec.events.resize(n);

  const std::size_t steps = grid_steps(config.t_end, config.dt);
  for (std::size_t j = 0; j < steps; ++j) {
    if (j % config.rate_sample_stride == 0) {
      rec.sample_times.push_back(static_cast<double>(j) * config.dt);
      rec.samples.push_back(engine.rates());
    }
    engine.advance(rng, fired, static_cast<int>(trial_index));
    if (!fired.empty()) {
      const double stamp = static_cast<double>(j + 1) * config.dt;
      for (std::size_t u : fired) rec.events[u].push_back(stamp);
    }
  }
  rec.final_rates = engine.rates();
  return rec;
}

void simulate_ensemble_apply(
    const Network& net, const SimConfig& config,
    const std::function<void(SpikeRecord&&)>& consume) {
  config.validate(net);
  const std::size_t n = config.n_trials;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(worker_count(), n));

  if (workers <= 1) {
    for (std::size_t t = 0; t < n; ++t) consume(simulate_trial(net, config, t));
    return;
  }

  // Block-parallel with in-order delivery: deterministic consumption order
  // makes downstream floating-point accumulation bit-exact.
  const std::size_t block = static_cast<std::size_t>(workers) * 8;
  for (std::size_t base = 0; base < n; base += block) {
    const std::size_t m = std::min(block, n - base);
    std::vector<std::optional<SpikeRecord>> out(m);
    std::vector<std::exception_ptr> errors(m);
    std::atomic<std::size_t> cursor{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = cursor.fetch_add(1); k < m;
             k = cursor.fetch_add(1)) {
          try {
            out[k] = simulate_trial(net, config, base + k);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    for (std::size_t k = 0; k < m; ++k) {
      if (errors[k]) std::rethrow_exception(errors[k]);
      consume(std::move(*out[k]));
    }
  }
}

std::vector<SpikeRecord> simulate_ensemble(const Network& net,
                                           const SimConfig& config) {
  std::vector<SpikeRecord> records;
  records.reserve(config.n_trials);
  simulate_ensemble_apply(net, config,
                          [&](SpikeRecord&& r) { records.push_back(std::move(r)); });
  return records;
}

std::size_t count_process(const SpikeRecord& record, std::size_t unit,
                          double t) {
  if (unit >= record.events.size())
    throw DomainError("count_process: unknown unit " + std::to_string(unit));
  if (t < 0.0) throw DomainError("count_process: t must be nonnegative");
  const auto& ev = record.events[unit];
  return static_cast<std::size_t>(
      std::upper_bound(ev.begin(), ev.end(), t) - ev.begin());
}

void write_events_csv_header(std::ostream& out) { out << "trial,unit,time\n"; }

void append_events_csv(std::ostream& out, const SpikeRecord& rec) {
  for (std::size_t u = 0; u < rec.events.size(); ++u)
    for (double t : rec.events[u])
      out << rec.trial_index << ',' << u << ',' << format_time(t) << '\n';
}

void write_events_csv(std::ostream& out, const std::vector<SpikeRecord>& recs) {
  write_events_csv_header(out);
  for (const auto& rec : recs) append_events_csv(out, rec);
}

void write_rates_csv_header(std::ostream& out) {
  out << "trial,time,unit,rate\n";
}

void append_rates_csv(std::ostream& out, const SpikeRecord& rec) {
  for (std::size_t i = 0; i < rec.sample_times.size(); ++i)
    for (std::size_t u = 0; u < rec.samples[i].size(); ++u)
      out << rec.trial_index << ',' << format_time(rec.sample_times[i]) << ','
          << u << ',' << format_double(rec.samples[i][u]) << '\n';
}

void write_rates_csv(std::ostream& out, const std::vector<SpikeRecord>& recs) {
  write_rates_csv_header(out);
  for (const auto& rec : recs) append_rates_csv(out, rec);
}

}  // namespace mipp
