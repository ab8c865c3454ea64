#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mipp/network.hpp"
#include "mipp/rng.hpp"

namespace mipp {

// Optional warm-up phase: the network is driven for `duration` seconds with
// the input units held at `input_rates` (indexed by unit; entries of
// recurrent units must be zero).  Warm-up events are discarded and the rates
// reached at the end become the t = 0 rates of the recorded trial.
struct WarmUp {
  double duration = 0.0;
  std::vector<double> input_rates;
};

struct SimConfig {
  double dt = 1e-4;
  double t_end = 1.0;
  std::uint64_t seed = 0;
  std::size_t n_trials = 1;
  std::size_t rate_sample_stride = 1;
  std::optional<WarmUp> warm_up;  // absent: deterministic initial rates

  // Throws DomainError on hard violations; returns human-readable warnings
  // (e.g. dt * max rate large enough to bias the Bernoulli grid).
  std::vector<std::string> validate(const Network& net) const;
};

// Events and sampled instantaneous rates of one trial.  Event times are
// multiples of dt in (0, t_end].  The rate sample labelled t is the rate in
// force on (t, t + dt], i.e. the one used to draw the events stamped t + dt.
struct SpikeRecord {
  std::vector<std::vector<double>> events;  // per unit, sorted
  std::vector<double> sample_times;
  std::vector<std::vector<double>> samples;  // [sample][unit]
  std::vector<double> final_rates;           // rates after the last step
  std::size_t trial_index = 0;
  std::uint64_t seed_used = 0;

  std::size_t n_units() const { return events.size(); }
};

// Probability that a unit with the given rate fires within one grid step.
double event_probability(double rate, double dt);

struct StepResult {
  std::vector<std::uint8_t> events;
  std::vector<double> next_state;
};

// One grid step: units fire independently from the pre-step rates, then all
// multiplicative updates of the fired senders compound in a single update.
StepResult step(const Network& net, const std::vector<double>& state,
                double dt, Rng& rng);

SpikeRecord simulate_trial(const Network& net, const SimConfig& config,
                           std::size_t trial_index);

// Runs n_trials independent trials (concurrently, bounded by worker_count())
// and returns them ordered by trial index.
std::vector<SpikeRecord> simulate_ensemble(const Network& net,
                                           const SimConfig& config);

// Streaming variant: `consume` is invoked on the caller's thread in strict
// trial order, so accumulation is bit-exact regardless of scheduling.
void simulate_ensemble_apply(
    const Network& net, const SimConfig& config,
    const std::function<void(SpikeRecord&&)>& consume);

// Number of events of `unit` in [0, t].
std::size_t count_process(const SpikeRecord& record, std::size_t unit,
                          double t);

// CSV serialization: events as `trial,unit,time`, sampled rates as
// `trial,time,unit,rate`; times carry 9 decimal digits.
void write_events_csv(std::ostream& out, const std::vector<SpikeRecord>& recs);
void write_events_csv_header(std::ostream& out);
void append_events_csv(std::ostream& out, const SpikeRecord& rec);
void write_rates_csv(std::ostream& out, const std::vector<SpikeRecord>& recs);
void write_rates_csv_header(std::ostream& out);
void append_rates_csv(std::ostream& out, const SpikeRecord& rec);

}  // namespace mipp
