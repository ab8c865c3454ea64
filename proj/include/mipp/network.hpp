#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mipp {

// Population classes of the units of a network.  A unit whose coupling row is
// zero off the diagonal receives no input from anybody: it is an input unit.
// With zero self term it is a pure Poisson source; with a nonzero self term
// its rate can only decay to zero or explode (transient input).
enum class PopulationTag { pure_poisson_input, transient_input, recurrent };

std::string to_string(PopulationTag tag);

// A network of multiplicatively interacting point processes.  Entry (a, a')
// of the log-weight matrix is log w_{aa'}: the effect of an event of unit a'
// on the rate of unit a.  Zero means the link is absent.
class Network {
 public:
  Network(std::size_t n_units, std::vector<double> log_weights,
          std::vector<double> base_rates);

  std::size_t n_units() const { return n_; }
  double log_weight(std::size_t to, std::size_t from) const {
    return lw_[to * n_ + from];
  }
  const std::vector<double>& log_weights() const { return lw_; }
  double base_rate(std::size_t unit) const { return base_rates_[unit]; }
  const std::vector<double>& base_rates() const { return base_rates_; }

  PopulationTag population_tag(std::size_t unit) const { return tags_[unit]; }
  const std::vector<PopulationTag>& population_tags() const { return tags_; }
  bool is_input(std::size_t unit) const {
    return tags_[unit] != PopulationTag::recurrent;
  }

 private:
  std::size_t n_;
  std::vector<double> lw_;          // row-major, row = receiving unit
  std::vector<double> base_rates_;  // lambda_a(0); constant rate for inputs
  std::vector<PopulationTag> tags_;
};

}  // namespace mipp
