#include "mipp/network.hpp"

#include <cmath>

#include "mipp/common.hpp"

namespace mipp {

std::string to_string(PopulationTag tag) {
  switch (tag) {
    case PopulationTag::pure_poisson_input:
      return "pure_poisson_input";
    case PopulationTag::transient_input:
      return "transient_input";
    case PopulationTag::recurrent:
      return "recurrent";
  }
  return "unknown";
}

Network::Network(std::size_t n_units, std::vector<double> log_weights,
                 std::vector<double> base_rates)
    : n_(n_units), lw_(std::move(log_weights)), base_rates_(std::move(base_rates)) {
  if (n_ == 0) throw DomainError("network needs at least one unit");
  if (lw_.size() != n_ * n_)
    throw DomainError("log_weights must be a " + std::to_string(n_) + "x" +
                      std::to_string(n_) + " matrix");
  if (base_rates_.size() != n_)
    throw DomainError("base_rates must have one entry per unit");
  for (double l : lw_)
    if (!std::isfinite(l)) throw DomainError("log_weights entries must be finite");
  for (double r : base_rates_) {
    if (!(r >= 0.0) || !std::isfinite(r))
      throw DomainError("base_rates must be finite and nonnegative");
  }

  tags_.resize(n_);
  for (std::size_t a = 0; a < n_; ++a) {
    bool row_zero_off_diagonal = true;
    for (std::size_t b = 0; b < n_ && row_zero_off_diagonal; ++b)
      if (b != a && lw_[a * n_ + b] != 0.0) row_zero_off_diagonal = false;
    if (!row_zero_off_diagonal)
      tags_[a] = PopulationTag::recurrent;
    else if (lw_[a * n_ + a] == 0.0)
      tags_[a] = PopulationTag::pure_poisson_input;
    else
      tags_[a] = PopulationTag::transient_input;
  }
}

}  // namespace mipp
