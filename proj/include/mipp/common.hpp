#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mipp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument or precondition violation (negative rate, bad dt, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A simulated or integrated rate exceeded the explosion bound.
class ExplosionError : public Error {
 public:
  ExplosionError(const std::string& what, int trial_index, double value)
      : Error(what), trial_index(trial_index), value(value) {}
  int trial_index;  // -1 when not tied to a Monte Carlo trial
  double value;
};

// Iterative numerics failed to converge or became unstable.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Malformed input data (event files, records).
class DataError : public Error {
 public:
  using Error::Error;
};

// Config file problems; line < 0 means semantic error located by key path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line, std::string key = {})
      : Error(what), line(line), key(std::move(key)) {}
  int line;
  std::string key;
};

// Compensated (Neumaier) summation; used where sums of many terms feed
// tolerance-critical comparisons.
class KahanSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Shortest decimal form that parses back to exactly the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

// Fixed 9-decimal form used for event and sample times in CSV output.
std::string format_time(double t);

// Worker count for trial-level parallelism: min(hardware, MIPP_THREADS).
unsigned worker_count();

}  // namespace mipp
