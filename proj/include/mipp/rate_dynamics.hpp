#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mipp/network.hpp"

namespace mipp::rate {

// Population classification plus the assumption checks of the stability
// theory: no transient input, and self-inhibition on every recurrent unit.
// Violations are reported, not enforced.
struct PopulationReport {
  std::vector<PopulationTag> tags;
  std::vector<std::size_t> transient_input_units;       // breaks assumption 1
  std::vector<std::size_t> nonnegative_self_units;      // breaks assumption 2
  bool satisfies_assumptions() const {
    return transient_input_units.empty() && nonnegative_self_units.empty();
  }
};

PopulationReport classify_populations(const Network& net);

// The canonical autonomous form of the rate equation: Poisson inputs are
// folded into the constant drive b = L_P * i, recurrent units evolve by
// dy_r/dt = y_r ((L_R y)_r + b_r).
struct RateSystem {
  std::vector<std::size_t> recurrent_units;  // original unit indices
  std::vector<std::size_t> input_units;
  Eigen::MatrixXd coupling;       // L_R, |R| x |R|
  Eigen::MatrixXd input_weights;  // L_P, |R| x |P|
  Eigen::VectorXd input_rates;    // i, |P|

  Eigen::Index dim() const { return coupling.rows(); }
  Eigen::VectorXd drive() const {
    return input_units.empty() ? Eigen::VectorXd::Zero(dim())
                               : Eigen::VectorXd(input_weights * input_rates);
  }

  // Throws DomainError if the network has transient input.
  static RateSystem from_network(const Network& net);
  static RateSystem from_matrices(Eigen::MatrixXd coupling,
                                  Eigen::MatrixXd input_weights,
                                  Eigen::VectorXd input_rates);
};

Eigen::VectorXd rhs(const RateSystem& system, const Eigen::VectorXd& y);

// J_{rr'} = delta_{rr'} (b_r + (L_R y)_r) + y_r l_{rr'}
Eigen::MatrixXd jacobian(const RateSystem& system, const Eigen::VectorXd& y);

struct StepControl {
  double rel_tol = 1e-8;
  double initial_dt = 1e-3;
  double sample_dt = 1e-2;
  double explosion_bound = 1e12;
  double max_dt = 0.25;
};

struct RateTrajectory {
  std::vector<double> times;
  Eigen::MatrixXd values;  // row = time sample, column = recurrent component
  std::string method = "rk4_log";
  double rel_tol = 0.0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  void write_csv(std::ostream& out,
                 const std::vector<std::size_t>& unit_labels = {}) const;
};

// Integrates the rate equation with classic RK4 in log coordinates for the
// positive components (u = log y, du_r/dt = (L_R e^u)_r + b_r), which keeps
// trajectories positive by construction.  Components starting at exactly 0
// are invariant and held at 0.  Local error is controlled by step halving.
RateTrajectory integrate(const RateSystem& system, const Eigen::VectorXd& y0,
                         double t_end, const StepControl& control = {});

// Closed-form solution of the SPI rate equation dr/dt = r (a + b r) with
// a = lambda * l21 > 0 and b = l22 < 0 (a Riccati equation).
double spi_closed_form(double lambda, double l21, double l22, double r0,
                       double t);

// Input rate that puts the SPI equilibrium output rate at 1.
double warm_up_rate(double l21, double l22);

enum class Stability { attractive, unstable, non_hyperbolic };

std::string to_string(Stability s);

struct FixedPointReport {
  std::vector<std::size_t> active_set;  // indices into the recurrent set
  Eigen::VectorXd y;                    // zeros off the active set
  Eigen::VectorXcd eigenvalues;         // of the Jacobian at y
  Stability stability = Stability::non_hyperbolic;
  bool admissible = false;  // all active components strictly positive
};

struct FixedPointScan {
  std::vector<FixedPointReport> reports;         // ordered by subset bitmask
  std::vector<std::uint32_t> singular_subsets;   // degenerate, no candidate
};

// Enumerates all 2^|R| candidate critical points (active-set subsets S with
// L_S y_S = -b_S).  Refuses |R| > 20.
FixedPointScan fixed_points(const RateSystem& system,
                            double stability_tol = 1e-9);

// Eigenvalues of a real square matrix (n <= 32), sorted by descending real
// part, ties by descending imaginary part.  Each returned pair satisfies
// ||A v - lambda v|| <= 1e-8 ||A||.
Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& matrix);

// Closed forms for the two-recurrent-unit system under the paper's
// normalization l33 = l44 = -1, inputs folded as equivalent drives.
struct TwoUnitReport {
  Eigen::Vector2d y_silent{0, 0};
  Eigen::Vector2d y_only3;
  Eigen::Vector2d y_only4;
  Eigen::Vector2d y_critical;
  std::array<double, 2> spectrum_silent;
  std::array<double, 2> spectrum_only3;
  std::array<double, 2> spectrum_only4;
  std::optional<std::array<double, 2>> spectrum_critical_symmetric;
  bool silent_attractive;
  bool only3_attractive;
  bool only4_attractive;
  std::optional<bool> critical_attractive;  // symmetric case only
  std::string regime;  // positive_feedback | oscillator | negative_feedback | mixed
};

TwoUnitReport two_unit_analysis(double l31, double l42, double l34, double l43);

// The paper's phase-volume bookkeeping: input = sum of equivalent drives,
// dissipation = y^T L_R y, inhibition = sum_r l_rr y_r.  For negative
// semidefinite L_R the sum is bounded by the input term.
struct DivergenceDecomposition {
  double input = 0;
  double dissipation = 0;
  double inhibition = 0;
  double sum() const { return input + dissipation + inhibition; }
};

DivergenceDecomposition divergence_decomposition(const RateSystem& system,
                                                 const Eigen::VectorXd& y);

// Trace of the analytic Jacobian (the divergence of the vector field).
double trace_divergence(const RateSystem& system, const Eigen::VectorXd& y);

double energy(const Eigen::VectorXd& y);

}  // namespace mipp::rate
