#include "mipp/rate_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "mipp/common.hpp"

namespace mipp::rate {

PopulationReport classify_populations(const Network& net) {
  PopulationReport report;
  report.tags = net.population_tags();
  for (std::size_t u = 0; u < net.n_units(); ++u) {
    if (report.tags[u] == PopulationTag::transient_input)
      report.transient_input_units.push_back(u);
    if (report.tags[u] == PopulationTag::recurrent &&
        net.log_weight(u, u) >= 0.0)
      report.nonnegative_self_units.push_back(u);
  }
  return report;
}

RateSystem RateSystem::from_network(const Network& net) {
  const auto report = classify_populations(net);
  if (!report.transient_input_units.empty())
    throw DomainError(
        "network has transient input units; the canonical rate equation "
        "assumes Poisson inputs only (unit " +
        std::to_string(report.transient_input_units.front()) + ")");

  RateSystem sys;
  for (std::size_t u = 0; u < net.n_units(); ++u) {
    if (report.tags[u] == PopulationTag::recurrent)
      sys.recurrent_units.push_back(u);
    else
      sys.input_units.push_back(u);
  }
  const auto nr = static_cast<Eigen::Index>(sys.recurrent_units.size());
  const auto np = static_cast<Eigen::Index>(sys.input_units.size());
  sys.coupling.resize(nr, nr);
  sys.input_weights.resize(nr, np);
  sys.input_rates.resize(np);
  for (Eigen::Index r = 0; r < nr; ++r) {
    for (Eigen::Index s = 0; s < nr; ++s)
      sys.coupling(r, s) =
          net.log_weight(sys.recurrent_units[r], sys.recurrent_units[s]);
    for (Eigen::Index p = 0; p < np; ++p)
      sys.input_weights(r, p) =
          net.log_weight(sys.recurrent_units[r], sys.input_units[p]);
  }
  for (Eigen::Index p = 0; p < np; ++p)
    sys.input_rates(p) = net.base_rate(sys.input_units[p]);
  return sys;
}

RateSystem RateSystem::from_matrices(Eigen::MatrixXd coupling,
                                     Eigen::MatrixXd input_weights,
                                     Eigen::VectorXd input_rates) {
  if (coupling.rows() != coupling.cols())
    throw DomainError("coupling matrix must be square");
  if (input_weights.rows() != coupling.rows())
    throw DomainError("input weight rows must match recurrent count");
  if (input_weights.cols() != input_rates.size())
    throw DomainError("input rate count must match input weight columns");
  if ((input_rates.array() < 0.0).any())
    throw DomainError("input rates must be nonnegative");
  RateSystem sys;
  sys.coupling = std::move(coupling);
  sys.input_weights = std::move(input_weights);
  sys.input_rates = std::move(input_rates);
  sys.recurrent_units.resize(static_cast<std::size_t>(sys.coupling.rows()));
  std::iota(sys.recurrent_units.begin(), sys.recurrent_units.end(), 0);
  sys.input_units.resize(static_cast<std::size_t>(sys.input_rates.size()));
  std::iota(sys.input_units.begin(), sys.input_units.end(),
            sys.recurrent_units.size());
  return sys;
}

Eigen::VectorXd rhs(const RateSystem& system, const Eigen::VectorXd& y) {
  if (y.size() != system.dim())
    throw DomainError("rhs: state dimension mismatch");
  return y.cwiseProduct(system.coupling * y + system.drive());
}

Eigen::MatrixXd jacobian(const RateSystem& system, const Eigen::VectorXd& y) {
  if (y.size() != system.dim())
    throw DomainError("jacobian: state dimension mismatch");
  Eigen::MatrixXd j = y.asDiagonal() * system.coupling;
  j.diagonal() += system.coupling * y + system.drive();
  return j;
}

namespace {

// du/dt in log coordinates, restricted to the dynamically positive subset.
struct LogRhs {
  Eigen::MatrixXd coupling;
  Eigen::VectorXd drive;
  Eigen::VectorXd operator()(const Eigen::VectorXd& u) const {
    return coupling * u.array().exp().matrix() + drive;
  }
};

}  // namespace

RateTrajectory integrate(const RateSystem& system, const Eigen::VectorXd& y0,
                         double t_end, const StepControl& control) {
  const Eigen::Index n = system.dim();
  if (y0.size() != n) throw DomainError("integrate: y0 dimension mismatch");
  if ((y0.array() < 0.0).any())
    throw DomainError("integrate: y0 must be nonnegative");
  if (!(t_end >= 0.0)) throw DomainError("integrate: t_end must be >= 0");
  if (!(control.rel_tol > 0.0)) throw DomainError("integrate: rel_tol must be > 0");

  // Components at exactly zero are invariant; integrate the rest in log space.
  std::vector<Eigen::Index> pos;
  for (Eigen::Index r = 0; r < n; ++r)
    if (y0(r) > 0.0) pos.push_back(r);
  const auto np = static_cast<Eigen::Index>(pos.size());

  LogRhs f;
  f.coupling.resize(np, np);
  f.drive.resize(np);
  const Eigen::VectorXd b = system.drive();
  for (Eigen::Index i = 0; i < np; ++i) {
    f.drive(i) = b(pos[i]);
    for (Eigen::Index k = 0; k < np; ++k)
      f.coupling(i, k) = system.coupling(pos[i], pos[k]);
  }

  Eigen::VectorXd u(np);
  for (Eigen::Index i = 0; i < np; ++i) u(i) = std::log(y0(pos[i]));

  RateTrajectory traj;
  traj.rel_tol = control.rel_tol;
  const double log_bound = std::log(control.explosion_bound);
  const double n_samples = std::ceil(t_end / control.sample_dt - 1e-12);
  traj.values.resize(static_cast<Eigen::Index>(n_samples) + 1, n);

  auto emit = [&](double t, const Eigen::VectorXd& uu) {
    traj.times.push_back(t);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < np; ++i) y(pos[i]) = std::exp(uu(i));
    traj.values.row(static_cast<Eigen::Index>(traj.times.size()) - 1) = y;
  };

  auto rk4 = [&](const Eigen::VectorXd& uu, double h) {
    Eigen::VectorXd k1 = f(uu);
    Eigen::VectorXd k2 = f(uu + 0.5 * h * k1);
    Eigen::VectorXd k3 = f(uu + 0.5 * h * k2);
    Eigen::VectorXd k4 = f(uu + h * k3);
    return Eigen::VectorXd(uu + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  };

  emit(0.0, u);
  double t = 0.0;
  double h = std::min(control.initial_dt, control.max_dt);
  std::size_t sample = 1;
  const double n_samples = std::ceil(t_end / control.sample_dt - 1e-12);

  while (t < t_end && np > 0) {
    const double t_target =
        std::min(t_end, static_cast<double>(sample) * control.sample_dt);
    while (t < t_target) {
      double step = std::min(h, t_target - t);
      // One full step against two half steps; 4th order means the halved
      // solution is ~16x closer, so their gap estimates the local error.
      Eigen::VectorXd big = rk4(u, step);
      Eigen::VectorXd half = rk4(rk4(u, 0.5 * step), 0.5 * step);
      const double err = (big - half).cwiseAbs().maxCoeff() / 15.0;
      // In log coordinates an absolute increment is a relative rate error.
      if (std::isfinite(err) && err <= control.rel_tol) {
        t += step;
        u = half;
        ++traj.accepted_steps;
        if (u.maxCoeff() > log_bound)
          throw ExplosionError("rate trajectory exceeded explosion bound", -1,
                               std::exp(u.maxCoeff()));
        const double grow =
            err > 0.0 ? 0.9 * std::pow(control.rel_tol / err, 0.2) : 5.0;
        h = std::min(control.max_dt, step * std::clamp(grow, 0.2, 5.0));
      } else {
        ++traj.rejected_steps;
        h = 0.5 * step;
        if (!(h > t_target * 1e-15 + 1e-300))
          throw NumericalError("integrate: step size underflow");
      }
    }
    emit(t_target, u);
    t = t_target;
    ++sample;
    if (static_cast<double>(sample) > n_samples + 0.5) break;
  }
  if (np == 0) {
    // Entire state pinned at zero; still produce the sample grid.
    while (static_cast<double>(sample) <= n_samples + 0.5) {
      emit(std::min(t_end, static_cast<double>(sample) * control.sample_dt), u);
      ++sample;
    }
  }
  return traj;
}

void RateTrajectory::write_csv(std::ostream& out,
                               const std::vector<std::size_t>& unit_labels) const {
  out << "time,unit,rate\n";
  for (std::size_t i = 0; i < times.size(); ++i)
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const std::size_t label =
          unit_labels.empty() ? static_cast<std::size_t>(c)
                              : unit_labels[static_cast<std::size_t>(c)];
      out << format_time(times[i]) << ',' << label << ','
          << format_double(values(static_cast<Eigen::Index>(i), c)) << '\n';
    }
}

double spi_closed_form(double lambda, double l21, double l22, double r0,
                       double t) {
  if (!(lambda > 0.0)) throw DomainError("spi_closed_form: lambda must be > 0");
  if (!(l21 > 0.0)) throw DomainError("spi_closed_form: l21 must be > 0");
  if (!(l22 < 0.0)) throw DomainError("spi_closed_form: l22 must be < 0");
  if (!(r0 > 0.0)) throw DomainError("spi_closed_form: r0 must be > 0");
  const double a = lambda * l21;
  const double b = l22;
  // r(t) = a r0 e^{at} / (a + b r0 (1 - e^{at})), written overflow-safe.
  const double denom = (a + b * r0) * std::exp(-a * t) - b * r0;
  if (!(denom > 0.0))
    throw DomainError("spi_closed_form: vanishing denominator");
  return a * r0 / denom;
}

double warm_up_rate(double l21, double l22) {
  if (!(l21 > 0.0)) throw DomainError("warm_up_rate: l21 must be > 0");
  if (!(l22 < 0.0)) throw DomainError("warm_up_rate: l22 must be < 0");
  return -l22 / l21;
}

std::string to_string(Stability s) {
  switch (s) {
    case Stability::attractive:
      return "attractive";
    case Stability::unstable:
      return "unstable";
    case Stability::non_hyperbolic:
      return "non_hyperbolic";
  }
  return "unknown";
}

namespace {

Stability classify_spectrum(const Eigen::VectorXcd& eigs, double tol) {
  bool all_negative = true;
  bool any_marginal = false;
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    const double re = eigs(i).real();
    if (std::abs(re) <= tol) any_marginal = true;
    if (re >= -tol) all_negative = false;
  }
  if (any_marginal) return Stability::non_hyperbolic;
  return all_negative ? Stability::attractive : Stability::unstable;
}

}  // namespace

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols())
    throw DomainError("eigenvalues: matrix must be square");
  const Eigen::Index n = matrix.rows();
  if (n == 0 || n > 32)
    throw DomainError("eigenvalues: supported sizes are 1..32");

  Eigen::EigenSolver<Eigen::MatrixXd> solver(matrix, /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eigenvalues: QR iteration did not converge");

  const Eigen::VectorXcd vals = solver.eigenvalues();
  const Eigen::MatrixXcd vecs = solver.eigenvectors();
  const double scale = matrix.norm();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXcd v = vecs.col(i);
    const double residual = (matrix * v - vals(i) * v).norm();
    if (residual > 1e-8 * std::max(scale, 1e-300))
      throw NumericalError("eigenvalues: residual check failed");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (vals(a).real() != vals(b).real()) return vals(a).real() > vals(b).real();
    return vals(a).imag() > vals(b).imag();
  });
  Eigen::VectorXcd sorted(n);
  for (Eigen::Index i = 0; i < n; ++i) sorted(i) = vals(order[static_cast<std::size_t>(i)]);
  return sorted;
}

FixedPointScan fixed_points(const RateSystem& system, double stability_tol) {
  const Eigen::Index nr = system.dim();
  if (nr > 20)
    throw DomainError("fixed_points: enumeration capped at 20 recurrent units (2^|R| subsets)");

  const Eigen::VectorXd b = system.drive();
  FixedPointScan scan;
  const std::uint32_t n_masks = 1u << nr;
  for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
    std::vector<Eigen::Index> active;
    for (Eigen::Index r = 0; r < nr; ++r)
      if (mask & (1u << r)) active.push_back(r);
    const auto k = static_cast<Eigen::Index>(active.size());

    Eigen::VectorXd y = Eigen::VectorXd::Zero(nr);
    if (k > 0) {
      Eigen::MatrixXd ls(k, k);
      Eigen::VectorXd bs(k);
      for (Eigen::Index i = 0; i < k; ++i) {
        bs(i) = b(active[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < k; ++j)
          ls(i, j) = system.coupling(active[static_cast<std::size_t>(i)],
                                     active[static_cast<std::size_t>(j)]);
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(ls);
      if (!lu.isInvertible()) {
        scan.singular_subsets.push_back(mask);
        continue;
      }
      const Eigen::VectorXd ys = lu.solve(-bs);
      for (Eigen::Index i = 0; i < k; ++i)
        y(active[static_cast<std::size_t>(i)]) = ys(i);
    }

    FixedPointReport report;
    for (Eigen::Index r : active)
      report.active_set.push_back(static_cast<std::size_t>(r));
    report.y = y;
    report.eigenvalues = eigenvalues(jacobian(system, y));
    report.stability = classify_spectrum(report.eigenvalues, stability_tol);
    report.admissible = true;
    for (Eigen::Index r : active)
      if (!(y(r) > 0.0)) report.admissible = false;
    scan.reports.push_back(std::move(report));
  }
  return scan;
}

TwoUnitReport two_unit_analysis(double l31, double l42, double l34,
                                double l43) {
  for (double v : {l31, l42, l34, l43})
    if (!std::isfinite(v)) throw DomainError("two_unit_analysis: inputs must be finite");
  const double cross = 1.0 - l34 * l43;
  if (std::abs(cross) < 1e-14)
    throw DomainError("two_unit_analysis: l34*l43 = 1 makes the critical point degenerate");

  TwoUnitReport rep;
  rep.y_only3 = {l31, 0.0};
  rep.y_only4 = {0.0, l42};
  rep.y_critical = {(l31 + l34 * l42) / cross, (l42 + l43 * l31) / cross};
  rep.spectrum_silent = {l31, l42};
  rep.spectrum_only3 = {-l31, l31 * l34 + l42};
  rep.spectrum_only4 = {-l42, l42 * l43 + l31};
  rep.silent_attractive = l31 < 0.0 && l42 < 0.0;
  rep.only3_attractive = l31 > 0.0 && l31 * l34 + l42 < 0.0;
  rep.only4_attractive = l42 > 0.0 && l42 * l43 + l31 < 0.0;
  if (l34 == l43 && l31 == l42) {
    const double c = l34;
    const double input = l31;
    rep.spectrum_critical_symmetric = {{-input, (1.0 + c) * input / (c - 1.0)}};
    rep.critical_attractive =
        -input < 0.0 && (1.0 + c) * input / (c - 1.0) < 0.0;
  }
  if (l34 == 0.0 || l43 == 0.0)
    rep.regime = "decoupled";
  else if (l34 > 0.0 && l43 > 0.0)
    rep.regime = "positive_feedback";
  else if (l34 < 0.0 && l43 < 0.0)
    rep.regime = "negative_feedback";
  else
    rep.regime = "oscillator";
  return rep;
}

DivergenceDecomposition divergence_decomposition(const RateSystem& system,
                                                 const Eigen::VectorXd& y) {
  if (y.size() != system.dim())
    throw DomainError("divergence_decomposition: state dimension mismatch");
  DivergenceDecomposition d;
  d.input = system.drive().sum();
  d.dissipation = y.dot(system.coupling * y);
  d.inhibition = system.coupling.diagonal().dot(y);
  return d;
}

double trace_divergence(const RateSystem& system, const Eigen::VectorXd& y) {
  if (y.size() != system.dim())
    throw DomainError("trace_divergence: state dimension mismatch");
  return system.drive().sum() + (system.coupling * y).sum() +
         system.coupling.diagonal().dot(y);
}

double energy(const Eigen::VectorXd& y) { return y.sum(); }

}  // namespace mipp::rate
