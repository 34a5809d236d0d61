#include "modalkin/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace modalkin {

namespace {

Eigen::Vector2d rot90(const Eigen::Vector2d& a) { return {-a.y(), a.x()}; }

std::vector<double> sample_weights(const EstimationProblem& problem) {
  const auto& c = problem.sensed;
  const std::size_t n = c.size();
  std::vector<double> w(n, 1.0);
  if (!problem.speed_weighting || n < 2) return w;

  std::vector<double> speed(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t a = k == 0 ? 0 : k - 1;
    const std::size_t b = k + 1 == n ? n - 1 : k + 1;
    if (c[a].valid && c[b].valid && b > a) {
      speed[k] = (c[b].position() - c[a].position()).norm() / static_cast<double>(b - a);
    }
  }
  std::vector<double> finite;
  for (double s : speed)
    if (std::isfinite(s)) finite.push_back(s);
  if (finite.empty()) return w;
  std::nth_element(finite.begin(), finite.begin() + static_cast<long>(finite.size() / 2),
                   finite.end());
  const double median = finite[finite.size() / 2];
  if (!(median > 0.0)) return w;
  for (std::size_t k = 0; k < n; ++k) {
    if (std::isfinite(speed[k])) {
      const double r = speed[k] / median;
      w[k] = 1.0 / (1.0 + r * r);
    }
  }
  return w;
}

struct Residuals {
  double objective = 0.0;
  std::size_t used = 0;
  std::vector<Eigen::Vector2d> r;  // c_s - c_m, zero where unused
  std::vector<bool> used_mask;
};

Residuals residuals(const EstimationProblem& problem, const std::vector<double>& weights,
                    double s_c, Exec exec) {
  const CentrodeTrace predicted =
      predicted_centrode(problem.model, s_c, problem.ramp, problem.blend, exec);
  Residuals out;
  const std::size_t n = predicted.size();
  out.r.assign(n, Eigen::Vector2d::Zero());
  out.used_mask.assign(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    if (!problem.sensed[k].valid || !predicted[k].valid) continue;
    out.r[k] = problem.sensed[k].position() - predicted[k].position();
    out.used_mask[k] = true;
    out.objective += 0.5 * weights[k] * out.r[k].dot(problem.W * out.r[k]);
    ++out.used;
  }
  return out;
}

}  // namespace

double EstimationProblem::lower() const {
  return (s_min == 0.0 && s_max == 0.0) ? 0.01 * model.length : s_min;
}

double EstimationProblem::upper() const {
  return (s_min == 0.0 && s_max == 0.0) ? 0.99 * model.length : s_max;
}

void EstimationProblem::validate() const {
  model.validate();
  const double lo = lower();
  const double hi = upper();
  if (!(lo > 0.0 && lo < hi && hi < model.length)) {
    throw std::invalid_argument("estimation: bounds must satisfy 0 < s_min < s_max < L");
  }
  if (!(s0 >= lo && s0 <= hi)) throw std::invalid_argument("estimation: s0 outside bounds");
  if (!W.isApprox(W.transpose()) || W.llt().info() != Eigen::Success) {
    throw std::invalid_argument("estimation: W must be symmetric positive definite");
  }
  if (sensed.size() != ramp.size()) {
    throw std::invalid_argument("estimation: sensed trace has " + std::to_string(sensed.size()) +
                                " samples, ramp has " + std::to_string(ramp.size()));
  }
  if (std::none_of(sensed.begin(), sensed.end(), [](const auto& c) { return c.valid; })) {
    throw std::invalid_argument("estimation: sensed centrode has no valid samples");
  }
}

CentrodeTrace predicted_centrode(const ModalModel& model, double s_c, const Ramp& ramp,
                                 DistalBlend blend, Exec exec) {
  const ContactState contact = freeze(model, ramp.start, s_c, blend);
  const std::vector<double> pressures = ramp.values();
  return contact_centrode(model, contact, pressures, ramp.step, exec);
}

CentrodeGradient centrode_gradient(const ModalModel& model, double s_c, const Ramp& ramp,
                                   GradientMethod method, DistalBlend blend, double lo, double hi,
                                   Exec exec) {
  if (lo == 0.0 && hi == 0.0) hi = model.length;
  const std::size_t n = ramp.size();
  CentrodeGradient out;
  out.d.assign(n, Eigen::Vector2d::Zero());
  out.valid.assign(n, false);

  if (method == GradientMethod::Analytic) {
    const ContactState contact = freeze(model, ramp.start, s_c, blend);
    std::vector<char> valid(n, 0);
    for_each_index(n, exec, [&](std::size_t k) {
      const double q = ramp.at(k);
      const ActuationJacobian J = contact_jacobian(model, contact, q);
      // same validity rule as contact_centrode with qdot = ramp.step
      if (!(std::abs(J.dtheta * ramp.step) >= kOmegaEpsilon)) return;
      const ContactSensitivity sens = contact_sensitivity(model, contact, q);
      const Eigen::Vector2d v = J.position();
      out.d[k] = sens.position + rot90(sens.velocity) / J.dtheta -
                 rot90(v) * (sens.rate / (J.dtheta * J.dtheta));
      valid[k] = 1;
    });
    for (std::size_t k = 0; k < n; ++k) out.valid[k] = valid[k] != 0;
    return out;
  }

  const double h = std::max(1e-3 * model.length, 0.01);
  const bool down = s_c - h > 0.0 && s_c - h >= lo;
  const bool up = s_c + h < model.length && s_c + h <= hi;
  double a = s_c - h, b = s_c + h;
  if (!down && !up) throw std::invalid_argument("centrode_gradient: bounds narrower than the step");
  if (!down) a = s_c;
  if (!up) b = s_c;
  out.one_sided = !(down && up);
  const CentrodeTrace ca = predicted_centrode(model, a, ramp, blend, exec);
  const CentrodeTrace cb = predicted_centrode(model, b, ramp, blend, exec);
  for (std::size_t k = 0; k < n; ++k) {
    if (!ca[k].valid || !cb[k].valid) continue;
    out.d[k] = (cb[k].position() - ca[k].position()) / (b - a);
    out.valid[k] = true;
  }
  return out;
}

double objective(const EstimationProblem& problem, double s_c, Exec exec) {
  return residuals(problem, sample_weights(problem), s_c, exec).objective;
}

EstimationReport estimate_contact(const EstimationProblem& problem,
                                  const EstimationOptions& options) {
  problem.validate();
  const double lo = problem.lower();
  const double hi = problem.upper();
  const std::vector<double> weights = sample_weights(problem);

  EstimationReport report;
  double s = std::clamp(problem.s0, lo, hi);
  Residuals current = residuals(problem, weights, s, options.exec);
  if (current.used == 0) throw std::runtime_error("estimation: no usable centrode samples");
  report.initial_objective = current.objective;
  report.trace.push_back({0, s, current.objective});

  double lambda = options.lambda0;
  int iter = 0;
  while (iter < options.max_iter && !report.converged) {
    ++iter;
    const CentrodeGradient grad = centrode_gradient(problem.model, s, problem.ramp,
                                                    options.gradient, problem.blend, lo, hi,
                                                    options.exec);
    double curvature = 0.0;  // sum g^T W g
    double slope = 0.0;      // sum g^T W r
    for (std::size_t k = 0; k < current.r.size(); ++k) {
      if (!current.used_mask[k] || !grad.valid[k]) continue;
      const Eigen::Vector2d Wg = weights[k] * (problem.W * grad.d[k]);
      curvature += grad.d[k].dot(Wg);
      slope += current.r[k].dot(Wg);
    }
    if (!(curvature > 0.0)) {
      report.converged = true;
      break;
    }

    while (true) {
      const double proposed = std::clamp(s + slope / (curvature * (1.0 + lambda)), lo, hi);
      const double step = proposed - s;
      if (std::abs(step) < options.step_tol) {
        report.converged = true;
        break;
      }
      Residuals trial = residuals(problem, weights, proposed, options.exec);
      if (trial.used > 0 && trial.objective < current.objective) {
        const double decrease = (current.objective - trial.objective) / current.objective;
        s = proposed;
        current = std::move(trial);
        lambda = std::max(lambda / 10.0, 1e-12);
        report.trace.push_back({iter, s, current.objective});
        if (decrease < options.rel_tol) report.converged = true;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e12) {
        report.converged = true;
        break;
      }
    }
  }

  report.s_c = s;
  report.iterations = iter;
  report.final_objective = current.objective;
  report.samples_used = current.used;
  if (problem.sensed_end_tip) {
    const ContactState contact = freeze(problem.model, problem.ramp.start, s, problem.blend);
    report.end_tip_error =
        (contact_tip_pose(problem.model, contact, problem.ramp.end).position() -
         *problem.sensed_end_tip)
            .norm();
  }
  return report;
}

std::vector<double> objective_grid(const EstimationProblem& problem, std::span<const double> grid,
                                   Exec exec) {
  problem.validate();
  const std::vector<double> weights = sample_weights(problem);
  std::vector<double> out(grid.size());
  // each grid point runs serially inside; parallelism is across grid points
  for_each_index(grid.size(), exec, [&](std::size_t i) {
    out[i] = residuals(problem, weights, grid[i], Exec::Serial).objective;
  });
  return out;
}

double grid_oracle(const EstimationProblem& problem, std::span<const double> grid, Exec exec) {
  if (grid.empty()) throw std::invalid_argument("grid_oracle: empty grid");
  const std::vector<double> values = objective_grid(problem, grid, exec);
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (values[i] < values[best] || (values[i] == values[best] && grid[i] < grid[best])) best = i;
  }
  return grid[best];
}

void to_json(nlohmann::json& j, const EstimationReport& report) {
  j = nlohmann::json{{"s_c_est", report.s_c},
                     {"iterations", report.iterations},
                     {"initial_objective", report.initial_objective},
                     {"final_objective", report.final_objective},
                     {"end_tip_error_LU", report.end_tip_error
                                              ? nlohmann::json(*report.end_tip_error)
                                              : nlohmann::json(nullptr)},
                     {"converged", report.converged},
                     {"samples_used", report.samples_used}};
}

}  // namespace modalkin
