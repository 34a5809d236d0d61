#include "modalkin/centrode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace modalkin {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_aligned(const CentrodeTrace& a, const CentrodeTrace& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("centrode traces differ in length (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  }
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].t != b[k].t) {
      throw std::invalid_argument("centrode traces are not aligned at sample " + std::to_string(k));
    }
  }
}

std::vector<double> distances(const CentrodeTrace& a, const CentrodeTrace& b) {
  require_aligned(a, b);
  std::vector<double> out(a.size(), kNaN);
  bool any = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].valid && b[k].valid) {
      out[k] = (a[k].position() - b[k].position()).norm();
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("centrode traces share no valid samples");
  return out;
}

}  // namespace

CentrodePoint fixed_centrode(const Eigen::Vector2d& position, const PlanarTwist& twist,
                             std::int64_t t, double omega_eps) {
  CentrodePoint c;
  c.t = t;
  if (!(std::abs(twist.omega) >= omega_eps) || !std::isfinite(twist.omega)) {
    c.x = position.x();
    c.z = position.y();
    return c;
  }
  c.x = position.x() - twist.vz / twist.omega;
  c.z = position.y() + twist.vx / twist.omega;
  c.valid = std::isfinite(c.x) && std::isfinite(c.z);
  return c;
}

CentrodeTrace centrode_from_stream(std::span<const PoseSample> samples, double omega_eps) {
  const std::size_t n = samples.size();
  if (n < 3) {
    throw std::invalid_argument("centrode_from_stream: need at least 3 samples, got " +
                                std::to_string(n));
  }
  const std::int64_t dt = samples[1].t - samples[0].t;
  if (dt <= 0) throw std::invalid_argument("centrode_from_stream: time index must increase");
  for (std::size_t k = 1; k < n; ++k) {
    if (samples[k].t - samples[k - 1].t != dt) {
      throw std::invalid_argument("centrode_from_stream: non-uniform step at sample " +
                                  std::to_string(k));
    }
  }

  std::vector<double> angle(n);
  angle[0] = samples[0].pose.theta;
  for (std::size_t k = 1; k < n; ++k) {
    angle[k] = angle[k - 1] + wrap_angle(samples[k].pose.theta - samples[k - 1].pose.theta);
  }
  auto px = [&](std::size_t k) { return samples[k].pose.x; };
  auto pz = [&](std::size_t k) { return samples[k].pose.z; };
  auto th = [&](std::size_t k) { return angle[k]; };

  const double h = static_cast<double>(dt);
  // ends use four-point one-sided stencils when available so they are no
  // less accurate than the central interior
  auto derivative = [&](auto&& f, std::size_t k) {
    if (k == 0) {
      if (n >= 4) return (-11.0 * f(0) + 18.0 * f(1) - 9.0 * f(2) + 2.0 * f(3)) / (6.0 * h);
      return (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h);
    }
    if (k == n - 1) {
      if (n >= 4) {
        return (11.0 * f(n - 1) - 18.0 * f(n - 2) + 9.0 * f(n - 3) - 2.0 * f(n - 4)) / (6.0 * h);
      }
      return (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h);
    }
    return (f(k + 1) - f(k - 1)) / (2.0 * h);
  };

  CentrodeTrace out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const PlanarTwist twist{derivative(px, k), derivative(pz, k), derivative(th, k)};
    out.push_back(fixed_centrode(samples[k].pose.position(), twist, samples[k].t, omega_eps));
  }
  return out;
}

Detection fcd_detect(const CentrodeTrace& sensed, const CentrodeTrace& model, double xi,
                     int window) {
  if (!(xi > 0.0)) throw std::invalid_argument("fcd_detect: xi must be positive");
  if (window < 1) throw std::invalid_argument("fcd_detect: window must be >= 1");
  Detection d;
  d.deviation = distances(sensed, model);
  int run = 0;
  for (std::size_t k = 0; k < d.deviation.size(); ++k) {
    const double dev = d.deviation[k];
    if (std::isnan(dev)) {
      run = 0;
      continue;
    }
    d.max_deviation = std::max(d.max_deviation, dev);
    if (d.detected) continue;
    run = dev > xi ? run + 1 : 0;
    if (run == window) {
      d.detected = true;
      d.onset_index = k + 1 - static_cast<std::size_t>(window);
      d.onset_t = sensed[d.onset_index].t;
    }
  }
  return d;
}

IsaDifference isa_difference(const CentrodeTrace& contact, const CentrodeTrace& free) {
  IsaDifference out;
  out.series = distances(contact, free);
  for (std::size_t k = 0; k < out.series.size(); ++k) {
    if (!std::isnan(out.series[k]) && out.series[k] > out.max) {
      out.max = out.series[k];
      out.argmax = k;
    }
  }
  return out;
}

double noise_floor_threshold(const CentrodeTrace& sensed_free, const CentrodeTrace& model_free,
                             double factor) {
  std::vector<double> d;
  for (double v : distances(sensed_free, model_free)) {
    if (!std::isnan(v)) d.push_back(v);
  }
  std::sort(d.begin(), d.end());
  // nearest-rank percentile
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(d.size())));
  const double p95 = d[std::max<std::size_t>(rank, 1) - 1];
  return std::max(factor * p95, 1e-9);
}

void to_json(nlohmann::json& j, const Detection& d) {
  j = nlohmann::json{{"detected", d.detected},
                     {"onset_t", d.detected ? nlohmann::json(d.onset_t) : nlohmann::json(nullptr)},
                     {"max_deviation", d.max_deviation}};
}

}  // namespace modalkin
