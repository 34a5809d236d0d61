#include "modalkin/simulation.hpp"

#include "modalkin/io.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace modalkin {

Ramp::Ramp(double q_start, double q_end, double q_step) : start(q_start), end(q_end), step(q_step) {
  if (!std::isfinite(start) || !std::isfinite(end) || !std::isfinite(step)) {
    throw std::invalid_argument("ramp: non-finite value");
  }
  if (!(step > 0.0)) throw std::invalid_argument("ramp: step must be positive");
  if (end < start) throw std::invalid_argument("ramp: end must not precede start");
}

std::size_t Ramp::size() const {
  return static_cast<std::size_t>(std::floor((end - start) / step + 1e-9)) + 1;
}

double Ramp::at(std::size_t k) const {
  const double q = start + static_cast<double>(k) * step;
  if (k + 1 == size() && std::abs(q - end) <= 1e-9 * step) return end;
  return q;
}

std::vector<double> Ramp::values() const {
  std::vector<double> out(size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = at(k);
  return out;
}

Ramp Ramp::parse(const std::string& text) {
  const auto parts = csv::split(text, ':');
  if (parts.size() != 3) throw std::invalid_argument("ramp '" + text + "': expected start:end:step");
  double v[3];
  for (int i = 0; i < 3; ++i) {
    if (!csv::parse(csv::trim(parts[static_cast<std::size_t>(i)]), v[i])) {
      throw std::invalid_argument("ramp '" + text + "': malformed number");
    }
  }
  return {v[0], v[1], v[2]};
}

std::vector<PoseSample> simulate_stream(const ModalModel& model, const Ramp& ramp,
                                        const std::optional<ContactSpec>& contact,
                                        const NoiseSpec& noise, std::uint64_t seed) {
  std::optional<ContactState> state;
  if (contact) state = freeze(model, contact->q_c, contact->s_c, contact->blend);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  std::vector<PoseSample> out;
  out.reserve(ramp.size());
  for (std::size_t k = 0; k < ramp.size(); ++k) {
    const double q = ramp.at(k);
    const bool pinned = state && q >= state->q_c - 1e-12 * std::max(1.0, std::abs(state->q_c));
    PlanarPose pose = pinned ? contact_tip_pose(model, *state, std::max(q, state->q_c))
                             : tip_pose(model, q);
    if (noise.enabled()) {
      pose.x += noise.sigma_pos * unit(rng);
      pose.z += noise.sigma_pos * unit(rng);
      pose.theta = wrap_angle(pose.theta + noise.sigma_ang * unit(rng));
    }
    out.push_back({static_cast<std::int64_t>(k), q, pose});
  }
  return out;
}

CentrodeTrace model_centrode_for_stream(const ModalModel& model,
                                        const std::vector<PoseSample>& samples, Exec exec) {
  std::vector<double> pressures(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) pressures[k] = samples[k].q;
  // per-step rate, so the validity threshold means the same as on the sensed side
  double qdot = 1.0;
  if (samples.size() >= 2 && samples.back().q > samples.front().q) {
    qdot = (samples.back().q - samples.front().q) / static_cast<double>(samples.size() - 1);
  }
  CentrodeTrace out = free_centrode(model, pressures, qdot, exec);
  for (std::size_t k = 0; k < samples.size(); ++k) out[k].t = samples[k].t;
  return out;
}

double default_threshold(const ModalModel& model, const Ramp& ramp, const NoiseSpec& noise,
                         std::uint64_t seed) {
  const auto stream = simulate_stream(model, ramp, std::nullopt, noise, seed);
  return noise_floor_threshold(centrode_from_stream(stream), model_centrode_for_stream(model, stream));
}

std::vector<SweepEntry> isa_sweep(const ModalModel& model, const Ramp& ramp,
                                  const std::vector<double>& contact_locations, DistalBlend blend,
                                  Exec exec) {
  for (double s_c : contact_locations) {
    if (!(s_c >= 0.0 && s_c < model.length)) {
      throw std::out_of_range("isa_sweep: contact location " + std::to_string(s_c) +
                              " outside [0, L)");
    }
  }
  const std::vector<double> pressures = ramp.values();
  const CentrodeTrace free = free_centrode(model, pressures, ramp.step, exec);

  std::vector<SweepEntry> out(contact_locations.size());
  for_each_index(contact_locations.size(), exec, [&](std::size_t i) {
    const double s_c = contact_locations[i];
    out[i].s_c = s_c;
    if (s_c == 0.0) {
      out[i].isa = isa_difference(free, free);
      return;
    }
    const ContactState contact = freeze(model, ramp.start, s_c, blend);
    out[i].isa = isa_difference(contact_centrode(model, contact, pressures, ramp.step), free);
  });
  return out;
}

}  // namespace modalkin
