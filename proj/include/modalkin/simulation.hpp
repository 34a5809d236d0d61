#pragma once

#include "modalkin/centrode.hpp"
#include "modalkin/contact.hpp"
#include "modalkin/kernels.hpp"
#include "modalkin/modal_basis.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace modalkin {

/// Pressure ramp start, start + step, ..., end (Psi). A zero-length ramp has a
/// single sample.
struct Ramp {
  double start = 0.0;
  double end = 0.0;
  double step = 1.0;

  Ramp() = default;
  Ramp(double q_start, double q_end, double q_step);

  std::size_t size() const;
  double at(std::size_t k) const;
  std::vector<double> values() const;

  /// Parses "start:end:step".
  static Ramp parse(const std::string& text);
};

struct NoiseSpec {
  double sigma_pos = 0.0;  // LU
  double sigma_ang = 0.0;  // rad

  bool enabled() const { return sigma_pos > 0.0 || sigma_ang > 0.0; }
};

struct ContactSpec {
  double s_c = 0.0;
  double q_c = 0.0;
  DistalBlend blend = DistalBlend::OnsetPreserving;
};

/// Tip pose stream along the ramp, t = 0, 1, .... With a contact, samples at
/// q >= q_c follow the contacted backbone frozen at q_c. Noise, when enabled,
/// is Gaussian and reproducible from `seed`.
std::vector<PoseSample> simulate_stream(const ModalModel& model, const Ramp& ramp,
                                        const std::optional<ContactSpec>& contact = std::nullopt,
                                        const NoiseSpec& noise = {}, std::uint64_t seed = 0);

/// Free-motion centrode of the model at each sample's pressure, aligned with
/// the samples' time indices. The rate is taken from the stream's pressure
/// step.
CentrodeTrace model_centrode_for_stream(const ModalModel& model,
                                        const std::vector<PoseSample>& samples,
                                        Exec exec = Exec::Serial);

/// Detection threshold from a simulated contact-free run over `ramp` with the
/// given noise: 3x the 95th percentile of the sensed/model centrode distance.
double default_threshold(const ModalModel& model, const Ramp& ramp, const NoiseSpec& noise = {},
                         std::uint64_t seed = 0);

struct SweepEntry {
  double s_c = 0.0;
  IsaDifference isa;
};

/// ISA difference between contacted and free motion for each contact
/// location, onset at ramp.start. A contact at s_c = 0 sits on the clamped
/// base, freezes nothing, and reproduces free motion.
std::vector<SweepEntry> isa_sweep(const ModalModel& model, const Ramp& ramp,
                                  const std::vector<double>& contact_locations,
                                  DistalBlend blend = DistalBlend::OnsetPreserving,
                                  Exec exec = Exec::Serial);

}  // namespace modalkin
