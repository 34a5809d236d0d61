#include "modalkin/kernels.hpp"

#include <omp.h>

namespace modalkin {

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

CentrodeTrace free_centrode(const ModalModel& model, std::span<const double> pressures,
                            double qdot, Exec exec, std::int64_t t0) {
  CentrodeTrace out(pressures.size());
  for_each_index(pressures.size(), exec, [&](std::size_t k) {
    const double q = pressures[k];
    const PlanarPose tip = tip_pose(model, q);
    out[k] = fixed_centrode(tip.position(), tip_twist(model, q, qdot),
                            t0 + static_cast<std::int64_t>(k));
  });
  return out;
}

CentrodeTrace contact_centrode(const ModalModel& model, const ContactState& contact,
                               std::span<const double> pressures, double qdot, Exec exec,
                               std::int64_t t0) {
  CentrodeTrace out(pressures.size());
  for_each_index(pressures.size(), exec, [&](std::size_t k) {
    const double q = pressures[k];
    const PlanarPose tip = contact_tip_pose(model, contact, q);
    out[k] = fixed_centrode(tip.position(), contact_twist(model, contact, q, qdot),
                            t0 + static_cast<std::int64_t>(k));
  });
  return out;
}

}  // namespace modalkin
