#pragma once

#include "modalkin/centrode.hpp"
#include "modalkin/contact.hpp"
#include "modalkin/modal_basis.hpp"

#include <cstdint>
#include <exception>
#include <span>

namespace modalkin {

/// Serial is the reference path; Parallel distributes independent samples
/// over OpenMP threads. Both produce bit-identical results: every sample is
/// computed by the same code and written to its own slot, and reductions run
/// afterwards in index order.
enum class Exec { Serial, Parallel };

int max_threads();
void set_threads(int n);

/// Calls f(i) for i in [0, n). An exception thrown by f is rethrown after
/// the loop (the lowest failing index wins when several fail).
template <class F>
void for_each_index(std::size_t n, Exec exec, F&& f) {
  const auto count = static_cast<std::int64_t>(n);
  if (exec == Exec::Serial) {
    for (std::int64_t i = 0; i < count; ++i) f(static_cast<std::size_t>(i));
    return;
  }
  std::exception_ptr error;
  std::int64_t error_index = count;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(modalkin_for_each_index)
      if (i < error_index) {
        error_index = i;
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

/// Model-side centrode of free motion at each pressure, using the analytic
/// tip twist with rate qdot. Sample k carries t = t0 + k.
CentrodeTrace free_centrode(const ModalModel& model, std::span<const double> pressures,
                            double qdot, Exec exec = Exec::Serial, std::int64_t t0 = 0);

/// Same for a contacted backbone; every pressure must be >= contact.q_c.
CentrodeTrace contact_centrode(const ModalModel& model, const ContactState& contact,
                               std::span<const double> pressures, double qdot,
                               Exec exec = Exec::Serial, std::int64_t t0 = 0);

}  // namespace modalkin
