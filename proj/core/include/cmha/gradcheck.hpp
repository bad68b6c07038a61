#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace cmha {

struct GradCheckReport {
  double max_rel_error = 0.0;
  // Same without discounting rounding; informational.
  double max_raw_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  std::size_t checked = 0;
  // Rounding bound of one central difference: kRoundingUlps * eps * |f(x)| / h.
  double rounding_bound = 0.0;
};

// A double objective is off by a few ulps per evaluation, so a central
// difference carries up to ~2 * ulps * eps * |f| / (2h) of pure rounding.
inline constexpr double kRoundingUlps = 4.0;

using ScalarObjective = std::function<double(std::span<const double>)>;

// Compares `analytic` with central differences (f(x + h e_i) - f(x - h e_i))
// / 2h. The relative error of entry i is
//   max(0, |a - n| - rounding_bound) / max(|a|, |n|, floor),
// i.e. disagreement beyond what the difference quotient can resolve.
GradCheckReport check_gradient(const ScalarObjective& f, std::span<const double> x,
                               std::span<const double> analytic, double h = 1e-5,
                               double floor = 1e-6);

struct GradCheckOptions {
  std::uint64_t seed = 0;
  std::size_t n_p = 16;
  std::size_t n_q = 16;
  std::size_t d = 8;
  double h = 1e-5;
  double tolerance = 1e-4;
  // Multiplies every analytic gradient by (1 + gradient_fault). Nonzero only
  // in negative-control tests.
  double gradient_fault = 0.0;
};

struct LossGradCheck {
  std::string name;      // e.g. "circle/distances"
  std::string location;  // human-readable index of the worst entry
  GradCheckReport report;
  bool passed = false;
};

// Seeded instances of the coarse circle loss (w.r.t. distances and
// features), the fine matching loss (w.r.t. Z) and the cross-modal
// contrastive loss (w.r.t. similarities and features).
std::vector<LossGradCheck> run_loss_gradchecks(const GradCheckOptions& opts);

}  // namespace cmha
