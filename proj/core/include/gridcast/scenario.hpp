#pragma once

#include <cstdint>
#include <vector>

namespace gridcast {

/// Inputs for the adoption counterfactual. The AME is stated per extra hour
/// of annual outage duration; SAIDI trajectories are in minutes per year and
/// are converted at the boundary.
struct ScenarioInput {
  double baseline_rate = 0.00039;     // annual new-installation rate
  std::int64_t households = 377726;
  int years = 16;
  double ame_per_hour = -0.00012;     // change in annual rate per extra outage hour
  double baseline_saidi = 202.0;      // minutes per year
  std::vector<double> saidi_trajectory; // minutes per year, one entry per year

  void validate() const;
};

/// Expected installations under a constant annual rate: rate x households x
/// years.
double cumulative_installs(double rate, std::int64_t households, int years);

struct ScenarioResult {
  std::vector<double> adjusted_rates;  // per year, floored at zero
  std::vector<double> yearly_installs; // adjusted_rate x households
  double total = 0.0;
  double counterfactual = 0.0; // constant-baseline cumulative count
  double reduction = 0.0;      // 1 - total / counterfactual
};

/// Adjusts the annual rate year by year:
/// rate_y = max(0, baseline_rate + ame_per_hour * (saidi_y - baseline_saidi) / 60).
ScenarioResult outage_adjusted_installs(const ScenarioInput& input);

} // namespace gridcast
