#include "gridcast/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "gridcast/error.hpp"

namespace gridcast {

void ScenarioInput::validate() const {
  if (!(baseline_rate >= 0.0 && baseline_rate <= 1.0)) {
    throw ValidationError("baseline rate must lie in [0, 1]");
  }
  if (households < 1) throw ValidationError("households must be >= 1");
  if (years < 1) throw ValidationError("years must be >= 1");
  if (static_cast<int>(saidi_trajectory.size()) != years) {
    throw ValidationError("trajectory has " + std::to_string(saidi_trajectory.size()) +
                          " entries but the horizon is " + std::to_string(years) + " years");
  }
  for (double v : saidi_trajectory) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ValidationError("trajectory values must be finite and nonnegative");
    }
  }
  if (!(baseline_saidi >= 0.0)) throw ValidationError("baseline SAIDI must be nonnegative");
}

double cumulative_installs(double rate, std::int64_t households, int years) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ValidationError("rate must lie in [0, 1]");
  if (households < 1) throw ValidationError("households must be >= 1");
  if (years < 0) throw ValidationError("years must be nonnegative");
  return rate * static_cast<double>(households) * static_cast<double>(years);
}

ScenarioResult outage_adjusted_installs(const ScenarioInput& input) {
  input.validate();
  ScenarioResult res;
  res.adjusted_rates.reserve(input.years);
  res.yearly_installs.reserve(input.years);
  for (int y = 0; y < input.years; ++y) {
    const double excess_hours = (input.saidi_trajectory[y] - input.baseline_saidi) / 60.0;
    const double rate = std::max(0.0, input.baseline_rate + input.ame_per_hour * excess_hours);
    res.adjusted_rates.push_back(rate);
    res.yearly_installs.push_back(rate * static_cast<double>(input.households));
    res.total += res.yearly_installs.back();
  }
  res.counterfactual = cumulative_installs(input.baseline_rate, input.households, input.years);
  res.reduction = res.counterfactual > 0.0 ? 1.0 - res.total / res.counterfactual : 0.0;
  return res;
}

} // namespace gridcast
