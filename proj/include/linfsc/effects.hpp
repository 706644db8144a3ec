#pragma once

// Counterfactuals and treatment effects from fitted weights.

#include <map>

#include "linfsc/model.hpp"

namespace linfsc {

struct EffectSeries {
  /// Imputed untreated outcome mu + Y_t w over the post period.
  Vector counterfactual;
  /// Observed treated outcome minus counterfactual.
  Vector dynamic_effects;
  double ate = 0.0;
  /// h -> mean of the first h dynamic effects, for h = 1..T1.
  std::map<Index, double> horizon_ates;
};

Vector counterfactual_series(const PanelData& panel, const WeightFit& fit);
EffectSeries dynamic_effects(const PanelData& panel, const WeightFit& fit);
/// Pre-period residual y_t - (mu + Y_t w), t = 1..t0.
Vector pre_fit_gap(const PanelData& panel, const WeightFit& fit);

}  // namespace linfsc
