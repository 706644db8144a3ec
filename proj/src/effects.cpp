#include "linfsc/effects.hpp"

#include "linfsc/error.hpp"

namespace linfsc {

namespace {

void check_dims(const PanelData& panel, const WeightFit& fit) {
  if (fit.omega_hat.size() != panel.J()) {
    throw Error(ErrorCode::DimensionMismatch,
                "weight vector has " + std::to_string(fit.omega_hat.size()) +
                    " entries for a panel with " + std::to_string(panel.J()) + " controls");
  }
}

}  // namespace

Vector counterfactual_series(const PanelData& panel, const WeightFit& fit) {
  check_dims(panel, fit);
  return (panel.controls_post() * fit.omega_hat).array() + fit.mu_hat;
}

EffectSeries dynamic_effects(const PanelData& panel, const WeightFit& fit) {
  EffectSeries out;
  out.counterfactual = counterfactual_series(panel, fit);
  out.dynamic_effects = panel.treated_post() - out.counterfactual;
  double running = 0.0;
  for (Index h = 1; h <= out.dynamic_effects.size(); ++h) {
    running += out.dynamic_effects[h - 1];
    out.horizon_ates[h] = running / static_cast<double>(h);
  }
  out.ate = out.horizon_ates.rbegin()->second;
  return out;
}

Vector pre_fit_gap(const PanelData& panel, const WeightFit& fit) {
  check_dims(panel, fit);
  return (panel.treated_pre() - panel.controls_pre() * fit.omega_hat).array() - fit.mu_hat;
}

}  // namespace linfsc
