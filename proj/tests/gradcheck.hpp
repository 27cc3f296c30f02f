#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cmabgfn/gfn.hpp"

namespace testutil {

struct GradCheck {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

// Central differences of the batch TB loss against the analytic gradient.
// Relative error per component is |a - f| / max(|a|, |f|, floor); the floor
// keeps components that are zero up to rounding from dominating.
inline GradCheck finite_difference_check(cmabgfn::Policy& model,
                                         const std::vector<cmabgfn::Trajectory>& batch,
                                         double beta, double h = 1e-5,
                                         double floor = 1e-4) {
  using namespace cmabgfn;
  Gradient g;
  tb_gradient_serial(model, batch, beta, g);
  GradCheck out;
  auto record = [&](double analytic, double numeric) {
    const double err = std::abs(analytic - numeric);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    out.max_rel_error = std::max(out.max_rel_error, err / denom);
    out.max_abs_error = std::max(out.max_abs_error, err);
    ++out.checked;
  };
  auto& p = model.params();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    const double up = tb_loss(model, batch, beta).loss;
    p[i] = keep - h;
    const double down = tb_loss(model, batch, beta).loss;
    p[i] = keep;
    record(g.params[i], (up - down) / (2.0 * h));
  }
  const double z = model.log_z;
  model.log_z = z + h;
  const double up = tb_loss(model, batch, beta).loss;
  model.log_z = z - h;
  const double down = tb_loss(model, batch, beta).loss;
  model.log_z = z;
  record(g.log_z, (up - down) / (2.0 * h));
  return out;
}

// Redraws every parameter uniformly in [-scale, scale].
inline void redraw(cmabgfn::Policy& model, cmabgfn::Rng& rng, double scale) {
  for (double& w : model.params()) w = scale * (2.0 * cmabgfn::uniform01(rng) - 1.0);
  model.log_z = scale * (2.0 * cmabgfn::uniform01(rng) - 1.0);
}

}  // namespace testutil
