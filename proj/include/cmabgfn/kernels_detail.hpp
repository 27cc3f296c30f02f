#pragma once

#include <span>

#include "cmabgfn/env.hpp"
#include "cmabgfn/policy.hpp"

namespace cmabgfn::detail {

// Recomputes log P_F of the taken steps under the current parameters and
// returns the TB residual. When `grad` is non-empty, adds
// scale * residual * d(sum log P_F)/d(theta) into it.
double trajectory_gradient(const Policy& model, const Trajectory& traj,
                           double beta, double scale, std::span<double> grad);

}  // namespace cmabgfn::detail
