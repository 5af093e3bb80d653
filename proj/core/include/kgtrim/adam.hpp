#pragma once

#include "kgtrim/gnn.hpp"
#include "kgtrim/params.hpp"

namespace kgtrim {

// Standard Adam with bias correction. The holistic mask is clamped back to
// [0,1] after every update (projected gradient).
struct AdamState {
    Table m_user, v_user;
    Table m_entity, v_entity;
    Table m_relation, v_relation;
    std::vector<double> m_holistic, v_holistic;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState init_adam(const ParameterStore& params);

void adam_step(ParameterStore& params, const GradientStore& grads, AdamState& state, double lr);

}  // namespace kgtrim
