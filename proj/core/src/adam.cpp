#include "kgtrim/adam.hpp"

#include <algorithm>
#include <cmath>

namespace kgtrim {

namespace {

void update(std::vector<double>& param, const std::vector<double>& grad, std::vector<double>& m,
            std::vector<double>& v, const AdamState& st, double lr, double bc1, double bc2) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * g;
        v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + st.eps);
    }
}

}  // namespace

AdamState init_adam(const ParameterStore& params) {
    AdamState st;
    st.m_user = Table(params.user_embeddings.rows(), params.dim);
    st.v_user = Table(params.user_embeddings.rows(), params.dim);
    st.m_entity = Table(params.entity_embeddings.rows(), params.dim);
    st.v_entity = Table(params.entity_embeddings.rows(), params.dim);
    st.m_relation = Table(params.relation_embeddings.rows(), params.dim);
    st.v_relation = Table(params.relation_embeddings.rows(), params.dim);
    st.m_holistic.assign(params.holistic_raw.size(), 0.0);
    st.v_holistic.assign(params.holistic_raw.size(), 0.0);
    return st;
}

void adam_step(ParameterStore& params, const GradientStore& grads, AdamState& state, double lr) {
    if (!params.user_embeddings.same_shape(grads.user) ||
        !params.entity_embeddings.same_shape(grads.entity) ||
        !params.relation_embeddings.same_shape(grads.relation) ||
        params.holistic_raw.size() != grads.holistic_raw.size()) {
        throw ValidationError("adam_step: gradient shapes do not match parameters");
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    update(params.user_embeddings.data(), grads.user.data(), state.m_user.data(),
           state.v_user.data(), state, lr, bc1, bc2);
    update(params.entity_embeddings.data(), grads.entity.data(), state.m_entity.data(),
           state.v_entity.data(), state, lr, bc1, bc2);
    update(params.relation_embeddings.data(), grads.relation.data(), state.m_relation.data(),
           state.v_relation.data(), state, lr, bc1, bc2);
    update(params.holistic_raw, grads.holistic_raw, state.m_holistic, state.v_holistic, state, lr,
           bc1, bc2);
    for (double& h : params.holistic_raw) h = std::clamp(h, 0.0, 1.0);
}

}  // namespace kgtrim
