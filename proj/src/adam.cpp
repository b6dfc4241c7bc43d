#include "hoin/adam.hpp"

#include <cmath>

namespace hoin {

void adam_init(AdamState& st, const std::vector<TP>& params) {
    st.step = 0;
    st.m.assign(params.size(), {});
    st.v.assign(params.size(), {});
    for (size_t i = 0; i < params.size(); ++i) {
        st.m[i].assign((size_t)params[i]->numel(), 0.0);
        st.v[i].assign((size_t)params[i]->numel(), 0.0);
    }
}

void adam_step(const std::vector<TP>& params, AdamState& st) {
    st.step += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, double(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, double(st.step));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        if (!p.has_grad()) continue; // zero gradient: parameter unchanged
        const int64_t n = p.numel();
        const double* g = p.grad.data();
        double* w = p.d();
        double* m = st.m[i].data();
        double* v = st.v[i].data();
        for (int64_t j = 0; j < n; ++j) {
            const double gj = g[j];
            if (!std::isfinite(gj)) throw DivergenceError("adam_step: non-finite gradient");
            m[j] = st.beta1 * m[j] + (1.0 - st.beta1) * gj;
            v[j] = st.beta2 * v[j] + (1.0 - st.beta2) * gj * gj;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
        }
    }
}

void zero_grads(const std::vector<TP>& params) {
    for (auto& p : params) p->zero_grad();
}

} // namespace hoin
