#pragma once
#include "hoin/tensor.hpp"

#include <vector>

namespace hoin {

struct AdamState {
    int64_t step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<std::vector<double>> m, v; // mirror param shapes
};

void adam_init(AdamState& st, const std::vector<TP>& params);
// Standard bias-corrected update. Parameters with no grad buffer are treated
// as zero-gradient (unchanged). Non-finite gradient -> DivergenceError.
void adam_step(const std::vector<TP>& params, AdamState& st);
void zero_grads(const std::vector<TP>& params);

} // namespace hoin
