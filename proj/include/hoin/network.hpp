#pragma once
#include "hoin/encoders.hpp"
#include "hoin/tensor.hpp"

#include <string>
#include <vector>

namespace hoin {

enum class BlockKind { plain, residual, ho };
enum class Act { relu, sine, linear };

struct ModelSpec {
    EncoderSpec encoder;
    int in_dim = 2;
    BlockKind block = BlockKind::plain;
    int hidden_layers = 3; // L-1 in the cascade; >= 1
    int width = 256;
    Act act = Act::relu;
    double w0 = 30.0; // sine frequency, every hidden layer
    int out_dim = 1;
};

// Instantiated net. Parameter declaration order: [hash tables,] then
// (W_i, b_i) per hidden layer, then the linear head (W, b). The first hidden
// layer is always a plain projection enc_dim -> width; residual/HO kinds
// apply from layer 2 on (their blocks are width-preserving by construction).
struct Model {
    ModelSpec spec;
    Encoder enc;
    std::vector<TP> params;

    TP forward(const TP& coords) const;           // encode + net
    TP forward_features(const TP& features) const; // skip encoder (cached path)
    int64_t param_count() const;
    Model clone() const;
};

Model build_model(const ModelSpec& spec, uint64_t seed);

// standalone blocks (z is [batch x n]); used by tests and the degree probes
TP block_plain(const TP& z, const TP& W, const TP& b, Act act, double w0 = 30.0);
TP block_residual(const TP& z, const TP& W, const TP& b, Act act, double w0 = 30.0);
TP block_ho(const TP& z, const TP& W, const TP& b, Act act, double w0 = 30.0);

// exact derivatives of the pre-activation HO map g(z) = z + (Wz+b) .* z
// J[i][j] = W_ij z_i + delta_ij (1 + (Wz+b)_i)
std::vector<double> ho_jacobian_analytic(const std::vector<double>& z,
                                         const std::vector<double>& W,
                                         const std::vector<double>& b);
// per-output Hessian: H_i[j][k] = W_ij delta_ik + W_ik delta_ij (z-independent)
std::vector<double> ho_hessian_analytic(const std::vector<double>& W, int n, int i);

// versioned binary checkpoint: magic "HOINCKPT", u32 version, spec fields,
// fourier B (when present), parameters as little-endian f64 in declaration order
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

} // namespace hoin
