#pragma once
#include "hoin/tensor.hpp"

#include <atomic>
#include <cstdint>
#include <memory>

namespace hoin {

enum class EncKind { identity, positional, fourier, hashgrid };

struct EncoderSpec {
    EncKind kind = EncKind::identity;
    int m = 9;          // positional: j = 0..m; fourier: row count of B
    double sigma = 2.0; // positional octave base / fourier N(0, sigma^2) scale
    // hashgrid (InstantNGP-style conventions)
    int levels = 4;
    int base_resolution = 16;
    double growth = 2.0;
    int features_per_entry = 2;
    int table_size = 1 << 14; // power of two
};

// paper-silent defaults: positional m=9 sigma=2, fourier m=128 sigma=10
EncoderSpec default_encoder(EncKind kind);

// (xor_d corner_d * prime_d) mod T, wrapping 64-bit multiplies;
// prime_1 = 1, then 2654435761, 805459861.
uint64_t hash_index(const int64_t* corner, int dims, int table_size);

struct Encoder {
    EncoderSpec spec;
    int in_dim = 2;
    TP B;      // fourier matrix [m x in_dim], frozen after init
    TP tables; // hashgrid tables [levels * T * F], learnable
    std::shared_ptr<std::atomic<long>> clamp_count; // hashgrid out-of-domain flag

    int out_dim() const;
    // x: [batch x in_dim] in [-1,1]^in_dim. Differentiable w.r.t. x for
    // identity/positional/fourier; w.r.t. tables for hashgrid.
    TP encode(const TP& x) const;
    std::vector<TP> params() const; // learnable tensors (hashgrid tables)
    Encoder clone() const;
};

// init_rng, when given, supplies the hashgrid table draws (so a model's
// parameters come from one "init" stream); the fourier B always uses the
// dedicated "fourier-B" stream of `seed`.
struct Rng;
Encoder build_encoder(const EncoderSpec& spec, int in_dim, uint64_t seed,
                      Rng* init_rng = nullptr);

} // namespace hoin
