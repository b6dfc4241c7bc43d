#include "hoin/encoders.hpp"

#include "hoin/kernels.hpp"
#include "hoin/rng.hpp"

#include <cmath>
#include <cstring>

namespace hoin {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr uint64_t kPrimes[3] = {1ull, 2654435761ull, 805459861ull};
} // namespace

EncoderSpec default_encoder(EncKind kind) {
    EncoderSpec s;
    s.kind = kind;
    if (kind == EncKind::positional) {
        s.m = 9;
        s.sigma = 2.0;
    } else if (kind == EncKind::fourier) {
        s.m = 128;
        s.sigma = 10.0;
    }
    return s;
}

uint64_t hash_index(const int64_t* corner, int dims, int table_size) {
    uint64_t h = 0;
    for (int d = 0; d < dims; ++d) h ^= (uint64_t)corner[d] * kPrimes[d % 3];
    return h & (uint64_t)(table_size - 1);
}

int Encoder::out_dim() const {
    switch (spec.kind) {
    case EncKind::identity: return in_dim;
    case EncKind::positional: return 2 * (spec.m + 1) * in_dim;
    case EncKind::fourier: return 2 * spec.m;
    case EncKind::hashgrid: return spec.levels * spec.features_per_entry;
    }
    return 0;
}

std::vector<TP> Encoder::params() const {
    if (spec.kind == EncKind::hashgrid) return {tables};
    return {};
}

Encoder Encoder::clone() const {
    Encoder e;
    e.spec = spec;
    e.in_dim = in_dim;
    e.clamp_count = clamp_count;
    if (B) e.B = make_leaf(B->shape, B->d(), false);
    if (tables) e.tables = make_leaf(tables->shape, tables->d(), true);
    return e;
}

Encoder build_encoder(const EncoderSpec& spec, int in_dim, uint64_t seed, Rng* init_rng) {
    if (spec.kind == EncKind::positional && spec.m < 0)
        throw ShapeError("encoder: positional m must be >= 0");
    if (spec.kind == EncKind::hashgrid && (spec.table_size & (spec.table_size - 1)) != 0)
        throw ShapeError("encoder: table_size must be a power of two");
    Encoder e;
    e.spec = spec;
    e.in_dim = in_dim;
    e.clamp_count = std::make_shared<std::atomic<long>>(0);
    if (spec.kind == EncKind::fourier) {
        Rng rng(seed, "fourier-B");
        e.B = make_leaf({spec.m, in_dim}, false);
        double* b = e.B->d();
        for (int64_t i = 0; i < e.B->numel(); ++i) b[i] = spec.sigma * rng.normal();
    } else if (spec.kind == EncKind::hashgrid) {
        Rng local(seed, "init");
        Rng& rng = init_rng ? *init_rng : local;
        e.tables =
            make_leaf({spec.levels * spec.table_size * spec.features_per_entry}, true);
        double* t = e.tables->d();
        for (int64_t i = 0; i < e.tables->numel(); ++i) t[i] = rng.uniform(-1e-4, 1e-4);
    }
    return e;
}

namespace {

// ------------------------------------------------------------- positional
// layout: per input dim d, per j=0..m: [cos, sin] pairs.
TP encode_positional(const TP& x, const EncoderSpec& spec, int in_dim) {
    const int batch = x->shape[0];
    const int m = spec.m;
    const int per_dim = 2 * (m + 1);
    auto y = make_tensor({batch, per_dim * in_dim});
    y->op = "enc_positional";
    y->requires_grad = x->requires_grad;

    auto freqs = std::make_shared<std::vector<double>>((size_t)m + 1);
    for (int j = 0; j <= m; ++j)
        (*freqs)[j] = kTwoPi * std::pow(spec.sigma, m > 0 ? double(j) / double(m) : 0.0);

    const double* xd = x->d();
    double* yd = y->d();
    const int od = per_dim * in_dim;
    for (int b = 0; b < batch; ++b)
        for (int d = 0; d < in_dim; ++d) {
            const double xv = xd[(size_t)b * in_dim + d];
            double* row = yd + (size_t)b * od + (size_t)d * per_dim;
            for (int j = 0; j <= m; ++j) {
                const double a = (*freqs)[j] * xv;
                row[2 * j] = std::cos(a);
                row[2 * j + 1] = std::sin(a);
            }
        }
    if (y->requires_grad) {
        y->parents = {x};
        y->backward_fn = [freqs, in_dim, per_dim, batch](Tensor& self) {
            auto& x = self.parents[0];
            if (!x->requires_grad) return;
            const double* gy = self.grad.data();
            const double* yd = self.data.data();
            double* gx = x->g();
            const int od = per_dim * in_dim;
            for (int b = 0; b < batch; ++b)
                for (int d = 0; d < in_dim; ++d) {
                    const size_t base = (size_t)b * od + (size_t)d * per_dim;
                    double acc = 0.0;
                    for (size_t j = 0; j < freqs->size(); ++j) {
                        const double f = (*freqs)[j];
                        const double cosv = yd[base + 2 * j];
                        const double sinv = yd[base + 2 * j + 1];
                        acc += gy[base + 2 * j] * (-f * sinv) + gy[base + 2 * j + 1] * (f * cosv);
                    }
                    gx[(size_t)b * in_dim + d] += acc;
                }
        };
    }
    return y;
}

// --------------------------------------------------------------- fourier
// layout: [cos(2 pi B x) for all m rows, then sin(...)]
TP encode_fourier(const TP& x, const TP& B, int in_dim) {
    const int batch = x->shape[0];
    const int m = B->shape[0];
    if (B->shape[1] != in_dim) throw ShapeError("encode_fourier: B column mismatch");
    auto y = make_tensor({batch, 2 * m});
    y->op = "enc_fourier";
    y->requires_grad = x->requires_grad;

    // P = 2 pi * x * B^T
    Buffer bt((size_t)in_dim * m);
    kernels::transpose(B->d(), bt.data(), m, in_dim);
    Buffer P((size_t)batch * m);
    kernels::mm(x->d(), bt.data(), P.data(), batch, in_dim, m);
    double* pd = P.data();
    for (int64_t i = 0; i < (int64_t)batch * m; ++i) pd[i] *= kTwoPi;

    double* yd = y->d();
    for (int b = 0; b < batch; ++b) {
        const double* prow = pd + (size_t)b * m;
        double* cosrow = yd + (size_t)b * 2 * m;
        kernels::sincos_w0_serial(prow, 1.0, cosrow + m, cosrow, m);
    }
    if (y->requires_grad) {
        y->parents = {x};
        y->backward_fn = [B, batch, m, in_dim](Tensor& self) {
            auto& x = self.parents[0];
            if (!x->requires_grad) return;
            const double* gy = self.grad.data();
            const double* yd = self.data.data();
            // gP[b,i] = 2 pi * (-gcos*sin + gsin*cos)
            Buffer gP((size_t)batch * m);
            double* gp = gP.data();
            for (int b = 0; b < batch; ++b) {
                const double* cosrow = yd + (size_t)b * 2 * m;
                const double* sinrow = cosrow + m;
                const double* gcos = gy + (size_t)b * 2 * m;
                const double* gsin = gcos + m;
                double* gpr = gp + (size_t)b * m;
                for (int i = 0; i < m; ++i)
                    gpr[i] = kTwoPi * (-gcos[i] * sinrow[i] + gsin[i] * cosrow[i]);
            }
            kernels::mm(gp, B->d(), x->g(), batch, m, in_dim, /*acc=*/true);
        };
    }
    return y;
}

// --------------------------------------------------------------- hashgrid

// one pass shared by forward (gtab null) and backward (tab null)
void hash_accumulate(const double* xd, const double* tab, double* out, double* gtab,
                     const double* gout, const EncoderSpec& spec, int in_dim, int batch,
                     std::atomic<long>* clamp_count) {
    const int L = spec.levels, F = spec.features_per_entry, T = spec.table_size;
    const int ncorners = 1 << in_dim;
    for (int b = 0; b < batch; ++b) {
        const double* xr = xd + (size_t)b * in_dim;
        for (int l = 0; l < L; ++l) {
            const int res = (int)std::floor(spec.base_resolution * std::pow(spec.growth, l));
            const int64_t table_off = (int64_t)l * T;
            double frac[3];
            int64_t cell[3];
            for (int d = 0; d < in_dim; ++d) {
                double u = (xr[d] + 1.0) * 0.5;
                if (u < 0.0 || u > 1.0) {
                    u = u < 0.0 ? 0.0 : 1.0;
                    if (clamp_count) clamp_count->fetch_add(1, std::memory_order_relaxed);
                }
                double pos = u * (res - 1);
                int64_t c = (int64_t)pos;
                if (c > res - 2) c = res - 2;
                if (c < 0) c = 0;
                cell[d] = c;
                frac[d] = pos - (double)c;
            }
            for (int corner = 0; corner < ncorners; ++corner) {
                int64_t cc[3];
                double w = 1.0;
                for (int d = 0; d < in_dim; ++d) {
                    const int bit = (corner >> d) & 1;
                    cc[d] = cell[d] + bit;
                    w *= bit ? frac[d] : 1.0 - frac[d];
                }
                const int64_t idx = (table_off + (int64_t)hash_index(cc, in_dim, T)) * F;
                if (gtab) {
                    for (int f = 0; f < F; ++f)
                        gtab[idx + f] += w * gout[((size_t)b * L + l) * F + f];
                } else {
                    for (int f = 0; f < F; ++f)
                        out[((size_t)b * L + l) * F + f] += w * tab[idx + f];
                }
            }
        }
    }
}

TP encode_hashgrid(const TP& x, const TP& tables, const EncoderSpec& spec, int in_dim,
                   std::atomic<long>* clamp_count) {
    if (in_dim > 3) throw ShapeError("encode_hashgrid: supports up to 3 input dims");
    const int batch = x->shape[0];
    auto y = make_tensor({batch, spec.levels * spec.features_per_entry});
    y->op = "enc_hashgrid";
    y->requires_grad = tables->requires_grad;

    std::memset(y->d(), 0, sizeof(double) * (size_t)y->numel());
    hash_accumulate(x->d(), tables->d(), y->d(), nullptr, nullptr, spec, in_dim, batch,
                    clamp_count);

    if (y->requires_grad) {
        y->parents = {x, tables};
        y->backward_fn = [spec, in_dim, batch](Tensor& self) {
            auto& x = self.parents[0];
            auto& tab = self.parents[1];
            if (!tab->requires_grad) return;
            hash_accumulate(x->d(), nullptr, nullptr, tab->g(), self.grad.data(), spec,
                            in_dim, batch, nullptr);
        };
    }
    return y;
}

} // namespace

TP Encoder::encode(const TP& x) const {
    if (x->shape.size() != 2 || x->shape[1] != in_dim)
        throw ShapeError("encode: coords must be [batch x in_dim]");
    switch (spec.kind) {
    case EncKind::identity: return identity_op(x);
    case EncKind::positional: return encode_positional(x, spec, in_dim);
    case EncKind::fourier: return encode_fourier(x, B, in_dim);
    case EncKind::hashgrid:
        return encode_hashgrid(x, tables, spec, in_dim, clamp_count.get());
    }
    throw ShapeError("encode: unknown encoder kind");
}

} // namespace hoin
