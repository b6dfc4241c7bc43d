#include "hoin/network.hpp"

#include "hoin/rng.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace hoin {

namespace {

TP apply_act(const TP& pre, Act act, double w0) {
    switch (act) {
    case Act::relu: return relu(pre);
    case Act::sine: return sin_scaled(pre, w0);
    case Act::linear: return pre;
    }
    throw ShapeError("unknown activation");
}

void check_square(const TP& z, const TP& W, const char* what) {
    if (W->shape.size() != 2 || W->shape[0] != W->shape[1] || W->shape[0] != z->cols())
        throw ShapeError(std::string(what) + ": requires square W matching z width");
}

} // namespace

TP block_plain(const TP& z, const TP& W, const TP& b, Act act, double w0) {
    return apply_act(linear(z, W, b), act, w0);
}

TP block_residual(const TP& z, const TP& W, const TP& b, Act act, double w0) {
    check_square(z, W, "block_residual");
    return apply_act(add(z, linear(z, W, b)), act, w0);
}

TP block_ho(const TP& z, const TP& W, const TP& b, Act act, double w0) {
    check_square(z, W, "block_ho");
    return apply_act(ho_combine(z, linear(z, W, b)), act, w0);
}

std::vector<double> ho_jacobian_analytic(const std::vector<double>& z,
                                         const std::vector<double>& W,
                                         const std::vector<double>& b) {
    const int n = (int)z.size();
    std::vector<double> J((size_t)n * n);
    for (int i = 0; i < n; ++i) {
        double c = b[i];
        for (int j = 0; j < n; ++j) c += W[(size_t)i * n + j] * z[j];
        for (int j = 0; j < n; ++j) {
            double v = W[(size_t)i * n + j] * z[i];
            if (i == j) v += 1.0 + c;
            J[(size_t)i * n + j] = v;
        }
    }
    return J;
}

std::vector<double> ho_hessian_analytic(const std::vector<double>& W, int n, int i) {
    std::vector<double> H((size_t)n * n, 0.0);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            double v = 0.0;
            if (k == i) v += W[(size_t)i * n + j];
            if (j == i) v += W[(size_t)i * n + k];
            H[(size_t)j * n + k] = v;
        }
    return H;
}

// ---------------------------------------------------------------- build

Model build_model(const ModelSpec& spec, uint64_t seed) {
    if (spec.hidden_layers < 1) throw ShapeError("build_model: need hidden_layers >= 1");
    if (spec.width < 1 || spec.out_dim < 1 || spec.in_dim < 1)
        throw ShapeError("build_model: bad dimensions");
    Model m;
    m.spec = spec;
    Rng init(seed, "init");
    m.enc = build_encoder(spec.encoder, spec.in_dim, seed, &init);
    if (m.enc.tables) m.params.push_back(m.enc.tables);

    const bool sine = spec.act == Act::sine;
    auto draw_layer = [&](int fan_in, int fan_out, bool first) {
        auto W = make_leaf({fan_in, fan_out}, true);
        double bound;
        if (sine)
            // w0 scales the first layer only; deeper sine layers run at unit
            // frequency, so their weights take the plain uniform bound
            bound = first ? 1.0 / fan_in : std::sqrt(6.0 / fan_in);
        else
            bound = std::sqrt(6.0 / fan_in) * (1.0 / std::sqrt(2.0));
        double* w = W->d();
        for (int64_t i = 0; i < W->numel(); ++i) w[i] = init.uniform(-bound, bound);
        auto b = make_leaf({fan_out}, true);
        if (sine) {
            // reference sinusoidal scheme keeps the framework-default bias init
            double bb = 1.0 / std::sqrt((double)fan_in);
            double* bd = b->d();
            for (int64_t i = 0; i < b->numel(); ++i) bd[i] = init.uniform(-bb, bb);
        }
        m.params.push_back(W);
        m.params.push_back(b);
    };

    int fan = m.enc.out_dim();
    for (int l = 0; l < spec.hidden_layers; ++l) {
        draw_layer(fan, spec.width, l == 0);
        fan = spec.width;
    }
    draw_layer(fan, spec.out_dim, false); // linear head
    return m;
}

int64_t Model::param_count() const {
    int64_t n = 0;
    for (const auto& p : params) n += p->numel();
    return n;
}

Model Model::clone() const {
    Model m;
    m.spec = spec;
    m.enc = enc.clone();
    size_t i = 0;
    if (enc.tables) {
        m.params.push_back(m.enc.tables);
        ++i;
    }
    for (; i < params.size(); ++i)
        m.params.push_back(make_leaf(params[i]->shape, params[i]->d(), true));
    return m;
}

TP Model::forward_features(const TP& features) const {
    const size_t base = enc.tables ? 1 : 0;
    TP z = features;
    for (int l = 0; l < spec.hidden_layers; ++l) {
        const TP& W = params[base + 2 * (size_t)l];
        const TP& b = params[base + 2 * (size_t)l + 1];
        // the frequency multiplier belongs to the first layer alone; with it
        // applied everywhere, skip-carrying blocks would swing w0 radians
        const double w0l = l == 0 ? spec.w0 : 1.0;
        if (l == 0 || spec.block == BlockKind::plain)
            z = block_plain(z, W, b, spec.act, w0l);
        else if (spec.block == BlockKind::residual)
            z = block_residual(z, W, b, spec.act, w0l);
        else
            z = block_ho(z, W, b, spec.act, w0l);
    }
    const TP& Wh = params[base + 2 * (size_t)spec.hidden_layers];
    const TP& bh = params[base + 2 * (size_t)spec.hidden_layers + 1];
    return linear(z, Wh, bh);
}

TP Model::forward(const TP& coords) const { return forward_features(enc.encode(coords)); }

// ---------------------------------------------------------------- checkpoint

namespace {

constexpr char kMagic[8] = {'H', 'O', 'I', 'N', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& o, T v) {
    o.write(reinterpret_cast<const char*>(&v), sizeof v); // little-endian host
}
template <typename T>
T get(std::ifstream& i) {
    T v{};
    i.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!i) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

} // namespace

void save_checkpoint(const Model& model, const std::string& path) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw std::runtime_error("checkpoint: cannot write " + path);
    o.write(kMagic, 8);
    put(o, kVersion);
    const ModelSpec& s = model.spec;
    put(o, (uint32_t)s.encoder.kind);
    put(o, (int32_t)s.encoder.m);
    put(o, s.encoder.sigma);
    put(o, (int32_t)s.encoder.levels);
    put(o, (int32_t)s.encoder.base_resolution);
    put(o, s.encoder.growth);
    put(o, (int32_t)s.encoder.features_per_entry);
    put(o, (int32_t)s.encoder.table_size);
    put(o, (int32_t)s.in_dim);
    put(o, (uint32_t)s.block);
    put(o, (int32_t)s.hidden_layers);
    put(o, (int32_t)s.width);
    put(o, (uint32_t)s.act);
    put(o, s.w0);
    put(o, (int32_t)s.out_dim);
    const uint64_t bn = model.enc.B ? (uint64_t)model.enc.B->numel() : 0;
    put(o, bn);
    if (bn) o.write(reinterpret_cast<const char*>(model.enc.B->d()), (std::streamsize)(bn * 8));
    for (const auto& p : model.params)
        o.write(reinterpret_cast<const char*>(p->d()), (std::streamsize)(p->numel() * 8));
    if (!o) throw std::runtime_error("checkpoint: short write to " + path);
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const uint32_t ver = get<uint32_t>(in);
    if (ver != kVersion) throw std::runtime_error("checkpoint: unsupported version");
    ModelSpec s;
    s.encoder.kind = (EncKind)get<uint32_t>(in);
    s.encoder.m = get<int32_t>(in);
    s.encoder.sigma = get<double>(in);
    s.encoder.levels = get<int32_t>(in);
    s.encoder.base_resolution = get<int32_t>(in);
    s.encoder.growth = get<double>(in);
    s.encoder.features_per_entry = get<int32_t>(in);
    s.encoder.table_size = get<int32_t>(in);
    s.in_dim = get<int32_t>(in);
    s.block = (BlockKind)get<uint32_t>(in);
    s.hidden_layers = get<int32_t>(in);
    s.width = get<int32_t>(in);
    s.act = (Act)get<uint32_t>(in);
    s.w0 = get<double>(in);
    s.out_dim = get<int32_t>(in);
    Model m = build_model(s, 0);
    const uint64_t bn = get<uint64_t>(in);
    if (bn) {
        if (!m.enc.B || (uint64_t)m.enc.B->numel() != bn)
            throw std::runtime_error("checkpoint: fourier matrix size mismatch");
        in.read(reinterpret_cast<char*>(m.enc.B->d()), (std::streamsize)(bn * 8));
    }
    for (auto& p : m.params)
        in.read(reinterpret_cast<char*>(p->d()), (std::streamsize)(p->numel() * 8));
    if (!in) throw std::runtime_error("checkpoint: truncated parameters in " + path);
    return m;
}

} // namespace hoin
