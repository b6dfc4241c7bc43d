#pragma once
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

namespace hoin {

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Pooled, 64-byte-aligned, uninitialized storage. Freed buffers go to a
// thread-local free list keyed by size; the training loop allocates the same
// shapes every epoch, so steady state recycles instead of hitting malloc.
class Buffer {
  public:
    Buffer() = default;
    explicit Buffer(size_t n);
    ~Buffer();
    Buffer(Buffer&& o) noexcept : p_(o.p_), n_(o.n_) {
        o.p_ = nullptr;
        o.n_ = 0;
    }
    Buffer& operator=(Buffer&& o) noexcept;
    Buffer(const Buffer&) = delete;
    Buffer& operator=(const Buffer&) = delete;
    double* data() { return p_; }
    const double* data() const { return p_; }
    size_t size() const { return n_; }
    bool empty() const { return p_ == nullptr; }
    void reset();

  private:
    double* p_ = nullptr;
    size_t n_ = 0;
};

struct Tensor;
using TP = std::shared_ptr<Tensor>;

// Dense value node in a dynamically built graph. Leaves have no backward_fn;
// parameters are leaves with requires_grad set.
struct Tensor {
    std::vector<int> shape;
    Buffer data;
    Buffer grad; // allocated and zeroed on first g()
    bool requires_grad = false;

    const char* op = "leaf";
    std::vector<TP> parents;
    std::function<void(Tensor&)> backward_fn;

    int64_t numel() const {
        int64_t n = 1;
        for (int e : shape) n *= e;
        return n;
    }
    int rows() const { return shape.empty() ? 1 : shape[0]; }
    int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
    double* d() { return data.data(); }
    const double* d() const { return data.data(); }
    double* g(); // ensures grad exists (zero-filled)
    bool has_grad() const { return !grad.empty(); }
    void zero_grad(); // zeroes if allocated, keeps the buffer
};

TP make_tensor(std::vector<int> shape); // uninitialized data
TP make_leaf(std::vector<int> shape, bool requires_grad = false); // zero-filled
TP make_leaf(std::vector<int> shape, const double* src, bool requires_grad = false);
TP make_scalar(double v);

// ---- graph ops (all accumulate into parent grads on backward) ----
TP matmul(const TP& a, const TP& b);
// x[m x k] * W[k x n] + row-broadcast bias (bias may be null)
TP linear(const TP& x, const TP& W, const TP& bias);
TP add(const TP& a, const TP& b); // equal shapes, or either side scalar
TP sub(const TP& a, const TP& b);
TP hadamard(const TP& a, const TP& b);
TP scale(const TP& a, double c);
TP relu(const TP& x);
TP sin_scaled(const TP& x, double w0); // sin(w0*x); cos cached at forward
TP gaussian_act(const TP& x, double s); // exp(-x^2 / (2 s^2))
TP identity_op(const TP& x);
TP ho_combine(const TP& z, const TP& u); // z + u .* z
TP reshape(const TP& x, std::vector<int> shape); // copies
TP sum(const TP& x); // scalar
TP mse(const TP& pred, const TP& target);
// mean over kept entries only; keep has pred->numel() flags
TP mse_masked(const TP& pred, const TP& target, std::shared_ptr<std::vector<uint8_t>> keep);

enum class EwKind { add, sub, hadamard, relu, sin_scaled, gaussian, identity };
// spec-parity dispatcher over the elementwise family; param carries w0 / s
TP op_elementwise(EwKind kind, const TP& a, const TP& b = nullptr, double param = 0.0);

// Reverse topological sweep from a scalar loss. Intermediate grads are
// zeroed per call; leaf grads accumulate across calls. The sibling-order
// flag exists so tests can exercise a second valid topological order.
void backward(const TP& loss, bool reverse_sibling_order = false);
std::vector<Tensor*> topo_order(const TP& root, bool reverse_sibling_order = false);

} // namespace hoin
