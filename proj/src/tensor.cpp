#include "hoin/tensor.hpp"

#include "hoin/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace hoin {

// ---------------------------------------------------------------- buffers

namespace {

struct Pool {
    std::unordered_map<size_t, std::vector<double*>> free_lists;
    ~Pool() {
        for (auto& [sz, v] : free_lists)
            for (double* p : v) std::free(p);
    }
};
thread_local Pool t_pool;
constexpr size_t kMaxFreePerSize = 64;

} // namespace

Buffer::Buffer(size_t n) : n_(n) {
    if (n == 0) return;
    auto it = t_pool.free_lists.find(n);
    if (it != t_pool.free_lists.end() && !it->second.empty()) {
        p_ = it->second.back();
        it->second.pop_back();
        return;
    }
    size_t bytes = (n * sizeof(double) + 63) & ~size_t(63);
    p_ = static_cast<double*>(std::aligned_alloc(64, bytes));
    if (!p_) throw std::bad_alloc();
}

void Buffer::reset() {
    if (!p_) return;
    auto& v = t_pool.free_lists[n_];
    if (v.size() < kMaxFreePerSize)
        v.push_back(p_);
    else
        std::free(p_);
    p_ = nullptr;
    n_ = 0;
}

Buffer::~Buffer() { reset(); }

Buffer& Buffer::operator=(Buffer&& o) noexcept {
    if (this != &o) {
        reset();
        p_ = o.p_;
        n_ = o.n_;
        o.p_ = nullptr;
        o.n_ = 0;
    }
    return *this;
}

double* Tensor::g() {
    if (grad.empty()) {
        grad = Buffer((size_t)numel());
        std::memset(grad.data(), 0, sizeof(double) * (size_t)numel());
    }
    return grad.data();
}

void Tensor::zero_grad() {
    if (!grad.empty()) std::memset(grad.data(), 0, sizeof(double) * (size_t)numel());
}

TP make_tensor(std::vector<int> shape) {
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->data = Buffer((size_t)t->numel());
    return t;
}

TP make_leaf(std::vector<int> shape, bool requires_grad) {
    auto t = make_tensor(std::move(shape));
    std::memset(t->d(), 0, sizeof(double) * (size_t)t->numel());
    t->requires_grad = requires_grad;
    return t;
}

TP make_leaf(std::vector<int> shape, const double* src, bool requires_grad) {
    auto t = make_tensor(std::move(shape));
    std::memcpy(t->d(), src, sizeof(double) * (size_t)t->numel());
    t->requires_grad = requires_grad;
    return t;
}

TP make_scalar(double v) {
    auto t = make_tensor({1});
    t->d()[0] = v;
    return t;
}

// ---------------------------------------------------------------- helpers

namespace {

TP make_op(std::vector<int> shape, const char* op, std::vector<TP> parents) {
    auto t = make_tensor(std::move(shape));
    t->op = op;
    bool rg = false;
    for (auto& p : parents) rg = rg || p->requires_grad;
    t->requires_grad = rg;
    if (rg) t->parents = std::move(parents);
    return t;
}

void check(bool ok, const std::string& msg) {
    if (!ok) throw ShapeError(msg);
}

} // namespace

// ---------------------------------------------------------------- matmul

TP matmul(const TP& a, const TP& b) {
    check(a->shape.size() == 2 && b->shape.size() == 2 && a->shape[1] == b->shape[0],
          "matmul: inner extents mismatch");
    const int m = a->shape[0], k = a->shape[1], n = b->shape[1];
    auto y = make_op({m, n}, "matmul", {a, b});
    kernels::mm(a->d(), b->d(), y->d(), m, k, n);
    if (y->requires_grad)
        y->backward_fn = [m, k, n](Tensor& self) {
            auto& a = self.parents[0];
            auto& b = self.parents[1];
            const double* gy = self.grad.data();
            if (a->requires_grad) {
                Buffer bt((size_t)k * n);
                kernels::transpose(b->d(), bt.data(), k, n);
                kernels::mm(gy, bt.data(), a->g(), m, n, k, /*acc=*/true);
            }
            if (b->requires_grad)
                kernels::mm_AtB(a->d(), gy, b->g(), k, m, n, /*acc=*/true);
        };
    return y;
}

TP linear(const TP& x, const TP& W, const TP& bias) {
    check(x->shape.size() == 2 && W->shape.size() == 2 && x->shape[1] == W->shape[0],
          "linear: inner extents mismatch");
    const int m = x->shape[0], k = x->shape[1], n = W->shape[1];
    if (bias) check(bias->numel() == n, "linear: bias length mismatch");
    std::vector<TP> parents = {x, W};
    if (bias) parents.push_back(bias);
    auto y = make_op({m, n}, "linear", std::move(parents));
    kernels::mm(x->d(), W->d(), y->d(), m, k, n, false, bias ? bias->d() : nullptr);
    if (y->requires_grad)
        y->backward_fn = [m, k, n](Tensor& self) {
            auto& x = self.parents[0];
            auto& W = self.parents[1];
            const double* gy = self.grad.data();
            if (x->requires_grad) {
                Buffer wt((size_t)k * n);
                kernels::transpose(W->d(), wt.data(), k, n);
                kernels::mm(gy, wt.data(), x->g(), m, n, k, /*acc=*/true);
            }
            if (W->requires_grad)
                kernels::mm_AtB(x->d(), gy, W->g(), k, m, n, /*acc=*/true);
            if (self.parents.size() > 2 && self.parents[2]->requires_grad)
                kernels::colsum(gy, self.parents[2]->g(), m, n, /*acc=*/true);
        };
    return y;
}

// ---------------------------------------------------------------- elementwise

namespace {

// equal-shape or either-side-scalar binary op plumbing
struct BinShape {
    int64_t n;      // output elements
    bool a_scalar, b_scalar;
};

BinShape bin_shape(const TP& a, const TP& b, const char* what) {
    BinShape s{};
    s.a_scalar = a->numel() == 1;
    s.b_scalar = b->numel() == 1;
    if (!s.a_scalar && !s.b_scalar)
        check(a->shape == b->shape, std::string(what) + ": shape mismatch");
    s.n = s.a_scalar ? b->numel() : a->numel();
    return s;
}

std::vector<int> bin_out_shape(const TP& a, const TP& b, const BinShape& s) {
    return s.a_scalar ? b->shape : a->shape;
}

} // namespace

TP add(const TP& a, const TP& b) {
    auto s = bin_shape(a, b, "add");
    auto y = make_op(bin_out_shape(a, b, s), "add", {a, b});
    const double* ad = a->d();
    const double* bd = b->d();
    double* yd = y->d();
    for (int64_t i = 0; i < s.n; ++i)
        yd[i] = ad[s.a_scalar ? 0 : i] + bd[s.b_scalar ? 0 : i];
    if (y->requires_grad)
        y->backward_fn = [s](Tensor& self) {
            const double* gy = self.grad.data();
            for (int side = 0; side < 2; ++side) {
                auto& p = self.parents[side];
                if (!p->requires_grad) continue;
                bool scal = side == 0 ? s.a_scalar : s.b_scalar;
                double* gp = p->g();
                if (scal)
                    for (int64_t i = 0; i < s.n; ++i) gp[0] += gy[i];
                else
                    for (int64_t i = 0; i < s.n; ++i) gp[i] += gy[i];
            }
        };
    return y;
}

TP sub(const TP& a, const TP& b) {
    auto s = bin_shape(a, b, "sub");
    auto y = make_op(bin_out_shape(a, b, s), "sub", {a, b});
    const double* ad = a->d();
    const double* bd = b->d();
    double* yd = y->d();
    for (int64_t i = 0; i < s.n; ++i)
        yd[i] = ad[s.a_scalar ? 0 : i] - bd[s.b_scalar ? 0 : i];
    if (y->requires_grad)
        y->backward_fn = [s](Tensor& self) {
            const double* gy = self.grad.data();
            auto& a = self.parents[0];
            auto& b = self.parents[1];
            if (a->requires_grad) {
                double* ga = a->g();
                if (s.a_scalar)
                    for (int64_t i = 0; i < s.n; ++i) ga[0] += gy[i];
                else
                    for (int64_t i = 0; i < s.n; ++i) ga[i] += gy[i];
            }
            if (b->requires_grad) {
                double* gb = b->g();
                if (s.b_scalar)
                    for (int64_t i = 0; i < s.n; ++i) gb[0] -= gy[i];
                else
                    for (int64_t i = 0; i < s.n; ++i) gb[i] -= gy[i];
            }
        };
    return y;
}

TP hadamard(const TP& a, const TP& b) {
    auto s = bin_shape(a, b, "hadamard");
    auto y = make_op(bin_out_shape(a, b, s), "hadamard", {a, b});
    const double* ad = a->d();
    const double* bd = b->d();
    double* yd = y->d();
    for (int64_t i = 0; i < s.n; ++i)
        yd[i] = ad[s.a_scalar ? 0 : i] * bd[s.b_scalar ? 0 : i];
    if (y->requires_grad)
        y->backward_fn = [s](Tensor& self) {
            const double* gy = self.grad.data();
            auto& a = self.parents[0];
            auto& b = self.parents[1];
            const double* ad = a->d();
            const double* bd = b->d();
            if (a->requires_grad) {
                double* ga = a->g();
                if (s.a_scalar)
                    for (int64_t i = 0; i < s.n; ++i) ga[0] += gy[i] * bd[s.b_scalar ? 0 : i];
                else
                    for (int64_t i = 0; i < s.n; ++i) ga[i] += gy[i] * bd[s.b_scalar ? 0 : i];
            }
            if (b->requires_grad) {
                double* gb = b->g();
                if (s.b_scalar)
                    for (int64_t i = 0; i < s.n; ++i) gb[0] += gy[i] * ad[s.a_scalar ? 0 : i];
                else
                    for (int64_t i = 0; i < s.n; ++i) gb[i] += gy[i] * ad[s.a_scalar ? 0 : i];
            }
        };
    return y;
}

TP scale(const TP& a, double c) {
    auto y = make_op(a->shape, "scale", {a});
    const double* ad = a->d();
    double* yd = y->d();
    const int64_t n = a->numel();
    for (int64_t i = 0; i < n; ++i) yd[i] = c * ad[i];
    if (y->requires_grad)
        y->backward_fn = [c, n](Tensor& self) {
            auto& a = self.parents[0];
            if (!a->requires_grad) return;
            const double* gy = self.grad.data();
            double* ga = a->g();
            for (int64_t i = 0; i < n; ++i) ga[i] += c * gy[i];
        };
    return y;
}

TP relu(const TP& x) {
    auto y = make_op(x->shape, "relu", {x});
    const double* xd = x->d();
    double* yd = y->d();
    const int64_t n = x->numel();
#pragma omp simd
    for (int64_t i = 0; i < n; ++i) yd[i] = xd[i] > 0.0 ? xd[i] : 0.0;
    if (y->requires_grad)
        y->backward_fn = [n](Tensor& self) {
            auto& x = self.parents[0];
            if (!x->requires_grad) return;
            const double* gy = self.grad.data();
            const double* xd = x->d();
            double* gx = x->g();
            // subgradient 0 at x == 0
#pragma omp simd
            for (int64_t i = 0; i < n; ++i) gx[i] += xd[i] > 0.0 ? gy[i] : 0.0;
        };
    return y;
}

TP sin_scaled(const TP& x, double w0) {
    auto y = make_op(x->shape, "sin_scaled", {x});
    const int64_t n = x->numel();
    if (y->requires_grad) {
        auto cosbuf = std::make_shared<Buffer>((size_t)n);
        kernels::sincos_w0(x->d(), w0, y->d(), cosbuf->data(), n);
        y->backward_fn = [w0, n, cosbuf](Tensor& self) {
            auto& x = self.parents[0];
            if (!x->requires_grad) return;
            const double* gy = self.grad.data();
            const double* cb = cosbuf->data();
            double* gx = x->g();
#pragma omp simd
            for (int64_t i = 0; i < n; ++i) gx[i] += gy[i] * w0 * cb[i];
        };
    } else {
        kernels::sincos_w0(x->d(), w0, y->d(), nullptr, n);
    }
    return y;
}

TP gaussian_act(const TP& x, double s) {
    auto y = make_op(x->shape, "gaussian", {x});
    const double inv2s2 = 1.0 / (2.0 * s * s);
    const double* xd = x->d();
    double* yd = y->d();
    const int64_t n = x->numel();
    for (int64_t i = 0; i < n; ++i) yd[i] = std::exp(-xd[i] * xd[i] * inv2s2);
    if (y->requires_grad)
        y->backward_fn = [inv2s2, n](Tensor& self) {
            auto& x = self.parents[0];
            if (!x->requires_grad) return;
            const double* gy = self.grad.data();
            const double* xd = x->d();
            const double* yd = self.data.data();
            double* gx = x->g();
            for (int64_t i = 0; i < n; ++i)
                gx[i] += gy[i] * yd[i] * (-2.0 * inv2s2 * xd[i]);
        };
    return y;
}

TP identity_op(const TP& x) {
    auto y = make_op(x->shape, "identity", {x});
    std::memcpy(y->d(), x->d(), sizeof(double) * (size_t)x->numel());
    if (y->requires_grad)
        y->backward_fn = [](Tensor& self) {
            auto& x = self.parents[0];
            if (!x->requires_grad) return;
            const double* gy = self.grad.data();
            double* gx = x->g();
            const int64_t n = self.numel();
            for (int64_t i = 0; i < n; ++i) gx[i] += gy[i];
        };
    return y;
}

TP ho_combine(const TP& z, const TP& u) {
    check(z->shape == u->shape, "ho_combine: shape mismatch");
    auto y = make_op(z->shape, "ho_combine", {z, u});
    const double* zd = z->d();
    const double* ud = u->d();
    double* yd = y->d();
    const int64_t n = z->numel();
#pragma omp simd
    for (int64_t i = 0; i < n; ++i) yd[i] = zd[i] + ud[i] * zd[i];
    if (y->requires_grad)
        y->backward_fn = [n](Tensor& self) {
            auto& z = self.parents[0];
            auto& u = self.parents[1];
            const double* gy = self.grad.data();
            const double* zd = z->d();
            const double* ud = u->d();
            if (z->requires_grad) {
                double* gz = z->g();
#pragma omp simd
                for (int64_t i = 0; i < n; ++i) gz[i] += gy[i] * (1.0 + ud[i]);
            }
            if (u->requires_grad) {
                double* gu = u->g();
#pragma omp simd
                for (int64_t i = 0; i < n; ++i) gu[i] += gy[i] * zd[i];
            }
        };
    return y;
}

TP reshape(const TP& x, std::vector<int> shape) {
    int64_t n = 1;
    for (int e : shape) n *= e;
    check(n == x->numel(), "reshape: element count mismatch");
    auto y = make_op(std::move(shape), "reshape", {x});
    std::memcpy(y->d(), x->d(), sizeof(double) * (size_t)n);
    if (y->requires_grad)
        y->backward_fn = [n](Tensor& self) {
            auto& x = self.parents[0];
            if (!x->requires_grad) return;
            const double* gy = self.grad.data();
            double* gx = x->g();
            for (int64_t i = 0; i < n; ++i) gx[i] += gy[i];
        };
    return y;
}

// ---------------------------------------------------------------- reductions

TP sum(const TP& x) {
    auto y = make_op({1}, "sum", {x});
    const double* xd = x->d();
    const int64_t n = x->numel();
    double t = 0.0;
    for (int64_t i = 0; i < n; ++i) t += xd[i];
    y->d()[0] = t;
    if (y->requires_grad)
        y->backward_fn = [n](Tensor& self) {
            auto& x = self.parents[0];
            if (!x->requires_grad) return;
            const double g = self.grad.data()[0];
            double* gx = x->g();
            for (int64_t i = 0; i < n; ++i) gx[i] += g;
        };
    return y;
}

TP mse(const TP& pred, const TP& target) {
    check(pred->shape == target->shape, "mse: shape mismatch");
    auto y = make_op({1}, "mse", {pred, target});
    const int64_t n = pred->numel();
    const double* pd = pred->d();
    const double* td = target->d();
    double t = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        double e = pd[i] - td[i];
        t += e * e;
    }
    y->d()[0] = t / double(n);
    if (y->requires_grad)
        y->backward_fn = [n](Tensor& self) {
            auto& p = self.parents[0];
            auto& t = self.parents[1];
            const double g = self.grad.data()[0] * 2.0 / double(n);
            const double* pd = p->d();
            const double* td = t->d();
            if (p->requires_grad) {
                double* gp = p->g();
#pragma omp simd
                for (int64_t i = 0; i < n; ++i) gp[i] += g * (pd[i] - td[i]);
            }
            if (t->requires_grad) {
                double* gt = t->g();
#pragma omp simd
                for (int64_t i = 0; i < n; ++i) gt[i] -= g * (pd[i] - td[i]);
            }
        };
    return y;
}

TP mse_masked(const TP& pred, const TP& target, std::shared_ptr<std::vector<uint8_t>> keep) {
    check(pred->shape == target->shape, "mse_masked: shape mismatch");
    check((int64_t)keep->size() == pred->numel(), "mse_masked: mask size mismatch");
    int64_t kept = 0;
    for (uint8_t k : *keep) kept += k ? 1 : 0;
    check(kept > 0, "mse_masked: empty mask");
    auto y = make_op({1}, "mse_masked", {pred, target});
    const int64_t n = pred->numel();
    const double* pd = pred->d();
    const double* td = target->d();
    const uint8_t* kd = keep->data();
    double t = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        if (!kd[i]) continue;
        double e = pd[i] - td[i];
        t += e * e;
    }
    y->d()[0] = t / double(kept);
    if (y->requires_grad)
        y->backward_fn = [n, kept, keep](Tensor& self) {
            auto& p = self.parents[0];
            auto& t = self.parents[1];
            const double g = self.grad.data()[0] * 2.0 / double(kept);
            const double* pd = p->d();
            const double* td = t->d();
            const uint8_t* kd = keep->data();
            if (p->requires_grad) {
                double* gp = p->g();
                for (int64_t i = 0; i < n; ++i)
                    if (kd[i]) gp[i] += g * (pd[i] - td[i]);
            }
            if (t->requires_grad) {
                double* gt = t->g();
                for (int64_t i = 0; i < n; ++i)
                    if (kd[i]) gt[i] -= g * (pd[i] - td[i]);
            }
        };
    return y;
}

TP op_elementwise(EwKind kind, const TP& a, const TP& b, double param) {
    switch (kind) {
    case EwKind::add: return add(a, b);
    case EwKind::sub: return sub(a, b);
    case EwKind::hadamard: return hadamard(a, b);
    case EwKind::relu: return relu(a);
    case EwKind::sin_scaled: return sin_scaled(a, param);
    case EwKind::gaussian: return gaussian_act(a, param);
    case EwKind::identity: return identity_op(a);
    }
    throw ShapeError("op_elementwise: unknown kind");
}

// ---------------------------------------------------------------- backward

std::vector<Tensor*> topo_order(const TP& root, bool reverse_sibling_order) {
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> seen;
    // iterative post-order DFS
    struct Frame {
        Tensor* t;
        size_t next = 0;
    };
    std::vector<Frame> stack;
    if (seen.insert(root.get()).second) stack.push_back({root.get()});
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.t->parents.size()) {
            size_t idx = reverse_sibling_order ? f.t->parents.size() - 1 - f.next : f.next;
            Tensor* p = f.t->parents[idx].get();
            ++f.next;
            if (seen.insert(p).second) stack.push_back({p});
        } else {
            order.push_back(f.t);
            stack.pop_back();
        }
    }
    return order;
}

void backward(const TP& loss, bool reverse_sibling_order) {
    if (loss->numel() != 1) throw ShapeError("backward: loss must be scalar");
    auto order = topo_order(loss, reverse_sibling_order);
    // fresh gradients for interior nodes; leaves accumulate across calls
    for (Tensor* t : order)
        if (t->backward_fn) t->zero_grad();
    loss->g()[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* t = *it;
        if (t->backward_fn && t->has_grad()) t->backward_fn(*t);
    }
}

} // namespace hoin
