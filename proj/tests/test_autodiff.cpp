#include "helpers.hpp"
#include "hoin/adam.hpp"

#include <cmath>

using namespace hoin;
using namespace hoin::testing;

namespace {

// magnitudes in [0.1, 1]: keeps relu/FD away from the kink at 0
TP rand_leaf_nonzero(std::vector<int> shape, Rng& rng) {
    auto t = make_leaf(shape, true);
    for (int64_t i = 0; i < t->numel(); ++i) {
        const double mag = rng.uniform(0.1, 1.0);
        t->d()[i] = rng.uniform01() < 0.5 ? -mag : mag;
    }
    return t;
}

} // namespace

TEST_CASE("gradcheck: matmul and linear") {
    Rng rng(10, "test");
    auto A = rand_leaf({3, 4}, rng);
    auto B = rand_leaf({4, 2}, rng);
    auto tgt = rand_leaf({3, 2}, rng, false);
    check_grads({A, B}, [&] { return mse(matmul(A, B), tgt); });

    auto x = rand_leaf({5, 3}, rng);
    auto W = rand_leaf({3, 4}, rng);
    auto b = rand_leaf({4}, rng);
    auto t2 = rand_leaf({5, 4}, rng, false);
    check_grads({x, W, b}, [&] { return mse(linear(x, W, b), t2); });
}

TEST_CASE("gradcheck: elementwise ops and broadcasts") {
    Rng rng(11, "test");
    auto a = rand_leaf({4, 3}, rng);
    auto b = rand_leaf({4, 3}, rng);
    auto s = rand_leaf({1}, rng);
    auto tgt = rand_leaf({4, 3}, rng, false);
    check_grads({a, b}, [&] { return mse(add(a, b), tgt); });
    check_grads({a, b}, [&] { return mse(sub(a, b), tgt); });
    check_grads({a, b}, [&] { return mse(hadamard(a, b), tgt); });
    check_grads({a, s}, [&] { return mse(add(a, s), tgt); });
    check_grads({a, s}, [&] { return mse(sub(s, a), tgt); });
    check_grads({a, s}, [&] { return mse(hadamard(a, s), tgt); });
    check_grads({a}, [&] { return mse(scale(a, -2.5), tgt); });
    check_grads({a}, [&] { return mse(identity_op(a), tgt); });
}

TEST_CASE("gradcheck: activations") {
    Rng rng(12, "test");
    auto x = rand_leaf_nonzero({4, 5}, rng);
    auto tgt = rand_leaf({4, 5}, rng, false);
    check_grads({x}, [&] { return mse(relu(x), tgt); });
    check_grads({x}, [&] { return mse(sin_scaled(x, 30.0), tgt); }, 1e-6, 1e-4);
    check_grads({x}, [&] { return mse(sin_scaled(x, 1.0), tgt); });
    check_grads({x}, [&] { return mse(gaussian_act(x, 0.7), tgt); });
}

TEST_CASE("gradcheck: ho_combine, reshape, sum, mse_masked") {
    Rng rng(13, "test");
    auto z = rand_leaf({3, 4}, rng);
    auto u = rand_leaf({3, 4}, rng);
    auto tgt = rand_leaf({3, 4}, rng, false);
    check_grads({z, u}, [&] { return mse(ho_combine(z, u), tgt); });

    auto t2 = rand_leaf({2, 6}, rng, false);
    check_grads({z}, [&] { return mse(reshape(z, {2, 6}), t2); });
    check_grads({z}, [&] { return sum(z); });
    check_grads({z, u}, [&] { return mse(z, u); });

    auto keep = std::make_shared<std::vector<uint8_t>>(12, uint8_t(0));
    for (size_t i = 0; i < keep->size(); i += 3) (*keep)[i] = 1;
    check_grads({z, u}, [&] { return mse_masked(z, u, keep); });
}

TEST_CASE("relu subgradient at zero is zero") {
    auto x = make_leaf({3}, true);
    x->d()[0] = -1.0;
    x->d()[1] = 0.0;
    x->d()[2] = 2.0;
    auto loss = sum(relu(x));
    backward(loss);
    CHECK(x->grad.data()[0] == 0.0);
    CHECK(x->grad.data()[1] == 0.0);
    CHECK(x->grad.data()[2] == 1.0);
}

TEST_CASE("shared subexpression accumulates both paths") {
    auto x = make_leaf({3}, true);
    for (int i = 0; i < 3; ++i) x->d()[i] = i + 1.0;
    // f = sum(x*x + 3x) -> df/dx = 2x + 3
    auto loss = sum(add(hadamard(x, x), scale(x, 3.0)));
    backward(loss);
    for (int i = 0; i < 3; ++i) CHECK(x->grad.data()[i] == doctest::Approx(2 * (i + 1.0) + 3).epsilon(1e-14));
}

TEST_CASE("sibling traversal order does not change gradients") {
    Rng rng(14, "test");
    auto x = rand_leaf({4, 4}, rng);
    auto W = rand_leaf({4, 4}, rng);
    auto tgt = rand_leaf({4, 4}, rng, false);
    auto make = [&] { return mse(add(matmul(x, W), hadamard(x, x)), tgt); };
    auto l1 = make();
    backward(l1, false);
    std::vector<double> g1(x->grad.data(), x->grad.data() + 16);
    std::vector<double> gw1(W->grad.data(), W->grad.data() + 16);
    x->zero_grad();
    W->zero_grad();
    auto l2 = make();
    backward(l2, true);
    for (int i = 0; i < 16; ++i) {
        CHECK(rel_err(g1[(size_t)i], x->grad.data()[i]) < 1e-12);
        CHECK(rel_err(gw1[(size_t)i], W->grad.data()[i]) < 1e-12);
    }
}

TEST_CASE("repeated backward accumulates leaf grads; interior grads reset") {
    auto x = make_leaf({2}, true);
    x->d()[0] = 1.5;
    x->d()[1] = -2.0;
    auto l1 = sum(hadamard(x, x));
    backward(l1);
    const double g0 = x->grad.data()[0];
    backward(l1);
    CHECK(x->grad.data()[0] == 2.0 * g0); // leaves accumulate across calls
    x->zero_grad();
    backward(l1);
    CHECK(x->grad.data()[0] == g0);
}

TEST_CASE("shape errors") {
    auto a = make_leaf({2, 3}, true);
    auto b = make_leaf({2, 2}, true);
    CHECK_THROWS_AS((void)matmul(a, b), ShapeError);
    CHECK_THROWS_AS((void)add(a, b), ShapeError);
    CHECK_THROWS_AS((void)mse(a, b), ShapeError);
    CHECK_THROWS_AS((void)reshape(a, {4, 2}), ShapeError);
    auto empty_keep = std::make_shared<std::vector<uint8_t>>(6, uint8_t(0));
    CHECK_THROWS_AS((void)mse_masked(a, a, empty_keep), ShapeError);
}

TEST_CASE("adam: quadratic converges and first step has size ~lr") {
    auto x = make_leaf({1}, true);
    x->d()[0] = 10.0;
    std::vector<TP> params{x};
    AdamState st;
    st.lr = 0.1;
    adam_init(st, params);

    auto loss_fn = [&] {
        auto c = make_scalar(3.0);
        auto d = sub(x, c);
        return hadamard(d, d);
    };
    auto l0 = loss_fn();
    backward(l0);
    const double before = x->d()[0];
    adam_step(params, st);
    zero_grads(params);
    // bias-corrected first step: lr * g / (|g| + eps) ~= lr * sign(g)
    CHECK(std::fabs((before - x->d()[0]) - 0.1) < 1e-6);

    for (int it = 0; it < 500; ++it) {
        auto l = loss_fn();
        backward(l);
        adam_step(params, st);
        zero_grads(params);
    }
    CHECK(std::fabs(x->d()[0] - 3.0) < 1e-3);
}

TEST_CASE("adam: non-finite gradient raises, missing grad leaves param unchanged") {
    auto x = make_leaf({2}, true);
    x->d()[0] = 1.0;
    x->d()[1] = 2.0;
    auto y = make_leaf({2}, true); // never used in the graph -> no grad buffer
    y->d()[0] = 7.0;
    std::vector<TP> params{x, y};
    AdamState st;
    adam_init(st, params);
    auto l = sum(hadamard(x, x));
    backward(l);
    adam_step(params, st);
    CHECK(y->d()[0] == 7.0);
    x->g()[0] = std::nan("");
    CHECK_THROWS_AS(adam_step(params, st), DivergenceError);
}
