#include "helpers.hpp"
#include "hoin/adam.hpp"
#include "hoin/kernels.hpp"
#include "hoin/ntk.hpp"

#include <cmath>
#include <cstring>
#include <omp.h>

using namespace hoin;
using namespace hoin::testing;

namespace {

ModelSpec tiny_relu_spec(int width, int layers) {
    ModelSpec s;
    s.encoder.kind = EncKind::positional;
    s.encoder.m = 3;
    s.encoder.sigma = 2.0;
    s.in_dim = 1;
    s.block = BlockKind::plain;
    s.hidden_layers = layers;
    s.width = width;
    s.act = Act::relu;
    s.out_dim = 1;
    return s;
}

// per-sample parameter gradient, same convention as ntk_matrix: missing grad
// buffers read as zero
std::vector<double> param_grad_row(const Model& m, const double* x, int in_dim) {
    std::vector<double> row;
    auto xi = make_leaf({1, in_dim}, x, false);
    auto out = m.forward(xi);
    backward(sum(out));
    for (auto& p : m.params) {
        const size_t n = (size_t)p->numel();
        const size_t o = row.size();
        row.resize(o + n, 0.0);
        if (p->has_grad()) std::memcpy(row.data() + o, p->grad.data(), n * sizeof(double));
    }
    zero_grads(m.params);
    return row;
}

} // namespace

TEST_CASE("ntk closed form for 1-1-1 linear net") {
    ModelSpec s;
    s.encoder.kind = EncKind::identity;
    s.in_dim = 1;
    s.block = BlockKind::plain;
    s.hidden_layers = 1;
    s.width = 1;
    s.act = Act::linear;
    s.out_dim = 1;
    auto m = build_model(s, 11);
    REQUIRE(m.params.size() == 4); // W1 b1 W2 b2
    const double W1 = m.params[0]->d()[0], b1 = m.params[1]->d()[0];
    const double W2 = m.params[2]->d()[0], b2 = m.params[3]->d()[0];
    (void)b2;

    std::vector<double> xs = {-1.0, -0.4, 0.0, 0.3, 0.55, 0.9};
    auto km = ntk_matrix(m, xs, 1);
    REQUIRE(km.n == (int)xs.size());
    // dF/d{W1,b1,W2,b2} = {W2 x, W2, W1 x + b1, 1}
    for (size_t i = 0; i < xs.size(); ++i)
        for (size_t j = 0; j < xs.size(); ++j) {
            const double want = W2 * W2 * (xs[i] * xs[j] + 1.0) +
                                (W1 * xs[i] + b1) * (W1 * xs[j] + b1) + 1.0;
            CHECK(rel_err(km.K[i * xs.size() + j], want) < 1e-12);
        }
}

TEST_CASE("ntk matches an independently built gram matrix") {
    auto m = build_model(tiny_relu_spec(8, 2), 17);
    const int n = 10;
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) xs[(size_t)i] = -1.0 + 2.0 * i / (n - 1);

    auto km = ntk_matrix(m, xs, 1);
    std::vector<std::vector<double>> G(n);
    for (int i = 0; i < n; ++i) G[(size_t)i] = param_grad_row(m, &xs[(size_t)i], 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double want = 0.0;
            for (size_t k = 0; k < G[(size_t)i].size(); ++k) want += G[(size_t)i][k] * G[(size_t)j][k];
            CHECK(rel_err(km.K[(size_t)i * n + j], want) < 1e-12);
        }
}

TEST_CASE("ntk symmetry and near positive semidefiniteness") {
    auto m = build_model(tiny_relu_spec(16, 2), 23);
    const int n = 32;
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) xs[(size_t)i] = -1.0 + 2.0 * i / (n - 1);
    auto km = ntk_matrix(m, xs, 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) CHECK(km.K[(size_t)i * n + j] == km.K[(size_t)j * n + i]);
    auto [eig, V] = eig_symmetric(km.K, n);
    (void)V;
    CHECK(eig.front() > 0.0);
    CHECK(eig.back() >= -1e-8 * eig.front()); // gram matrix, so PSD up to round-off
}

TEST_CASE("ntk_matrix is deterministic across thread counts") {
    auto m = build_model(tiny_relu_spec(8, 2), 31);
    std::vector<double> xs = {-0.9, -0.3, 0.1, 0.2, 0.45, 0.8, 0.95, -0.6};
    auto ref = ntk_matrix(m, xs, 1);
    const int saved = kernels::max_threads();
    for (int t : {1, 2, 4}) {
        omp_set_num_threads(t);
        auto got = ntk_matrix(m, xs, 1);
        CHECK(got.K == ref.K); // bitwise
    }
    omp_set_num_threads(saved);
}

TEST_CASE("jacobi eigensolver") {
    {
        std::vector<double> K = {3.0, 0.0, 0.0, 1.0};
        auto [e, V] = eig_symmetric(K, 2);
        CHECK(e[0] == doctest::Approx(3.0).epsilon(1e-14));
        CHECK(e[1] == doctest::Approx(1.0).epsilon(1e-14));
        (void)V;
    }
    {
        std::vector<double> K = {2.0, 1.0, 1.0, 2.0};
        auto [e, V] = eig_symmetric(K, 2);
        CHECK(e[0] == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(e[1] == doctest::Approx(1.0).epsilon(1e-12));
        // leading eigenvector is (1,1)/sqrt(2) up to sign (columns of V)
        CHECK(std::fabs(std::fabs(V[0]) - std::sqrt(0.5)) < 1e-10);
        CHECK(std::fabs(V[0] - V[2]) < 1e-10);
    }

    Rng rng(60, "test");
    const int n = 20;
    std::vector<double> K((size_t)n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            const double v = rng.uniform(-1, 1);
            K[(size_t)i * n + j] = K[(size_t)j * n + i] = v;
        }
    auto [e, V] = eig_symmetric(K, n);
    for (int i = 0; i + 1 < n; ++i) CHECK(e[(size_t)i] >= e[(size_t)i + 1]);

    // reconstruction: K == V diag(e) V^T
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double r = 0.0;
            for (int k = 0; k < n; ++k) r += V[(size_t)i * n + k] * e[(size_t)k] * V[(size_t)j * n + k];
            num += (r - K[(size_t)i * n + j]) * (r - K[(size_t)i * n + j]);
            den += K[(size_t)i * n + j] * K[(size_t)j * n + i];
        }
    CHECK(std::sqrt(num / den) < 1e-10);

    // orthogonality
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            double dp = 0.0;
            for (int k = 0; k < n; ++k) dp += V[(size_t)k * n + a] * V[(size_t)k * n + b];
            CHECK(std::fabs(dp - (a == b ? 1.0 : 0.0)) < 1e-10);
        }

    double tr = 0.0, se = 0.0;
    for (int i = 0; i < n; ++i) tr += K[(size_t)i * n + i];
    for (double v : e) se += v;
    CHECK(rel_err(tr, se) < 1e-9);

    std::vector<double> bad = {1.0, 2.0, 0.0, 1.0};
    CHECK_THROWS_AS((void)eig_symmetric(bad, 2), ShapeError);
}

TEST_CASE("diag dominance and eigenvalue counting") {
    std::vector<double> I = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    CHECK(diag_dominance(I, 3, 0) == 1.0);
    std::vector<double> ones(16, 1.0);
    CHECK(diag_dominance(ones, 4, 0) == doctest::Approx(0.25).epsilon(1e-14));
    double prev = 0.0;
    for (int w = 0; w <= 3; ++w) {
        const double d = diag_dominance(ones, 4, w);
        CHECK(d >= prev);
        prev = d;
    }
    CHECK(prev == doctest::Approx(1.0).epsilon(1e-14));

    std::vector<double> e = {5.0, 3.0, 1.0, 0.5};
    CHECK(count_above(e, 1.0) == 2); // strictly above
    CHECK(count_above(e, 0.0) == 4);
    CHECK(count_above(e, 10.0) == 0);
}
