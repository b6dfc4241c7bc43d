#include "hoin/ntk.hpp"

#include "hoin/adam.hpp"
#include "hoin/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <omp.h>

namespace hoin {

KernelMatrix ntk_matrix(const Model& model, const std::vector<double>& coords, int in_dim) {
    if (model.spec.out_dim != 1) throw ShapeError("ntk_matrix: scalar-output model required");
    const int n = (int)(coords.size() / (size_t)in_dim);
    if (n < 1 || n > 1024) throw ShapeError("ntk_matrix: need 1 <= n <= 1024 samples");
    const int64_t P = model.param_count();

    std::vector<double> G((size_t)n * (size_t)P);
    const int nth = kernels::max_threads();
    std::vector<Model> clones;
    clones.reserve((size_t)nth);
    for (int t = 0; t < nth; ++t) clones.push_back(model.clone());

#pragma omp parallel num_threads(nth)
    {
        Model& m = clones[(size_t)omp_get_thread_num()];
#pragma omp for schedule(static)
        for (int i = 0; i < n; ++i) {
            auto x = make_leaf({1, in_dim}, coords.data() + (size_t)i * in_dim, false);
            auto out = m.forward(x);
            backward(sum(out));
            double* row = G.data() + (size_t)i * P;
            for (auto& p : m.params) {
                const int64_t c = p->numel();
                if (p->has_grad())
                    std::memcpy(row, p->grad.data(), sizeof(double) * (size_t)c);
                else
                    std::memset(row, 0, sizeof(double) * (size_t)c);
                row += c;
            }
            zero_grads(m.params);
        }
    }

    KernelMatrix km;
    km.n = n;
    km.in_dim = in_dim;
    km.coords = coords;
    km.K.assign((size_t)n * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            const double v =
                kernels::dot(G.data() + (size_t)i * P, G.data() + (size_t)j * P, P);
            km.K[(size_t)i * n + j] = v;
            km.K[(size_t)j * n + i] = v;
        }
    return km;
}

std::pair<std::vector<double>, std::vector<double>> eig_symmetric(
    const std::vector<double>& K, int n) {
    if ((size_t)n * n != K.size()) throw ShapeError("eig_symmetric: bad size");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j)
            if (std::fabs(K[(size_t)i * n + j] - K[(size_t)j * n + i]) >
                1e-10 * (1.0 + std::fabs(K[(size_t)i * n + j])))
                throw ShapeError("eig_symmetric: input not symmetric");

    std::vector<double> A = K;
    std::vector<double> V((size_t)n * n, 0.0);
    for (int i = 0; i < n; ++i) V[(size_t)i * n + i] = 1.0;

    double norm = 0.0;
    for (double v : A) norm += v * v;
    norm = std::sqrt(norm);
    const double tol = 1e-12 * (norm > 0 ? norm : 1.0);

    auto offdiag = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) s += A[(size_t)i * n + j] * A[(size_t)i * n + j];
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < 100 && offdiag() > tol; ++sweep) {
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                const double apq = A[(size_t)p * n + q];
                if (std::fabs(apq) <= tol / (n * n)) continue;
                const double app = A[(size_t)p * n + p];
                const double aqq = A[(size_t)q * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < n; ++i) {
                    const double aip = A[(size_t)i * n + p];
                    const double aiq = A[(size_t)i * n + q];
                    A[(size_t)i * n + p] = c * aip - s * aiq;
                    A[(size_t)i * n + q] = s * aip + c * aiq;
                }
                for (int j = 0; j < n; ++j) {
                    const double apj = A[(size_t)p * n + j];
                    const double aqj = A[(size_t)q * n + j];
                    A[(size_t)p * n + j] = c * apj - s * aqj;
                    A[(size_t)q * n + j] = s * apj + c * aqj;
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = V[(size_t)i * n + p];
                    const double viq = V[(size_t)i * n + q];
                    V[(size_t)i * n + p] = c * vip - s * viq;
                    V[(size_t)i * n + q] = s * vip + c * viq;
                }
            }
    }

    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[(size_t)i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return A[(size_t)a * n + a] > A[(size_t)b * n + b];
    });
    std::vector<double> evals((size_t)n);
    std::vector<double> Vs((size_t)n * n);
    for (int j = 0; j < n; ++j) {
        evals[(size_t)j] = A[(size_t)idx[(size_t)j] * n + idx[(size_t)j]];
        for (int i = 0; i < n; ++i)
            Vs[(size_t)i * n + j] = V[(size_t)i * n + idx[(size_t)j]];
    }
    return {std::move(evals), std::move(Vs)};
}

double diag_dominance(const std::vector<double>& K, int n, int bandwidth) {
    double in_band = 0.0, total = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double v = std::fabs(K[(size_t)i * n + j]);
            total += v;
            if (std::abs(i - j) <= bandwidth) in_band += v;
        }
    return total > 0 ? in_band / total : 0.0;
}

int count_above(const std::vector<double>& eigenvalues, double threshold) {
    int c = 0;
    for (double v : eigenvalues) c += v > threshold ? 1 : 0;
    return c;
}

} // namespace hoin
