#pragma once
#include "hoin/network.hpp"

#include <utility>
#include <vector>

namespace hoin {

struct KernelMatrix {
    int n = 0;
    int in_dim = 1;
    std::vector<double> K;      // n x n, symmetric
    std::vector<double> coords; // n * in_dim, raster/sorted order
};

// K_ij = <dF(x_i)/dtheta, dF(x_j)/dtheta> at the model's current parameters,
// one backward pass per sample (rows parallelized over per-thread clones).
// Requires out_dim == 1 and n <= 1024.
KernelMatrix ntk_matrix(const Model& model, const std::vector<double>& coords, int in_dim);

// cyclic Jacobi to off-diagonal Frobenius norm < 1e-12 * ||K||; returns
// (eigenvalues descending, eigenvectors as columns of row-major V)
std::pair<std::vector<double>, std::vector<double>> eig_symmetric(
    const std::vector<double>& K, int n);

double diag_dominance(const std::vector<double>& K, int n, int bandwidth);
int count_above(const std::vector<double>& eigenvalues, double threshold);

} // namespace hoin
