#pragma once
#include "hoin/rng.hpp"
#include "hoin/tensor.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace hoin::testing {

inline double rel_err(double got, double want) {
    return std::fabs(got - want) / std::max({std::fabs(got), std::fabs(want), 1.0});
}

inline TP rand_leaf(std::vector<int> shape, Rng& rng, bool rg = true, double lo = -1.0,
                    double hi = 1.0) {
    auto t = make_leaf(shape, rg);
    for (int64_t i = 0; i < t->numel(); ++i) t->d()[i] = rng.uniform(lo, hi);
    return t;
}

// central-difference check of d(loss)/d(leaf) for every element of every leaf;
// make_loss() must rebuild the graph from the current leaf values
inline void check_grads(const std::vector<TP>& leaves, const std::function<TP()>& make_loss,
                        double h = 1e-5, double tol = 1e-6) {
    auto loss = make_loss();
    backward(loss);
    std::vector<std::vector<double>> ad(leaves.size());
    for (size_t l = 0; l < leaves.size(); ++l) {
        REQUIRE(leaves[l]->has_grad());
        ad[l].assign(leaves[l]->grad.data(), leaves[l]->grad.data() + leaves[l]->numel());
        leaves[l]->zero_grad();
    }
    for (size_t l = 0; l < leaves.size(); ++l) {
        for (int64_t i = 0; i < leaves[l]->numel(); ++i) {
            double& v = leaves[l]->d()[i];
            const double save = v;
            v = save + h;
            const double up = make_loss()->d()[0];
            v = save - h;
            const double dn = make_loss()->d()[0];
            v = save;
            const double fd = (up - dn) / (2.0 * h);
            INFO("leaf ", l, " elem ", i, " ad=", ad[l][(size_t)i], " fd=", fd);
            CHECK(rel_err(ad[l][(size_t)i], fd) < tol);
        }
    }
}

// fresh temp dir per call; removed by the caller when it cares
inline std::string tmp_dir(const std::string& tag) {
    static int counter = 0;
    auto p = std::filesystem::temp_directory_path() /
             ("hoin_test_" + tag + "_" + std::to_string(++counter));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

inline std::string slurp_file(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    REQUIRE(f != nullptr);
    std::string out;
    char buf[4096];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
    std::fclose(f);
    return out;
}

} // namespace hoin::testing
