#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "afree/linear_operator.hpp"

namespace afree::testing {

inline LinearOperator random_operator(std::mt19937_64& rng, int n, int d, int l) {
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<Eigen::MatrixXd> coeffs;
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd a(l, d);
        for (int r = 0; r < l; ++r)
            for (int c = 0; c < d; ++c) a(r, c) = uni(rng);
        coeffs.push_back(std::move(a));
    }
    return LinearOperator(std::move(coeffs));
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
    std::uniform_real_distribution<double> uni(-scale, scale);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = uni(rng);
    return v;
}

}  // namespace afree::testing
