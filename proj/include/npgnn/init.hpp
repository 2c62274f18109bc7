#pragma once

#include <random>

#include "npgnn/matrix.hpp"

namespace npgnn {

using Rng = std::mt19937_64;

// Uniform on [-a, a], a = sqrt(6 / (rows + cols)).
DenseMatrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace npgnn
