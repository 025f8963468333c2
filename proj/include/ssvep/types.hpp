#pragma once

#include <random>

#include <Eigen/Core>

namespace ssvep {

// Row-major so that a channel (or a time step) is a contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Every stochastic operation takes one of these explicitly.
using Rng = std::mt19937_64;

}  // namespace ssvep
