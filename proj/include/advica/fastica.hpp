#pragma once

// Linear ICA baseline: PCA whitening plus deflationary fixed-point FastICA
// with the logcosh contrast.

#include "advica/autodiff.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace advica {

struct WhitenModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd whitening_matrix;  // n_components x P
  Index n_components = 0;
};

struct Whitened {
  Tensor2 data;  // n_components x T
  WhitenModel model;
};

/// X is signals x samples. Throws NumericalError when the covariance has
/// fewer than n_components significant directions.
Whitened whiten(const Tensor2& X, Index n_components);

struct FastIcaResult {
  Eigen::MatrixXd W;            // n_components x n_components, orthonormal rows
  std::vector<bool> converged;
  std::vector<int> iterations;
  bool all_converged() const;
};

FastIcaResult fastica(const Tensor2& Z_white, Index n_components, std::uint64_t seed,
                      int max_iter = 1000, double tol = 1e-6);

struct FastIcaSeparation {
  Tensor2 sources;            // n_components x T
  Eigen::MatrixXd unmixing;   // n_components x P, applied to centred X
  WhitenModel whitening;
  FastIcaResult ica;
};

FastIcaSeparation fastica_separate(const Tensor2& X, Index n_components, std::uint64_t seed,
                                   int max_iter = 1000, double tol = 1e-6);

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);

}  // namespace advica
