#pragma once

// Separation quality: mean absolute correlation under the best injective
// pairing of true and predicted signals, and per-setting seed statistics.

#include "advica/autodiff.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace advica {

struct SignalMatrix;

/// Pearson correlation. A constant input yields 0 and sets `*degenerate`.
double pearson(std::span<const double> a, std::span<const double> b, bool* degenerate = nullptr);

struct Assignment {
  std::vector<Index> columns;  // row i -> columns[i], all distinct
  double total = 0.0;
};

/// Maximum-weight injective assignment of rows to columns (rows <= cols).
Assignment solve_assignment(const Eigen::MatrixXd& weights);
Assignment solve_assignment_exhaustive(const Eigen::MatrixXd& weights);
Assignment solve_assignment_hungarian(const Eigen::MatrixXd& weights);

struct CorrelationReport {
  Eigen::MatrixXd corr_matrix;      // |pearson|, n_true x n_pred
  std::vector<Index> assignment;    // true -> pred
  std::vector<double> per_pair;     // |rho| of each assigned pair
  double rho_max = 0.0;
  bool degenerate = false;          // some predicted signal was constant
};

/// Rows are signals. Requires pred.rows() >= truth.rows() and equal lengths.
CorrelationReport max_correlation(const Tensor2& truth, const Tensor2& pred);
CorrelationReport max_correlation(const SignalMatrix& truth, const SignalMatrix& pred);

/// `<stem>.csv` holds the matrix, `<stem>.txt` a key=value summary.
void write_correlation_report(const std::filesystem::path& stem, const CorrelationReport& r);

struct TrialScore {
  double heldout_loss = 0.0;
  double rho_max = 0.0;
  bool diverged = false;
};

struct SelectionStats {
  double mean_loss = 0.0;
  double std_loss = 0.0;
  double mean_rho = 0.0;
  double std_rho = 0.0;
  int n_used = 0;
  int n_diverged = 0;
  bool selectable = false;  // at least two non-diverged trials
};

/// Mean and sample standard deviation over the non-diverged trials.
SelectionStats selection_stats(std::span<const TrialScore> trials);

}  // namespace advica
