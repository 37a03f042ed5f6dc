#include "advica/evaluation.hpp"

#include "advica/errors.hpp"
#include "advica/signals.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace advica {

double pearson(std::span<const double> a, std::span<const double> b, bool* degenerate) {
  if (a.size() != b.size()) throw ConfigError("pearson: series lengths differ");
  if (a.size() < 2) throw ConfigError("pearson: need at least 2 samples");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  const double r = sab / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

namespace {

void search(const Eigen::MatrixXd& w, Index row, std::vector<Index>& current,
            std::vector<bool>& used, double acc, Assignment& best) {
  if (row == w.rows()) {
    if (acc > best.total) {
      best.total = acc;
      best.columns = current;
    }
    return;
  }
  for (Index c = 0; c < w.cols(); ++c) {
    if (used[static_cast<std::size_t>(c)]) continue;
    used[static_cast<std::size_t>(c)] = true;
    current[static_cast<std::size_t>(row)] = c;
    search(w, row + 1, current, used, acc + w(row, c), best);
    used[static_cast<std::size_t>(c)] = false;
  }
}

double injective_map_count(Index rows, Index cols) {
  double count = 1.0;
  for (Index i = 0; i < rows; ++i) count *= static_cast<double>(cols - i);
  return count;
}

void check_shape(const Eigen::MatrixXd& w) {
  if (w.rows() > w.cols()) throw ConfigError("assignment needs rows <= columns");
}

}  // namespace

Assignment solve_assignment_exhaustive(const Eigen::MatrixXd& weights) {
  check_shape(weights);
  Assignment best;
  best.total = -std::numeric_limits<double>::infinity();
  std::vector<Index> current(static_cast<std::size_t>(weights.rows()));
  std::vector<bool> used(static_cast<std::size_t>(weights.cols()), false);
  search(weights, 0, current, used, 0.0, best);
  if (weights.rows() == 0) best.total = 0.0;
  return best;
}

Assignment solve_assignment_hungarian(const Eigen::MatrixXd& weights) {
  check_shape(weights);
  // Shortest augmenting path with potentials on cost = -weight; 1-based.
  const Index n = weights.rows();
  const Index m = weights.cols();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(m + 1), 0.0);
  std::vector<Index> p(static_cast<std::size_t>(m + 1), 0), way(static_cast<std::size_t>(m + 1), 0);
  auto cost = [&](Index i, Index j) { return -weights(i - 1, j - 1); };
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m + 1), inf);
    std::vector<bool> used(static_cast<std::size_t>(m + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const Index i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0, j) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  Assignment a;
  a.columns.assign(static_cast<std::size_t>(n), 0);
  for (Index j = 1; j <= m; ++j) {
    const Index row = p[static_cast<std::size_t>(j)];
    if (row != 0) a.columns[static_cast<std::size_t>(row - 1)] = j - 1;
  }
  for (Index i = 0; i < n; ++i) a.total += weights(i, a.columns[static_cast<std::size_t>(i)]);
  return a;
}

Assignment solve_assignment(const Eigen::MatrixXd& weights) {
  constexpr double kExhaustiveLimit = 40320.0;  // 8!
  if (weights.rows() <= 8 && injective_map_count(weights.rows(), weights.cols()) <= kExhaustiveLimit) {
    return solve_assignment_exhaustive(weights);
  }
  return solve_assignment_hungarian(weights);
}

CorrelationReport max_correlation(const Tensor2& truth, const Tensor2& pred) {
  if (truth.cols() != pred.cols()) {
    throw ConfigError("max_correlation: sample counts differ (" + std::to_string(truth.cols()) +
                      " vs " + std::to_string(pred.cols()) + ")");
  }
  if (pred.rows() < truth.rows()) {
    throw ConfigError("max_correlation: fewer predicted signals than true signals");
  }
  CorrelationReport r;
  r.corr_matrix.resize(truth.rows(), pred.rows());
  const auto len = static_cast<std::size_t>(truth.cols());
  for (Index i = 0; i < truth.rows(); ++i) {
    for (Index j = 0; j < pred.rows(); ++j) {
      bool degenerate = false;
      const double rho = pearson(std::span<const double>(truth.row(i).data(), len),
                                 std::span<const double>(pred.row(j).data(), len), &degenerate);
      r.corr_matrix(i, j) = std::abs(rho);
      r.degenerate = r.degenerate || degenerate;
    }
  }
  const Assignment a = solve_assignment(r.corr_matrix);
  r.assignment = a.columns;
  for (Index i = 0; i < truth.rows(); ++i) {
    r.per_pair.push_back(r.corr_matrix(i, a.columns[static_cast<std::size_t>(i)]));
  }
  r.rho_max = truth.rows() ? a.total / static_cast<double>(truth.rows()) : 0.0;
  return r;
}

CorrelationReport max_correlation(const SignalMatrix& truth, const SignalMatrix& pred) {
  return max_correlation(truth.data, pred.data);
}

void write_correlation_report(const std::filesystem::path& stem, const CorrelationReport& r) {
  {
    std::ofstream os(stem.string() + ".csv", std::ios::binary);
    if (!os) throw IngestionError("cannot write " + stem.string() + ".csv");
    for (Index j = 0; j < r.corr_matrix.cols(); ++j) os << (j ? ",p" : "p") << (j + 1);
    os << '\n';
    for (Index i = 0; i < r.corr_matrix.rows(); ++i) {
      for (Index j = 0; j < r.corr_matrix.cols(); ++j) {
        if (j) os << ',';
        os << format_double(r.corr_matrix(i, j));
      }
      os << '\n';
    }
  }
  std::ofstream os(stem.string() + ".txt", std::ios::binary);
  os << "rho_max=" << format_double(r.rho_max) << '\n' << "assignment=";
  for (std::size_t i = 0; i < r.assignment.size(); ++i) os << (i ? "," : "") << r.assignment[i] + 1;
  os << '\n' << "per_pair=";
  for (std::size_t i = 0; i < r.per_pair.size(); ++i) os << (i ? "," : "") << format_double(r.per_pair[i]);
  os << '\n' << "degenerate=" << (r.degenerate ? 1 : 0) << '\n';
}

SelectionStats selection_stats(std::span<const TrialScore> trials) {
  SelectionStats s;
  std::vector<const TrialScore*> ok;
  for (const auto& t : trials) {
    if (t.diverged || !std::isfinite(t.heldout_loss)) {
      ++s.n_diverged;
    } else {
      ok.push_back(&t);
    }
  }
  s.n_used = static_cast<int>(ok.size());
  if (ok.empty()) return s;
  const double n = static_cast<double>(ok.size());
  for (const auto* t : ok) {
    s.mean_loss += t->heldout_loss;
    s.mean_rho += t->rho_max;
  }
  s.mean_loss /= n;
  s.mean_rho /= n;
  if (ok.size() >= 2) {
    double vl = 0.0, vr = 0.0;
    for (const auto* t : ok) {
      vl += (t->heldout_loss - s.mean_loss) * (t->heldout_loss - s.mean_loss);
      vr += (t->rho_max - s.mean_rho) * (t->rho_max - s.mean_rho);
    }
    s.std_loss = std::sqrt(vl / (n - 1.0));
    s.std_rho = std::sqrt(vr / (n - 1.0));
    s.selectable = true;
  }
  return s;
}

}  // namespace advica
