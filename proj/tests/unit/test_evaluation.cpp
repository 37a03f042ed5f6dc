#include "doctest.h"

#include "advica/errors.hpp"
#include "advica/evaluation.hpp"
#include "support/finite_diff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

using namespace advica;
using advica::testing::random_tensor;

namespace {


// Best injective assignment by enumerating every ordered choice of columns.
double brute_force(const Eigen::MatrixXd& w) {
  const Index r = w.rows(), c = w.cols();
  std::vector<Index> cols(static_cast<std::size_t>(c));
  std::iota(cols.begin(), cols.end(), 0);
  double best = -1e300;
  do {
    double s = 0.0;
    for (Index i = 0; i < r; ++i) s += w(i, cols[static_cast<std::size_t>(i)]);
    best = std::max(best, s);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

double total_of(const Eigen::MatrixXd& w, const Assignment& a) {
  double s = 0.0;
  for (Index i = 0; i < w.rows(); ++i) s += w(i, a.columns[static_cast<std::size_t>(i)]);
  return s;
}

bool injective(const Assignment& a) {
  auto c = a.columns;
  std::sort(c.begin(), c.end());
  return std::adjacent_find(c.begin(), c.end()) == c.end();
}

}  // namespace

TEST_CASE("pearson examples") {
  const std::vector<double> a{0.3, -1.2, 2.0, 0.7, 5.1};
  std::vector<double> b(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) b[i] = -2.0 * a[i] + 3.0;
  CHECK(pearson(a, a) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pearson(a, b) == doctest::Approx(-1.0).epsilon(1e-14));

  const int n = 4000;
  std::vector<double> s(n), c(n);
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * 10.0 * i / n;
    s[i] = std::sin(t);
    c[i] = std::cos(t);
  }
  CHECK(std::abs(pearson(s, c)) < 1e-3);

  bool degenerate = false;
  const std::vector<double> flat(5, 2.0);
  CHECK(pearson(a, flat, &degenerate) == 0.0);
  CHECK(degenerate);
  degenerate = false;
  pearson(a, b, &degenerate);
  CHECK_FALSE(degenerate);
  CHECK_THROWS(pearson(a, std::vector<double>{1.0, 2.0}));
}

TEST_CASE("max_correlation is invariant to permutation, sign and scale") {
  Rng rng(11);
  const Tensor2 S = random_tensor(5, 300, rng);
  const std::vector<Index> perm{3, 0, 4, 1, 2};
  const double scale[] = {2.5, -0.1, 7.0, -3.0, 0.4};
  const double shift[] = {1.0, -4.0, 0.0, 9.0, 0.5};
  Tensor2 P(5, 300);
  for (Index k = 0; k < 5; ++k)
    P.row(k) = (S.row(perm[static_cast<std::size_t>(k)]).array() * scale[k] + shift[k]).matrix();
  const CorrelationReport r = max_correlation(S, P);
  CHECK(r.rho_max == doctest::Approx(1.0).epsilon(1e-12));
  for (Index k = 0; k < 5; ++k) CHECK(r.assignment[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] == k);
  CHECK_FALSE(r.degenerate);

  const CorrelationReport self = max_correlation(S, S);
  CHECK(self.rho_max == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(self.rho_max <= 1.0);
}

TEST_CASE("extra noise prediction stays unassigned") {
  Rng rng(12);
  const Tensor2 S = random_tensor(3, 500, rng);
  Tensor2 P(4, 500);
  P.topRows(3) = S;
  P.row(3) = random_tensor(1, 500, rng);
  const CorrelationReport r = max_correlation(S, P);
  CHECK(r.rho_max == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::find(r.assignment.begin(), r.assignment.end(), 3) == r.assignment.end());
  CHECK(r.corr_matrix.rows() == 3);
  CHECK(r.corr_matrix.cols() == 4);
}

TEST_CASE("max_correlation errors and degenerate predictions") {
  Rng rng(13);
  const Tensor2 S = random_tensor(3, 100, rng);
  CHECK_THROWS(max_correlation(S, random_tensor(3, 99, rng)));
  CHECK_THROWS(max_correlation(S, random_tensor(2, 100, rng)));
  Tensor2 P = S;
  P.row(1).setConstant(0.5);
  const CorrelationReport r = max_correlation(S, P);
  CHECK(r.degenerate);
  CHECK(r.rho_max == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("assignment solvers match brute force") {
  Rng rng(14);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const Index rows = dim(rng);
    const Index cols = std::max<Index>(rows, dim(rng));
    const Eigen::MatrixXd w = random_tensor(rows, cols, rng).cwiseAbs();
    const double oracle = brute_force(w);
    for (const Assignment& a : {solve_assignment(w), solve_assignment_exhaustive(w),
                                solve_assignment_hungarian(w)}) {
      REQUIRE(a.columns.size() == static_cast<std::size_t>(rows));
      CHECK(injective(a));
      CHECK(total_of(w, a) == doctest::Approx(oracle).epsilon(1e-12));
    }
  }
  // Larger instances: the two exact solvers agree.
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd w = random_tensor(8, 9, rng).cwiseAbs();
    CHECK(total_of(w, solve_assignment_hungarian(w)) ==
          doctest::Approx(total_of(w, solve_assignment_exhaustive(w))).epsilon(1e-12));
  }
  CHECK_THROWS(solve_assignment(Eigen::MatrixXd::Ones(3, 2)));
}

TEST_CASE("rho_max dominates every other injective pairing") {
  Rng rng(15);
  const Tensor2 S = random_tensor(4, 200, rng);
  Tensor2 P = S + random_tensor(4, 200, rng, 1.5);
  const CorrelationReport r = max_correlation(S, P);
  std::vector<Index> cols{0, 1, 2, 3};
  do {
    double s = 0.0;
    for (Index i = 0; i < 4; ++i) s += r.corr_matrix(i, cols[static_cast<std::size_t>(i)]);
    CHECK(s / 4.0 <= r.rho_max + 1e-12);
  } while (std::next_permutation(cols.begin(), cols.end()));
  CHECK(r.rho_max >= 0.0);
  CHECK(r.rho_max <= 1.0);
}

TEST_CASE("selection statistics") {
  const TrialScore two[] = {{1.0, 0.9, false}, {3.0, 0.7, false}};
  const SelectionStats s = selection_stats(two);
  CHECK(s.mean_loss == doctest::Approx(2.0));
  CHECK(s.std_loss == doctest::Approx(std::sqrt(2.0)));
  CHECK(s.mean_rho == doctest::Approx(0.8));
  CHECK(s.n_used == 2);
  CHECK(s.selectable);

  const TrialScore same[] = {{0.5, 0.9, false}, {0.5, 0.8, false}, {0.5, 1.0, false}};
  CHECK(selection_stats(same).std_loss == 0.0);

  const TrialScore mostly_bad[] = {{1.0, 0.9, false}, {9.0, 0.1, true}, {9.0, 0.1, true}};
  const SelectionStats m = selection_stats(mostly_bad);
  CHECK_FALSE(m.selectable);
  CHECK(m.n_diverged == 2);
  CHECK(m.n_used == 1);

  // Diverged trials do not contribute. Recomputed independently below.
  const TrialScore five[] = {{0.12, 0.99, false}, {0.15, 0.97, false}, {5.0, 0.2, true},
                             {0.11, 0.98, false}, {0.19, 0.95, false}};
  const SelectionStats f = selection_stats(five);
  const double xs[] = {0.12, 0.15, 0.11, 0.19};
  double mean = 0.0;
  for (double x : xs) mean += x / 4.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  CHECK(f.mean_loss == doctest::Approx(mean).epsilon(1e-12));
  CHECK(f.std_loss == doctest::Approx(std::sqrt(ss / 3.0)).epsilon(1e-12));
  CHECK(f.n_diverged == 1);
}
