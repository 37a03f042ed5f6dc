#include "doctest.h"

#include "advica/errors.hpp"
#include "advica/evaluation.hpp"
#include "advica/fastica.hpp"
#include "advica/signals.hpp"
#include "support/finite_diff.hpp"

#include <chrono>
#include <string>

using namespace advica;
using advica::testing::random_tensor;

namespace {

Eigen::MatrixXd covariance(const Tensor2& Z) {
  const Eigen::MatrixXd c = Z.colwise() - Z.rowwise().mean();
  return c * c.transpose() / static_cast<double>(Z.cols());
}

Tensor2 uniform_sources(Index m, Index t, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor2 s(m, t);
  for (Index i = 0; i < s.size(); ++i) s.data()[i] = u(rng);
  return s;
}

}  // namespace

TEST_CASE("whitening gives identity covariance") {
  Rng rng(21);
  const Eigen::MatrixXd A = random_tensor(4, 4, rng) + 2.0 * Eigen::MatrixXd::Identity(4, 4);
  const Tensor2 X = A * random_tensor(4, 2000, rng) + Eigen::VectorXd::Constant(4, 3.0).replicate(1, 2000);
  const Whitened w = whiten(X, 4);
  CHECK((covariance(w.data) - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(w.data.rowwise().mean().cwiseAbs().maxCoeff() < 1e-10);
  CHECK(w.model.n_components == 4);
  CHECK(w.model.mean(0) == doctest::Approx(3.0).epsilon(0.05));

  // Already white data: covariance stays near identity, transform near orthonormal.
  const Tensor2 N = random_tensor(3, 10000, rng);
  const Whitened wn = whiten(N, 3);
  const Eigen::MatrixXd M = wn.model.whitening_matrix;
  CHECK((M * M.transpose() - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 5e-2);
  CHECK((covariance(wn.data) - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-2);

  // Fewer components than observations.
  const Whitened w2 = whiten(X, 2);
  CHECK(w2.data.rows() == 2);
  CHECK((covariance(w2.data) - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("whitening rejects rank-deficient input") {
  Rng rng(22);
  Tensor2 X = random_tensor(3, 500, rng);
  X.row(2).setConstant(1.5);
  try {
    whiten(X, 3);
    FAIL("expected a rank error");
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("1 of the requested 3") != std::string::npos);
  }
  CHECK_NOTHROW(whiten(X, 2));
}

TEST_CASE("fastica rows are orthonormal") {
  Rng rng(23);
  const Tensor2 S = uniform_sources(4, 3000, rng);
  const Tensor2 X = random_tensor(4, 4, rng) * S;
  const Whitened w = whiten(X, 4);
  const FastIcaResult r = fastica(w.data, 4, 5);
  CHECK((r.W * r.W.transpose() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(r.converged.size() == 4);
  CHECK(r.all_converged());
}

TEST_CASE("two uniform sources are recovered") {
  Rng rng(24);
  const Tensor2 S = uniform_sources(2, 4000, rng);
  const Tensor2 X = random_tensor(2, 2, rng) * S;
  const FastIcaSeparation sep = fastica_separate(X, 2, 0);
  CHECK(max_correlation(S, sep.sources).rho_max >= 0.99);
  // The reported unmixing reproduces the sources from centred X.
  const Tensor2 Xc = X.colwise() - X.rowwise().mean();
  CHECK((sep.unmixing * Xc - sep.sources).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("six synthetic sources under a linear mix") {
  SignalMatrix s = gen_synthetic(4000, 0.4, 0);
  peak_normalize(s);
  const Mixture mix = mix_linear(s, 6, 0);
  const auto t0 = std::chrono::steady_clock::now();
  const FastIcaSeparation sep = fastica_separate(mix.X.data, 6, 0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double rho = max_correlation(s.data, sep.sources).rho_max;
  MESSAGE("FastICA linear rho_max " << rho << " in " << secs << " s");
  CHECK(rho >= 0.99);
  CHECK(secs < 10.0);
}

TEST_CASE("already separated sources") {
  // Every sign pattern of each base draw is present, so all odd cross
  // moments vanish in-sample and the coordinate axes are exact fixed points.
  Rng rng(25);
  const Tensor2 base = uniform_sources(3, 500, rng);
  Tensor2 S(3, 500 * 8);
  for (Index t = 0; t < 500; ++t)
    for (Index k = 0; k < 8; ++k)
      for (Index i = 0; i < 3; ++i)
        S(i, t * 8 + k) = ((k >> i) & 1 ? -1.0 : 1.0) * base(i, t) * (1.0 + 0.5 * i);
  const FastIcaSeparation sep = fastica_separate(S, 3, 0);
  CHECK(max_correlation(S, sep.sources).rho_max == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("components are stable across seeds") {
  Rng rng(26);
  const Tensor2 S = uniform_sources(3, 4000, rng);
  const Tensor2 X = (random_tensor(3, 3, rng) + 2.0 * Eigen::MatrixXd::Identity(3, 3)) * S;
  const FastIcaSeparation a = fastica_separate(X, 3, 1);
  const FastIcaSeparation b = fastica_separate(X, 3, 99);
  const CorrelationReport r = max_correlation(a.sources, b.sources);
  for (double p : r.per_pair) CHECK(p >= 0.99);
  // Same seed, same result.
  const FastIcaSeparation c = fastica_separate(X, 3, 1);
  CHECK(c.unmixing == a.unmixing);
}
