#include "advica/fastica.hpp"

#include "advica/errors.hpp"
#include "advica/signals.hpp"

#include <cmath>
#include <fstream>

namespace advica {

Whitened whiten(const Tensor2& X, Index n_components) {
  const Index p = X.rows();
  const Index t = X.cols();
  if (n_components < 1 || n_components > p) {
    throw ConfigError("n_components must lie in [1, " + std::to_string(p) + "]");
  }
  if (t < 2) throw ConfigError("whitening needs at least 2 samples");

  Whitened out;
  out.model.n_components = n_components;
  out.model.mean = X.rowwise().mean();
  const Eigen::MatrixXd centered = X.colwise() - out.model.mean;
  const Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(t);

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
  const double largest = values(p - 1);
  const double floor = std::max(largest, 1.0) * 1e-10;
  Index rank = 0;
  for (Index i = 0; i < p; ++i) rank += values(i) > floor ? 1 : 0;
  if (rank < n_components) {
    throw NumericalError("covariance is rank deficient: " + std::to_string(n_components - rank) +
                         " of the requested " + std::to_string(n_components) +
                         " dimensions have no variance");
  }
  Eigen::MatrixXd w(n_components, p);
  for (Index k = 0; k < n_components; ++k) {
    const Index src = p - 1 - k;
    w.row(k) = eig.eigenvectors().col(src).transpose() / std::sqrt(values(src));
  }
  out.model.whitening_matrix = w;
  out.data = w * centered;
  return out;
}

bool FastIcaResult::all_converged() const {
  for (bool c : converged)
    if (!c) return false;
  return true;
}

FastIcaResult fastica(const Tensor2& Z_white, Index n_components, std::uint64_t seed, int max_iter,
                      double tol) {
  const Index dim = Z_white.rows();
  const Index t = Z_white.cols();
  if (n_components < 1 || n_components > dim) throw ConfigError("bad n_components for fastica");
  if (max_iter < 1) throw ConfigError("max_iter must be positive");

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  FastIcaResult res;
  res.W = Eigen::MatrixXd::Zero(n_components, dim);
  const Eigen::MatrixXd Z = Z_white;
  const double inv_t = 1.0 / static_cast<double>(t);

  for (Index c = 0; c < n_components; ++c) {
    Eigen::VectorXd w(dim);
    for (Index i = 0; i < dim; ++i) w(i) = normal(rng);
    auto deflate = [&](Eigen::VectorXd& v) {
      for (Index j = 0; j < c; ++j) v -= v.dot(res.W.row(j).transpose()) * res.W.row(j).transpose();
      v.normalize();
    };
    deflate(w);
    bool converged = false;
    int it = 0;
    while (it < max_iter) {
      ++it;
      const Eigen::RowVectorXd proj = w.transpose() * Z;
      const Eigen::RowVectorXd g = proj.array().tanh().matrix();
      const double g_prime_mean = (1.0 - g.array().square()).mean();
      Eigen::VectorXd w_new = (Z * g.transpose()) * inv_t - g_prime_mean * w;
      deflate(w_new);
      const double lim = std::abs(std::abs(w_new.dot(w)) - 1.0);
      w = w_new;
      if (lim < tol) {
        converged = true;
        break;
      }
    }
    res.W.row(c) = w.transpose();
    res.converged.push_back(converged);
    res.iterations.push_back(it);
  }
  return res;
}

FastIcaSeparation fastica_separate(const Tensor2& X, Index n_components, std::uint64_t seed,
                                   int max_iter, double tol) {
  FastIcaSeparation out;
  Whitened wh = whiten(X, n_components);
  out.ica = fastica(wh.data, n_components, seed, max_iter, tol);
  out.unmixing = out.ica.W * wh.model.whitening_matrix;
  out.sources = out.ica.W * wh.data;
  out.whitening = std::move(wh.model);
  return out;
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IngestionError("cannot write " + path.string());
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

}  // namespace advica
