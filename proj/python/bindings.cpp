#include "advica/errors.hpp"
#include "advica/harness.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace advica;

namespace {

RunConfig config_from(const std::vector<std::string>& overrides) {
  RunConfig cfg;
  for (const auto& kv : overrides) apply_override(cfg, kv);
  cfg.search.validate();
  return cfg;
}

py::dict correlation_dict(const CorrelationReport& r) {
  py::dict d;
  d["rho_max"] = r.rho_max;
  d["assignment"] = r.assignment;
  d["per_pair"] = r.per_pair;
  d["corr_matrix"] = r.corr_matrix;
  d["degenerate"] = r.degenerate;
  return d;
}

py::dict train(const std::vector<std::string>& overrides, const std::string& out_dir) {
  const RunConfig cfg = config_from(overrides);
  TrialResult r;
  {
    py::gil_scoped_release release;
    const Task task = resolve_task(cfg.task);
    const TrainConfig tc = trial_config(cfg, task);
    tc.validate();
    r = run_trial(task, tc, cfg.task.heldout, out_dir);
  }
  Eigen::MatrixXd log(static_cast<Index>(r.log.size()), 5);
  for (std::size_t i = 0; i < r.log.size(); ++i) {
    const auto& row = r.log[i];
    log.row(static_cast<Index>(i)) << static_cast<double>(row.iteration), row.loss.J_disc, row.loss.R,
        row.loss.total, row.rho_max.value_or(std::numeric_limits<double>::quiet_NaN());
  }
  py::dict d;
  d["final_rho"] = r.final_rho;
  d["final_rho_heldout"] = r.final_rho_heldout;
  d["heldout_loss"] = r.heldout_loss;
  d["diverged"] = r.diverged;
  d["divergence_reason"] = r.divergence_reason;
  d["log"] = log;  // iteration, J_disc, R, total, rho_max
  return d;
}

}  // namespace

PYBIND11_MODULE(_advica, m) {
  m.doc() = "Adversarial non-linear ICA";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IngestionError>(m, "IngestionError", PyExc_IOError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "gen_synthetic",
      [](Index n_samples, double t_max, std::uint64_t seed, bool normalize) {
        SignalMatrix s = gen_synthetic(n_samples, t_max, seed);
        if (normalize) peak_normalize(s);
        return Eigen::MatrixXd(s.data);
      },
      py::arg("n_samples") = 4000, py::arg("t_max") = 0.4, py::arg("seed") = 0,
      py::arg("normalize") = false, "Six synthetic sources, one per row.");

  m.def(
      "build_task",
      [](const std::vector<std::string>& overrides) {
        const Task t = build_task(config_from(overrides).task);
        return py::make_tuple(Eigen::MatrixXd(t.sources.data), Eigen::MatrixXd(t.mixture.X.data));
      },
      py::arg("overrides") = std::vector<std::string>{},
      "(sources, mixtures) for the task described by key=value overrides.");

  m.def(
      "max_correlation",
      [](const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred) {
        return correlation_dict(max_correlation(Tensor2(truth), Tensor2(pred)));
      },
      py::arg("truth"), py::arg("pred"), "Signals as rows.");

  m.def(
      "fastica",
      [](const Eigen::MatrixXd& X, Index n_components, std::uint64_t seed) {
        const FastIcaSeparation s = fastica_separate(Tensor2(X), n_components, seed);
        return py::make_tuple(Eigen::MatrixXd(s.sources), s.unmixing, s.ica.all_converged());
      },
      py::arg("X"), py::arg("n_components"), py::arg("seed") = 0,
      "(sources, unmixing, converged) for signals-as-rows X.");

  m.def("train", &train, py::arg("overrides") = std::vector<std::string>{}, py::arg("out_dir") = "",
        "Train one model; returns the run summary and its loss log.");

  m.def("format_score", &format_score, py::arg("mean"), py::arg("std"));
  m.def("config_keys", &accepted_config_keys);
}
