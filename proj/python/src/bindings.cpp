// Python bindings for linfsc. Arrays are passed as numpy float64 and come
// back as numpy; results are plain dicts.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "linfsc/effects.hpp"
#include "linfsc/error.hpp"
#include "linfsc/penalty.hpp"
#include "linfsc/qp.hpp"
#include "linfsc/sim.hpp"
#include "linfsc/tune.hpp"

namespace py = pybind11;
using namespace linfsc;

namespace {

py::dict fit_to_dict(const WeightFit& fit) {
  py::dict d;
  d["weights"] = fit.omega_hat;
  d["mu"] = fit.mu_hat;
  d["penalty"] = std::string(to_string(fit.penalty.kind));
  d["lambda"] = fit.penalty.lambda;
  d["alpha"] = fit.penalty.alpha;
  d["pre_rmse"] = fit.pre_rmse;
  d["short_pre_period"] = fit.short_pre_period;
  if (fit.solver_report) {
    d["status"] = std::string(to_string(fit.solver_report->status));
    d["objective"] = fit.solver_report->objective;
  }
  return d;
}

WeightFit weights_from(const Vector& weights, double mu) {
  WeightFit f;
  f.omega_hat = weights;
  f.mu_hat = mu;
  return f;
}

}  // namespace

PYBIND11_MODULE(_linfsc, m) {
  m.doc() = "Penalized synthetic control estimators";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&]() { return py::exception<Error>(m, "LinfscError"); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string msg = std::string(to_string(e.code())) + ": " + e.what();
      py::set_error(error_type.get_stored(), msg.c_str());
    }
  });

  m.def(
      "fit_weights",
      [](const Matrix& outcomes, Index t0, const std::string& penalty, double lam, double alpha,
         bool fit_intercept) {
        PanelData panel = validate_panel(outcomes, t0);
        PenaltySpec spec = PenaltySpec::make(parse_penalty_kind(penalty), lam, alpha, fit_intercept);
        WeightFit fit;
        {
          py::gil_scoped_release release;
          fit = fit_weights(panel, spec);
        }
        return fit_to_dict(fit);
      },
      py::arg("outcomes"), py::arg("t0"), py::arg("penalty") = "linf", py::arg("lam") = 0.0,
      py::arg("alpha") = 1.0, py::arg("fit_intercept") = true,
      "Fit weights on a T x (1 + J) panel, treated unit in column 0.");

  m.def(
      "cross_validate",
      [](const Matrix& outcomes, Index t0, const std::string& penalty, int n_lambda, int n_alpha,
         int k, const std::string& mode, std::uint64_t seed, int threads) {
        PanelData panel = validate_panel(outcomes, t0);
        const PenaltyKind kind = parse_penalty_kind(penalty);
        const CenteredDesign design = center_design(panel, true);
        const TuningGrid grid =
            TuningGrid::make(lambda_grid(design, n_lambda).values, alpha_grid(n_alpha));
        CvOptions options;
        options.k = k;
        options.mode = parse_cv_mode(mode);
        options.seed = seed;
        options.threads = threads;
        CvResult cv;
        {
          py::gil_scoped_release release;
          cv = cross_validate(panel, kind, grid, options);
        }
        py::dict d;
        d["lambdas"] = cv.lambdas;
        d["alphas"] = cv.alphas;
        d["rmse"] = cv.rmse_surface;
        d["best_lambda"] = cv.best_lambda;
        d["best_alpha"] = cv.best_alpha;
        d["folds"] = cv.fold_assignments;
        return d;
      },
      py::arg("outcomes"), py::arg("t0"), py::arg("penalty") = "linf", py::arg("n_lambda") = 100,
      py::arg("n_alpha") = 11, py::arg("k") = 10, py::arg("mode") = "time", py::arg("seed") = 0,
      py::arg("threads") = 1);

  m.def(
      "effects",
      [](const Matrix& outcomes, Index t0, const Vector& weights, double mu) {
        PanelData panel = validate_panel(outcomes, t0);
        EffectSeries e = dynamic_effects(panel, weights_from(weights, mu));
        py::dict d;
        d["counterfactual"] = e.counterfactual;
        d["effects"] = e.dynamic_effects;
        d["ate"] = e.ate;
        d["horizon_ates"] = e.horizon_ates;
        return d;
      },
      py::arg("outcomes"), py::arg("t0"), py::arg("weights"), py::arg("mu") = 0.0);

  m.def(
      "solve_qp",
      [](const Matrix& Q, const Vector& q, const Matrix& G, const Vector& h,
         std::optional<Matrix> A, std::optional<Vector> b) {
        QpProblem problem(Q, q, G, h, A.value_or(Matrix(0, q.size())), b.value_or(Vector(0)));
        QpSolution s = solve_qp(problem);
        py::dict d;
        d["x"] = s.x;
        d["objective"] = s.objective;
        d["status"] = std::string(to_string(s.status));
        d["gap_bound"] = s.gap_bound;
        d["kkt_residual"] = kkt_residual(problem, s);
        return d;
      },
      py::arg("Q"), py::arg("q"), py::arg("G"), py::arg("h"), py::arg("A") = py::none(),
      py::arg("b") = py::none(), "minimize 1/2 x'Qx + q'x subject to Gx <= h, Ax = b.");

  m.def(
      "generate_panel",
      [](int dgp, const std::string& error, Index j, Index t0, Index t1, double delta,
         std::uint64_t seed) {
        DgpSpec spec;
        spec.dgp = parse_dgp(dgp);
        spec.error.kind = parse_error_kind(error);
        spec.j = j;
        spec.t0 = t0;
        spec.t1 = t1;
        spec.delta = delta;
        spec.seed = seed;
        SimPanel s = gen_panel(spec);
        py::dict d;
        d["outcomes"] = s.panel.outcomes();
        d["true_weights"] = s.true_weights;
        d["t0"] = s.panel.t0();
        return d;
      },
      py::arg("dgp") = 1, py::arg("error") = "iid", py::arg("j") = 30, py::arg("t0") = 100,
      py::arg("t1") = 10, py::arg("delta") = 3.0, py::arg("seed") = 0);

  m.def(
      "simulate",
      [](int dgp, const std::string& error, int b, std::vector<Index> horizons,
         std::vector<std::string> methods, Index j, std::uint64_t seed, int n_lambda,
         int n_alpha, int k, int threads) {
        ExperimentConfig c;
        c.spec.dgp = parse_dgp(dgp);
        c.spec.error.kind = parse_error_kind(error);
        c.spec.j = j;
        c.spec.seed = seed;
        c.b = b;
        c.horizons = std::move(horizons);
        c.methods.clear();
        for (const auto& name : methods) c.methods.push_back(parse_method(name));
        c.tuning = TuningConfig{n_lambda, n_alpha, k, 1e-4, CvMode::TimeFolds};
        c.threads = threads;
        RmseTable table;
        {
          py::gil_scoped_release release;
          table = run_experiment(c);
        }
        py::list rows;
        for (const auto& r : table.rows) {
          py::dict row;
          row["method"] = std::string(to_string(r.method));
          row["horizon"] = r.horizon;
          row["rmse"] = r.rmse;
          rows.append(row);
        }
        return rows;
      },
      py::arg("dgp") = 1, py::arg("error") = "iid", py::arg("b") = 200,
      py::arg("horizons") = std::vector<Index>{1, 4, 7, 10},
      py::arg("methods") = std::vector<std::string>{"oracle", "sc", "lasso", "linf"},
      py::arg("j") = 30, py::arg("seed") = 0, py::arg("n_lambda") = 20, py::arg("n_alpha") = 5,
      py::arg("k") = 5, py::arg("threads") = 0);
}
