#include <fmt/format.h>

#include "volnet/csv.hpp"
#include "volnet/errors.hpp"
#include "volnet/varnet.hpp"

namespace volnet::varnet {

VarModel fit_var(const Eigen::MatrixXd& window, std::size_t lags, const VarFitOptions& options) {
  if (!(options.alpha >= 0.0 && options.alpha <= 1.0)) {
    throw ValidationError(fmt::format("alpha must be in [0, 1], got {}", options.alpha));
  }
  if (!window.allFinite()) throw ValidationError("VAR window contains non-finite values");
  const LagDesign design = build_lag_design(window, lags);
  const Eigen::MatrixXd xs = design.standardized();
  const Eigen::Index n = design.num_firms();
  const Eigen::Index p = design.regressors.cols();
  const Eigen::Index t_eff = design.rows();
  const auto d = static_cast<Eigen::Index>(lags);

  VarModel model;
  model.alpha = options.alpha;
  model.phi.assign(lags, Eigen::MatrixXd::Zero(n, n));
  model.intercepts = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd coefficients(p, n);  // original scale, one column per equation

  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd y = design.response.col(i);
    ElasticNetFit fit;
    if (options.fixed_lambda) {
      fit = elastic_net_fit(xs, y, options.alpha, *options.fixed_lambda, options.solver);
    } else {
      const auto grid = lambda_grid(xs, y, options.alpha, options.grid_size, options.grid_ratio);
      const auto cv = cross_validate_lambda(xs, y, options.alpha, options.folds, grid, options.solver);
      // Refit along the same warm-started path the folds used.
      Eigen::VectorXd warm = Eigen::VectorXd::Zero(p);
      for (std::size_t k = 0; k <= cv.index; ++k) {
        fit = elastic_net_fit(xs, y, options.alpha, grid[k], options.solver, &warm);
        warm = fit.coefficients;
      }
    }

    const Eigen::VectorXd original = fit.coefficients.cwiseQuotient(design.column_scales);
    coefficients.col(i) = original;
    model.intercepts(i) = fit.intercept - original.dot(design.column_means);

    EquationSummary summary;
    summary.lambda = fit.lambda;
    summary.converged = fit.converged;
    summary.nonzero_per_lag.assign(lags, 0);
    for (Eigen::Index lag = 0; lag < d; ++lag) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double value = original(lag * n + j);
        model.phi[static_cast<std::size_t>(lag)](i, j) = value;
        if (value != 0.0) ++summary.nonzero_per_lag[static_cast<std::size_t>(lag)];
      }
    }
    model.equations.push_back(std::move(summary));
  }

  Eigen::MatrixXd residuals = design.response - design.regressors * coefficients;
  residuals.rowwise() -= model.intercepts.transpose();
  Eigen::MatrixXd sigma = residuals.transpose() * residuals / static_cast<double>(t_eff);
  model.sigma = 0.5 * (sigma + sigma.transpose());
  return model;
}

std::string format_coefficients(const VarModel& model, const std::vector<std::string>& firms) {
  std::string out = "lag,response_firm,regressor_firm,value\n";
  for (std::size_t lag = 0; lag < model.phi.size(); ++lag) {
    const auto& phi = model.phi[lag];
    for (Eigen::Index i = 0; i < phi.rows(); ++i) {
      for (Eigen::Index j = 0; j < phi.cols(); ++j) {
        if (phi(i, j) == 0.0) continue;
        out += fmt::format("{},{},{},{}\n", lag + 1, csv::escape(firms.at(static_cast<std::size_t>(i))),
                           csv::escape(firms.at(static_cast<std::size_t>(j))),
                           csv::format_double(phi(i, j)));
      }
    }
  }
  return out;
}

}  // namespace volnet::varnet
