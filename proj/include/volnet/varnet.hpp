#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace volnet::varnet {

/// Lagged regression design for a VAR(d) on one window.
///
/// Regressor columns are ordered lag-major: column (lag - 1) * N + j holds
/// firm j lagged by `lag` days.
struct LagDesign {
  Eigen::MatrixXd response;    // T_eff x N, rows are t = d..T-1
  Eigen::MatrixXd regressors;  // T_eff x (N * d)
  std::size_t lags = 0;
  Eigen::VectorXd column_means;
  Eigen::VectorXd column_scales;  // sample standard deviations, 1 for constant columns
  std::vector<std::size_t> constant_columns;

  Eigen::Index rows() const { return response.rows(); }
  Eigen::Index num_firms() const { return response.cols(); }

  /// Regressors centered and divided by their scales.
  Eigen::MatrixXd standardized() const;
};

/// Throws ValidationError unless 1 <= lags < window.rows().
LagDesign build_lag_design(const Eigen::MatrixXd& window, std::size_t lags);

struct ElasticNetOptions {
  double tolerance = 1e-7;  // on the max absolute coefficient change per sweep
  std::size_t max_sweeps = 100000;
  /// Record the objective after every full sweep (diagnostics and tests).
  bool record_objective = false;
};

struct ElasticNetFit {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;
  std::size_t n_iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

/// Elastic-net objective  (1/2n)||y - b0 - X b||^2 + lambda (alpha ||b||_1 + (1-alpha)/2 ||b||^2),
/// with the intercept b0 unpenalized.
double elastic_net_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const ElasticNetFit& fit);

/// Cyclic coordinate descent with soft-thresholding. X columns are expected to
/// be standardized; the intercept is handled by centering X and y internally
/// so for centered X it equals mean(y). `warm_start`, when given, seeds the
/// coefficients. Non-convergence is reported through `converged`, not thrown.
ElasticNetFit elastic_net_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                              double lambda, const ElasticNetOptions& options = {},
                              const Eigen::VectorXd* warm_start = nullptr);

/// Smallest lambda giving an all-zero solution. For alpha below 1e-3 the
/// value at alpha = 1e-3 is used so the ridge end still has a finite grid.
double lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha);

/// `count` log-spaced values from lambda_max down to ratio * lambda_max.
std::vector<double> lambda_grid(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                                std::size_t count = 100, double ratio = 1e-4);

struct CrossValidation {
  double lambda = 0.0;
  std::size_t index = 0;            // into the grid
  std::vector<double> grid;
  std::vector<double> mean_error;   // mean out-of-fold squared error per lambda
  bool degenerate_response = false; // y had zero variance
};

/// K-fold cross-validation over a descending lambda grid. Folds are
/// contiguous row blocks; each fold warm-starts along the grid. Ties prefer
/// the larger lambda.
CrossValidation cross_validate_lambda(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                      double alpha, std::size_t folds,
                                      const std::vector<double>& grid,
                                      const ElasticNetOptions& options = {});

/// Row ranges [begin, end) of the contiguous folds.
std::vector<std::pair<Eigen::Index, Eigen::Index>> contiguous_folds(Eigen::Index rows,
                                                                    std::size_t folds);

struct EquationSummary {
  double lambda = 0.0;
  bool converged = true;
  std::vector<std::size_t> nonzero_per_lag;
};

struct VarModel {
  std::vector<Eigen::MatrixXd> phi;  // phi[l](i, j): effect of firm j at lag l+1 on firm i
  Eigen::VectorXd intercepts;
  Eigen::MatrixXd sigma;             // residual covariance, 1/T_eff scaling
  double alpha = 0.5;
  std::vector<EquationSummary> equations;

  std::size_t lags() const { return phi.size(); }
  Eigen::Index num_firms() const { return sigma.rows(); }
};

struct VarFitOptions {
  double alpha = 0.5;
  std::size_t folds = 10;
  std::size_t grid_size = 100;
  double grid_ratio = 1e-4;
  /// Skip cross-validation and use this penalty for every equation.
  std::optional<double> fixed_lambda;
  ElasticNetOptions solver;
};

/// Fits a VAR(lags) on a T x N window, one cross-validated elastic-net
/// regression per firm. Coefficients are returned on the original scale.
VarModel fit_var(const Eigen::MatrixXd& window, std::size_t lags, const VarFitOptions& options = {});

/// Debug dump: lag,response_firm,regressor_firm,value for every nonzero entry.
std::string format_coefficients(const VarModel& model, const std::vector<std::string>& firms);

}  // namespace volnet::varnet
