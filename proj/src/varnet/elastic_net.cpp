#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "volnet/errors.hpp"
#include "volnet/varnet.hpp"

namespace volnet::varnet {

namespace {

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

void check_penalty(double alpha, double lambda) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ValidationError(fmt::format("alpha must be in [0, 1], got {}", alpha));
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError(fmt::format("lambda must be finite and >= 0, got {}", lambda));
  }
}

// Objective in centered coordinates given the current residual.
double centered_objective(const Eigen::VectorXd& residual, const Eigen::VectorXd& beta,
                          double alpha, double lambda) {
  const double n = static_cast<double>(residual.size());
  return residual.squaredNorm() / (2.0 * n) +
         lambda * (alpha * beta.lpNorm<1>() + 0.5 * (1.0 - alpha) * beta.squaredNorm());
}

}  // namespace

double elastic_net_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const ElasticNetFit& fit) {
  const Eigen::VectorXd residual =
      y - x * fit.coefficients - Eigen::VectorXd::Constant(y.size(), fit.intercept);
  return centered_objective(residual, fit.coefficients, fit.alpha, fit.lambda);
}

namespace {

// Centered cross-products of one regression problem. Coordinate descent runs
// on these, so a path of fits over one design costs O(p) per update instead
// of O(n).
struct GramProblem {
  Eigen::RowVectorXd x_mean;
  double y_mean = 0.0;
  double n = 0.0;
  double yy = 0.0;        // yc'yc / n
  Eigen::MatrixXd gram;   // Xc'Xc / n
  Eigen::VectorXd cross;  // Xc'yc / n
};

GramProblem make_problem(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  GramProblem prob;
  prob.n = static_cast<double>(x.rows());
  prob.x_mean = x.colwise().mean();
  prob.y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - prob.x_mean;
  const Eigen::VectorXd yc = y.array() - prob.y_mean;
  prob.gram.noalias() = xc.transpose() * xc / prob.n;
  prob.cross.noalias() = xc.transpose() * yc / prob.n;
  prob.yy = yc.squaredNorm() / prob.n;
  return prob;
}

double gram_objective(const GramProblem& prob, const Eigen::VectorXd& beta, double alpha, double lambda) {
  const double loss = 0.5 * (prob.yy - 2.0 * prob.cross.dot(beta) + beta.dot(prob.gram * beta));
  return std::max(loss, 0.0) + lambda * (alpha * beta.lpNorm<1>() + 0.5 * (1.0 - alpha) * beta.squaredNorm());
}

ElasticNetFit solve(const GramProblem& prob, double alpha, double lambda, const ElasticNetOptions& options,
                    const Eigen::VectorXd* warm_start) {
  const Eigen::Index p = prob.gram.cols();
  ElasticNetFit fit;
  fit.alpha = alpha;
  fit.lambda = lambda;
  fit.coefficients = Eigen::VectorXd::Zero(p);
  if (warm_start && warm_start->size() == p) fit.coefficients = *warm_start;
  // gradient of the loss part: Xc'(yc - Xc b) / n
  Eigen::VectorXd grad = prob.cross - prob.gram * fit.coefficients;

  const double l1 = lambda * alpha;
  const double l2 = lambda * (1.0 - alpha);

  auto update = [&](Eigen::Index j) {
    const double old = fit.coefficients(j);
    const double col_sq = prob.gram(j, j);
    const double denom = col_sq + l2;
    double fresh = 0.0;
    if (denom > 0.0) fresh = soft_threshold(grad(j) + col_sq * old, l1) / denom;
    const double change = fresh - old;
    if (change != 0.0) {
      grad.noalias() -= change * prob.gram.col(j);
      fit.coefficients(j) = fresh;
    }
    return std::abs(change);
  };
  auto record = [&] {
    if (options.record_objective) {
      fit.objective_trace.push_back(gram_objective(prob, fit.coefficients, alpha, lambda));
    }
  };

  // Full sweeps alternate with sweeps restricted to the active set until a
  // full sweep changes nothing beyond tolerance.
  std::vector<Eigen::Index> active;
  while (fit.n_iterations < options.max_sweeps) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) max_change = std::max(max_change, update(j));
    ++fit.n_iterations;
    record();
    if (max_change < options.tolerance) {
      fit.converged = true;
      break;
    }
    active.clear();
    for (Eigen::Index j = 0; j < p; ++j) {
      if (fit.coefficients(j) != 0.0) active.push_back(j);
    }
    while (fit.n_iterations < options.max_sweeps) {
      double active_change = 0.0;
      for (auto j : active) active_change = std::max(active_change, update(j));
      ++fit.n_iterations;
      record();
      if (active_change < options.tolerance) break;
    }
  }
  fit.intercept = prob.y_mean - prob.x_mean.dot(fit.coefficients);
  return fit;
}

}  // namespace

ElasticNetFit elastic_net_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                              double lambda, const ElasticNetOptions& options,
                              const Eigen::VectorXd* warm_start) {
  check_penalty(alpha, lambda);
  if (y.size() != x.rows()) throw ValidationError("elastic net: X and y row counts differ");
  if (x.rows() == 0) throw ValidationError("elastic net: no observations");
  return solve(make_problem(x, y), alpha, lambda, options, warm_start);
}

double lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha) {
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double n = static_cast<double>(x.rows());
  const double grad = x.cols() > 0 ? (xc.transpose() * yc).cwiseAbs().maxCoeff() / n : 0.0;
  return grad / std::max(alpha, 1e-3);
}

std::vector<double> lambda_grid(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                                std::size_t count, double ratio) {
  if (count == 0) throw ValidationError("lambda grid needs at least one value");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("lambda grid ratio must be in (0, 1)");
  double top = lambda_max(x, y, alpha);
  // A constant response has no penalty scale; any positive grid selects the null model.
  if (!(top > 0.0) || !std::isfinite(top)) top = 1.0;
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = top;
    return grid;
  }
  const double log_top = std::log(top);
  const double step = std::log(ratio) / static_cast<double>(count - 1);
  for (std::size_t k = 0; k < count; ++k) grid[k] = std::exp(log_top + step * static_cast<double>(k));
  grid[0] = top;
  return grid;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> contiguous_folds(Eigen::Index rows,
                                                                    std::size_t folds) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  const auto k = static_cast<Eigen::Index>(folds);
  for (Eigen::Index f = 0; f < k; ++f) out.emplace_back(f * rows / k, (f + 1) * rows / k);
  return out;
}

CrossValidation cross_validate_lambda(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                      double alpha, std::size_t folds,
                                      const std::vector<double>& grid,
                                      const ElasticNetOptions& options) {
  const Eigen::Index n = x.rows();
  if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
  if (n < static_cast<Eigen::Index>(folds)) {
    throw ValidationError(fmt::format("cross-validation: {} rows cannot form {} folds", n, folds));
  }
  if (grid.empty()) throw ValidationError("cross-validation: empty lambda grid");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] < grid[k - 1])) throw ValidationError("lambda grid must be strictly descending");
  }

  CrossValidation cv;
  cv.grid = grid;
  cv.mean_error.assign(grid.size(), 0.0);
  if ((y.array() - y.mean()).square().sum() == 0.0) {
    cv.degenerate_response = true;
    cv.index = 0;
    cv.lambda = grid.front();
    return cv;
  }

  for (const auto& [begin, end] : contiguous_folds(n, folds)) {
    const Eigen::Index held = end - begin;
    const Eigen::Index train = n - held;
    Eigen::MatrixXd x_train(train, x.cols());
    Eigen::VectorXd y_train(train);
    x_train << x.topRows(begin), x.bottomRows(n - end);
    y_train << y.head(begin), y.tail(n - end);
    const auto x_test = x.middleRows(begin, held);
    const auto y_test = y.segment(begin, held);

    const auto prob = make_problem(x_train, y_train);
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(x.cols());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      check_penalty(alpha, grid[k]);
      auto fit = solve(prob, alpha, grid[k], options, &warm);
      warm = fit.coefficients;
      const Eigen::VectorXd pred =
          (x_test * fit.coefficients).array() + fit.intercept;
      cv.mean_error[k] += (y_test - pred).squaredNorm();
    }
  }
  for (auto& e : cv.mean_error) e /= static_cast<double>(n);

  cv.index = 0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (cv.mean_error[k] < cv.mean_error[cv.index]) cv.index = k;
  }
  cv.lambda = grid[cv.index];
  return cv;
}

}  // namespace volnet::varnet
