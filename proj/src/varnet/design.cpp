#include <cmath>

#include <fmt/format.h>

#include "volnet/errors.hpp"
#include "volnet/varnet.hpp"

namespace volnet::varnet {

LagDesign build_lag_design(const Eigen::MatrixXd& window, std::size_t lags) {
  const Eigen::Index t_total = window.rows();
  const Eigen::Index n = window.cols();
  if (lags < 1) throw ValidationError("lag order must be at least 1");
  if (static_cast<Eigen::Index>(lags) >= t_total) {
    throw ValidationError(
        fmt::format("window of {} rows is too short for {} lags", t_total, lags));
  }
  const auto d = static_cast<Eigen::Index>(lags);
  const Eigen::Index t_eff = t_total - d;

  LagDesign design;
  design.lags = lags;
  design.response = window.bottomRows(t_eff);
  design.regressors.resize(t_eff, n * d);
  for (Eigen::Index lag = 1; lag <= d; ++lag) {
    design.regressors.middleCols((lag - 1) * n, n) = window.middleRows(d - lag, t_eff);
  }

  const Eigen::Index p = n * d;
  design.column_means = design.regressors.colwise().mean().transpose();
  design.column_scales.resize(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    double ss = (design.regressors.col(k).array() - design.column_means(k)).square().sum();
    double sd = t_eff > 1 ? std::sqrt(ss / static_cast<double>(t_eff - 1)) : 0.0;
    if (!(sd > 0.0)) {
      design.constant_columns.push_back(static_cast<std::size_t>(k));
      sd = 1.0;
    }
    design.column_scales(k) = sd;
  }
  return design;
}

Eigen::MatrixXd LagDesign::standardized() const {
  return ((regressors.rowwise() - column_means.transpose()).array().rowwise() /
          column_scales.transpose().array())
      .matrix();
}

}  // namespace volnet::varnet
