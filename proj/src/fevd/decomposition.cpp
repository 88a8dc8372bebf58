#include <algorithm>

#include <fmt/format.h>

#include "volnet/errors.hpp"
#include "volnet/fevd.hpp"

namespace volnet::fevd {

ImpulseResponseSet impulse_responses(const std::vector<Eigen::MatrixXd>& phi, std::size_t horizon) {
  if (horizon < 1) throw ValidationError("forecast horizon must be at least 1");
  if (phi.empty()) throw ValidationError("impulse responses need at least one lag matrix");
  const Eigen::Index n = phi.front().rows();
  ImpulseResponseSet irf;
  irf.matrices.reserve(horizon);
  irf.matrices.push_back(Eigen::MatrixXd::Identity(n, n));
  for (std::size_t h = 1; h < horizon; ++h) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t lag = 1; lag <= std::min(h, phi.size()); ++lag) {
      a.noalias() += phi[lag - 1] * irf.matrices[h - lag];
    }
    irf.matrices.push_back(std::move(a));
  }
  return irf;
}

ImpulseResponseSet impulse_responses(const varnet::VarModel& model, std::size_t horizon) {
  return impulse_responses(model.phi, horizon);
}

Eigen::MatrixXd gfevd(const ImpulseResponseSet& irf, const Eigen::MatrixXd& sigma) {
  const Eigen::Index n = sigma.rows();
  if (sigma.cols() != n) throw ValidationError("covariance matrix must be square");
  if (irf.matrices.empty()) throw ValidationError("impulse response set is empty");
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(sigma(j, j) > 0.0)) {
      throw DegenerateFirmError(static_cast<std::size_t>(j),
                                fmt::format("firm {} has non-positive shock variance {}", j, sigma(j, j)));
    }
  }
  Eigen::MatrixXd numerator = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd denominator = Eigen::VectorXd::Zero(n);
  for (const auto& a : irf.matrices) {
    const Eigen::MatrixXd a_sigma = a * sigma;
    numerator += a_sigma.array().square().matrix();
    denominator += (a_sigma.array() * a.array()).rowwise().sum().matrix();
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(denominator(i) > 0.0)) {
      throw DegenerateFirmError(static_cast<std::size_t>(i),
                                fmt::format("firm {} has zero total forecast-error variance", i));
    }
  }
  Eigen::MatrixXd theta = numerator;
  for (Eigen::Index j = 0; j < n; ++j) theta.col(j) /= sigma(j, j);
  for (Eigen::Index i = 0; i < n; ++i) theta.row(i) /= denominator(i);
  return theta;
}

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& theta) {
  Eigen::MatrixXd d(theta.rows(), theta.cols());
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    const double row_sum = theta.row(i).sum();
    if (!(row_sum > 0.0)) {
      throw NumericalError(fmt::format("row {} of the decomposition has non-positive sum", i));
    }
    d.row(i) = 100.0 * theta.row(i) / row_sum;
  }
  return d;
}

}  // namespace volnet::fevd
