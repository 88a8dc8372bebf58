#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "volnet/date.hpp"
#include "volnet/ingest.hpp"

namespace testing_support {

inline double normal(std::mt19937_64& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Spectral radius of the VAR companion matrix.
inline double companion_radius(const std::vector<Eigen::MatrixXd>& phi) {
  const auto n = phi.front().rows();
  const auto d = static_cast<Eigen::Index>(phi.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n * d, n * d);
  for (Eigen::Index l = 0; l < d; ++l) c.block(0, l * n, n, n) = phi[static_cast<std::size_t>(l)];
  if (d > 1) c.block(n, 0, n * (d - 1), n * (d - 1)).setIdentity();
  return Eigen::EigenSolver<Eigen::MatrixXd>(c, false).eigenvalues().cwiseAbs().maxCoeff();
}

/// Random VAR(d) coefficients rescaled until the companion radius is below 0.9.
inline std::vector<Eigen::MatrixXd> random_stable_phi(std::mt19937_64& rng, Eigen::Index n, std::size_t d) {
  std::vector<Eigen::MatrixXd> phi(d, Eigen::MatrixXd(n, n));
  for (auto& m : phi) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) m(i, j) = uniform(rng, -0.5, 0.5);
    }
  }
  double r = companion_radius(phi);
  while (r >= 0.9) {
    for (auto& m : phi) m *= 0.8;
    r = companion_radius(phi);
  }
  return phi;
}

/// Random symmetric positive definite covariance.
inline Eigen::MatrixXd random_covariance(std::mt19937_64& rng, Eigen::Index n) {
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = normal(rng);
  }
  return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

/// Simulates y_t = c + sum_l phi_l y_{t-l} + L e_t after a burn-in.
inline Eigen::MatrixXd simulate_var(std::mt19937_64& rng, const std::vector<Eigen::MatrixXd>& phi,
                                    const Eigen::VectorXd& intercept, const Eigen::MatrixXd& sigma,
                                    Eigen::Index rows, Eigen::Index burn_in = 200) {
  const auto n = intercept.size();
  const Eigen::MatrixXd chol = sigma.llt().matrixL();
  const auto total = rows + burn_in;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(total, n);
  const auto d = static_cast<Eigen::Index>(phi.size());
  for (Eigen::Index t = d; t < total; ++t) {
    Eigen::VectorXd e(n);
    for (Eigen::Index i = 0; i < n; ++i) e(i) = normal(rng);
    Eigen::VectorXd next = intercept + chol * e;
    for (Eigen::Index l = 0; l < d; ++l) next += phi[static_cast<std::size_t>(l)] * y.row(t - l - 1).transpose();
    y.row(t) = next.transpose();
  }
  return y.bottomRows(rows);
}

/// Consecutive weekdays starting 2021-01-04.
inline std::vector<volnet::Date> business_days(std::size_t count) {
  using namespace std::chrono;
  std::vector<volnet::Date> out;
  sys_days day = sys_days{year{2021} / January / 4};
  while (out.size() < count) {
    const weekday wd{day};
    if (wd != Saturday && wd != Sunday) out.emplace_back(day);
    day += days{1};
  }
  return out;
}

/// Log-variance panel simulated from a sparse stable VAR(1) around -8.
inline volnet::ingest::VolatilityPanel synthetic_panel(std::size_t firms, std::size_t days, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto n = static_cast<Eigen::Index>(firms);
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    phi(i, i) = 0.5;
    phi(i, (i + 1) % n) = 0.2;
  }
  Eigen::VectorXd c = Eigen::VectorXd::Constant(n, -8.0 * (1.0 - 0.7));
  Eigen::MatrixXd sigma = 0.04 * Eigen::MatrixXd::Identity(n, n) + 0.01 * Eigen::MatrixXd::Ones(n, n);
  volnet::ingest::VolatilityPanel panel;
  panel.values = simulate_var(rng, {phi}, c, sigma, static_cast<Eigen::Index>(days));
  panel.dates = business_days(days);
  for (std::size_t i = 0; i < firms; ++i) panel.firms.push_back("F" + std::to_string(100 + i));
  return panel;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("volnet-" + tag + "-" + std::to_string(rng() % 1000000000));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
