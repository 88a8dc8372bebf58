#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "volnet/errors.hpp"
#include "volnet/varnet.hpp"

namespace volnet::fevd {

/// A firm whose shock variance or total forecast variance is not positive.
class DegenerateFirmError : public NumericalError {
 public:
  DegenerateFirmError(std::size_t firm_index, const std::string& message)
      : NumericalError(message), firm_index_(firm_index) {}
  std::size_t firm_index() const { return firm_index_; }

 private:
  std::size_t firm_index_;
};

/// Moving-average coefficients A_0..A_{H-1} of the VAR, A_0 = I.
struct ImpulseResponseSet {
  std::vector<Eigen::MatrixXd> matrices;

  std::size_t horizon() const { return matrices.size(); }
};

/// A_h = sum_{l=1..min(h,d)} phi_l A_{h-l}. Throws ValidationError if horizon < 1.
ImpulseResponseSet impulse_responses(const std::vector<Eigen::MatrixXd>& phi, std::size_t horizon);
ImpulseResponseSet impulse_responses(const varnet::VarModel& model, std::size_t horizon);

/// Generalized forecast-error variance decomposition:
///   theta_ij = sigma_jj^-1 sum_h (e_i' A_h Sigma e_j)^2 / sum_h e_i' A_h Sigma A_h' e_i
/// Throws DegenerateFirmError when sigma_jj or a total forecast variance is
/// not positive.
Eigen::MatrixXd gfevd(const ImpulseResponseSet& irf, const Eigen::MatrixXd& sigma);

/// d_ij = 100 theta_ij / sum_k theta_ik. Throws NumericalError on a
/// non-positive row sum.
Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& theta);

/// Row-normalized decomposition (percent) with directional aggregates.
struct ConnectednessTable {
  std::vector<std::string> firms;
  Eigen::MatrixXd d;             // d(i, j): share of i's forecast variance due to j, in percent
  Eigen::VectorXd from_others;   // off-diagonal row sums
  Eigen::VectorXd to_others;     // off-diagonal column sums
  Eigen::VectorXd net;           // to - from
  Eigen::MatrixXd net_pairwise;  // (i, j) = d(j, i) - d(i, j)
  double total = 0.0;            // (1/N) sum of off-diagonal entries
  std::size_t horizon = 0;

  std::size_t size() const { return firms.size(); }
};

ConnectednessTable build_table(const Eigen::MatrixXd& d, std::vector<std::string> firms,
                               std::size_t horizon = 0);

/// impulse responses -> gfevd -> normalize_rows -> build_table. Degenerate
/// firms are reported by name.
ConnectednessTable connectedness(const varnet::VarModel& model, std::vector<std::string> firms,
                                 std::size_t horizon);

enum class Measure { kTo, kFrom, kNet };
std::string_view to_string(Measure measure);

struct FirmDelta {
  std::string firm;
  double to = 0.0;
  double from = 0.0;
  double net = 0.0;

  double get(Measure m) const;
};

struct DirectionCounts {
  std::size_t up = 0;
  std::size_t down = 0;  // exact ties count in neither
};

struct TableDiff {
  std::vector<FirmDelta> deltas;  // firm order of the inputs, b - a
  DirectionCounts to;
  DirectionCounts from;
  DirectionCounts net;
  double total_delta = 0.0;

  const DirectionCounts& counts(Measure m) const;
  /// Firms with the largest absolute change in `m`, ties broken by firm order.
  std::vector<FirmDelta> top_movers(Measure m, std::size_t k) const;
};

/// Differences b - a. Throws ValidationError if the firm orders differ.
TableDiff table_diff(const ConnectednessTable& a, const ConnectednessTable& b);

/// Table layout: header ",<firms...>,from_others", one row per firm, then a
/// "to_others" row whose last cell is the total.
std::string format_table_csv(const ConnectednessTable& table);
/// Parses format_table_csv output, rebuilding the aggregates from D and
/// checking they match the stored ones. Throws CorruptDataError otherwise.
ConnectednessTable parse_table_csv(std::string_view text, std::size_t horizon = 0);

}  // namespace volnet::fevd
