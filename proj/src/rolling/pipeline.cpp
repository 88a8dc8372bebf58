#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include <fmt/format.h>

#include "volnet/csv.hpp"
#include "volnet/digest.hpp"
#include "volnet/errors.hpp"
#include "volnet/rolling.hpp"

namespace volnet::rolling {

namespace {

struct Estimate {
  std::optional<fevd::ConnectednessTable> table;
  ModelSummary model;
  std::string failure;
  std::string coefficients;
};

std::string matrix_digest(const Eigen::MatrixXd& m) {
  std::string text;
  text.reserve(static_cast<std::size_t>(m.size()) * 20);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      text += csv::format_double(m(i, j));
      text += j + 1 < m.cols() ? ',' : '\n';
    }
  }
  return sha256_hex(text);
}

Estimate estimate_window(const Eigen::MatrixXd& window, const std::vector<std::string>& firms,
                         const RollingConfig& cfg, bool dump_coefficients) {
  Estimate est;
  est.model.lags = cfg.lags;
  est.model.alpha = cfg.alpha;
  try {
    const auto model = varnet::fit_var(window, cfg.lags, cfg.fit_options());
    est.model.equations = model.equations;
    auto table = fevd::connectedness(model, firms, cfg.horizon);
    if (!table.d.allFinite()) throw NumericalError("connectedness table has non-finite entries");
    est.table = std::move(table);
    if (dump_coefficients) est.coefficients = varnet::format_coefficients(model, firms);
  } catch (const Error& e) {
    est.failure = e.what();
  }
  return est;
}

template <typename F>
void parallel_for(std::size_t count, std::size_t threads, F&& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < std::min(threads, count); ++t) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < count && !failed; i = next++) {
          try {
            body(i);
          } catch (...) {
            if (!failed.exchange(true)) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

bool all_finite(const layout::Positions& positions) {
  return std::all_of(positions.begin(), positions.end(),
                     [](const layout::Vec2& p) { return std::isfinite(p.x) && std::isfinite(p.y); });
}

}  // namespace

std::map<std::string, NodeAttributes> node_attributes(const std::vector<ingest::FirmMeta>& meta) {
  std::map<std::string, NodeAttributes> out;
  for (const auto& m : meta) {
    out[m.ticker] = NodeAttributes{std::string(ingest::to_string(m.region)), m.state_owned, m.parent_ticker};
  }
  return out;
}

std::vector<double> ModelSummary::median_nonzero_per_lag() const {
  std::vector<double> out;
  for (std::size_t lag = 0; lag < lags; ++lag) {
    std::vector<std::size_t> counts;
    for (const auto& eq : equations) {
      if (lag < eq.nonzero_per_lag.size()) counts.push_back(eq.nonzero_per_lag[lag]);
    }
    if (counts.empty()) {
      out.push_back(0.0);
      continue;
    }
    std::sort(counts.begin(), counts.end());
    const std::size_t mid = counts.size() / 2;
    out.push_back(counts.size() % 2 ? static_cast<double>(counts[mid])
                                    : 0.5 * static_cast<double>(counts[mid - 1] + counts[mid]));
  }
  return out;
}

std::string positions_digest(const layout::Positions& positions) {
  std::string text;
  for (const auto& p : positions) {
    text += csv::format_double(p.x) + ',' + csv::format_double(p.y) + '\n';
  }
  return sha256_hex(text);
}

PipelineSummary run_pipeline(const ingest::VolatilityPanel& panel,
                             const std::map<std::string, NodeAttributes>& nodes,
                             const RollingConfig& cfg, const PipelineOptions& options) {
  validate(cfg);
  if (panel.num_firms() == 0) throw ValidationError("panel has no firms");
  if (static_cast<std::size_t>(panel.values.rows()) != panel.num_dates() ||
      static_cast<std::size_t>(panel.values.cols()) != panel.num_firms()) {
    throw ValidationError("panel dimensions disagree with its labels");
  }
  if (!panel.values.allFinite()) throw ValidationError("panel contains non-finite values");
  const auto windows = enumerate_windows(panel.num_dates(), cfg);
  const std::string hash = config_hash(cfg);
  const auto params = cfg.layout_params();

  std::map<std::string, NodeAttributes> snapshot_nodes;
  for (const auto& firm : panel.firms) {
    if (auto it = nodes.find(firm); it != nodes.end()) snapshot_nodes.emplace(firm, it->second);
  }

  auto window_matrix = [&](const WindowRange& w) -> Eigen::MatrixXd {
    return panel.values.middleRows(static_cast<Eigen::Index>(w.start),
                                   static_cast<Eigen::Index>(w.end - w.start + 1));
  };

  PipelineSummary summary;
  summary.windows = windows.size();
  std::optional<NetworkSnapshot> previous;
  std::size_t first = 0;

  if (options.store && options.resume) {
    for (; first < windows.size(); ++first) {
      const Date date = panel.dates[windows[first].end];
      if (!snapshot_exists(date, *options.store)) break;
      NetworkSnapshot stored;
      try {
        stored = load_snapshot(date, *options.store);
      } catch (const CorruptDataError&) {
        break;
      }
      if (stored.provenance.config_hash != hash) {
        throw ValidationError(fmt::format(
            "snapshot {} in '{}' was produced with a different configuration", format_date(date),
            options.store->string()));
      }
      if (stored.provenance.window_digest != matrix_digest(window_matrix(windows[first]))) {
        throw ValidationError(fmt::format("snapshot {} in '{}' was produced from different panel data",
                                          format_date(date), options.store->string()));
      }
      previous = std::move(stored);
    }
    summary.reused = first;
  }

  const std::size_t threads =
      cfg.threads ? cfg.threads : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t batch = std::max<std::size_t>(8, 4 * threads);

  for (std::size_t begin = first; begin < windows.size(); begin += batch) {
    const std::size_t end = std::min(windows.size(), begin + batch);
    std::vector<Estimate> estimates(end - begin);
    parallel_for(end - begin, threads, [&](std::size_t k) {
      estimates[k] = estimate_window(window_matrix(windows[begin + k]), panel.firms, cfg,
                                     options.dump_coefficients);
    });

    for (std::size_t k = begin; k < end; ++k) {
      auto& est = estimates[k - begin];
      const auto& w = windows[k];
      NetworkSnapshot snap;
      snap.date = panel.dates[w.end];
      snap.nodes = snapshot_nodes;
      auto& prov = snap.provenance;
      prov.config_hash = hash;
      prov.window_start = panel.dates[w.start];
      prov.window_end = panel.dates[w.end];
      prov.window_digest = matrix_digest(window_matrix(w));
      if (previous) prov.previous_date = previous->date;

      std::optional<layout::LayoutResult> laid_out;
      if (est.table) {
        const auto graph = layout::edges_from_table(*est.table, cfg.degree_convention);
        std::optional<layout::Positions> initial;
        if (previous) initial = previous->layout;
        laid_out = layout::run_layout(graph, params, initial, cfg.seed);
        if (!all_finite(laid_out->positions)) {
          est.failure = "layout diverged to non-finite positions";
          laid_out.reset();
        }
      }

      if (laid_out) {
        snap.table = std::move(*est.table);
        snap.model = std::move(est.model);
        snap.layout = laid_out->positions;
        prov.layout_source = previous ? "previous" : "random";
        prov.layout_seed = laid_out->seed;
        prov.initial_layout_digest = positions_digest(laid_out->initial);
        prov.final_layout_digest = positions_digest(laid_out->positions);
        prov.layout_converged_at = laid_out->converged_at;
      } else {
        summary.failures.push_back({snap.date, est.failure});
        if (!previous) continue;  // nothing to carry forward yet
        snap.table = previous->table;
        snap.model = previous->model;
        snap.layout = previous->layout;
        prov.degraded = true;
        prov.failure = est.failure;
        prov.layout_source = "carried";
        prov.initial_layout_digest = positions_digest(snap.layout);
        prov.final_layout_digest = prov.initial_layout_digest;
      }

      if (options.store) {
        store_snapshot(snap, *options.store);
        const auto dir = *options.store / format_date(snap.date);
        if (options.write_traces && laid_out) {
          write_text_file(dir / "trace.csv", layout::format_trace_csv(laid_out->trace));
        }
        if (options.dump_coefficients && !est.coefficients.empty()) {
          write_text_file(dir / "coefficients.csv", est.coefficients);
        }
      }
      ++summary.computed;
      if (options.on_snapshot) options.on_snapshot(snap);
      previous = std::move(snap);
    }
  }
  return summary;
}

}  // namespace volnet::rolling
