#ifndef GABI_METRICS_HPP
#define GABI_METRICS_HPP

#include <string>
#include <vector>

#include "gabi/mesh.hpp"

namespace gabi {

/// Per-case error metrics. MAE over all node-channel entries; coverage
/// counts entries with |truth − mean| ≤ k·std (boundary inclusive; std = 0
/// counts as covered iff the error is exactly 0).
struct Coverage {
  double mae = 0.0;
  int64_t covered1 = 0;
  int64_t covered2 = 0;
  int64_t total = 0;

  double cov1_pct() const {
    return 100.0 * static_cast<double>(covered1) / static_cast<double>(total);
  }
  double cov2_pct() const {
    return 100.0 * static_cast<double>(covered2) / static_cast<double>(total);
  }
};

Coverage compute_metrics(const Field& truth, const Field& mean,
                         const Field& stdev);

/// One metrics-table row: MAE mean ± std across test cases, pooled
/// coverages, wall times. Negative coverage/time marks "not applicable".
struct MetricsRow {
  std::string method;
  std::string target;
  double mae_mean = 0.0;
  double mae_std = 0.0;
  double cov1_pct = -1.0;
  double cov2_pct = -1.0;
  double train_seconds = -1.0;
  double pred_seconds = -1.0;
};

/// Shortest round-trip decimal formatting (locale-independent).
std::string format_double(double v);

/// metrics.csv carries only the statistical columns so identical runs are
/// byte-identical; wall times go to timings.csv.
void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows);
void write_timings_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows);
void write_loss_trace_csv(const std::string& path,
                          const std::vector<double>& recon,
                          const std::vector<double>& mmd);

}  // namespace gabi

#endif  // GABI_METRICS_HPP
