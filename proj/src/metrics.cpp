#include "gabi/metrics.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "gabi/errors.hpp"

namespace gabi {

Coverage compute_metrics(const Field& truth, const Field& mean,
                         const Field& stdev) {
  if (!truth.values.same_shape(mean.values) ||
      !truth.values.same_shape(stdev.values))
    throw ShapeError("compute_metrics: field shapes differ");
  Coverage cov;
  cov.total = truth.values.numel();
  double abs_sum = 0.0;
  for (int64_t i = 0; i < cov.total; ++i) {
    const double err = std::fabs(truth.values[i] - mean.values[i]);
    abs_sum += err;
    const double s = stdev.values[i];
    if (err <= 1.0 * s) ++cov.covered1;
    if (err <= 2.0 * s) ++cov.covered2;
  }
  cov.mae = abs_sum / static_cast<double>(cov.total);
  return cov;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {
std::string cell(double v) { return v < 0.0 ? "-" : format_double(v); }
}  // namespace

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "method,target,mae_mean,mae_std,cov1_pct,cov2_pct\n";
  for (const auto& r : rows)
    out << r.method << ',' << r.target << ',' << format_double(r.mae_mean)
        << ',' << format_double(r.mae_std) << ',' << cell(r.cov1_pct) << ','
        << cell(r.cov2_pct) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

void write_timings_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "method,target,train_seconds,pred_seconds\n";
  for (const auto& r : rows)
    out << r.method << ',' << r.target << ',' << cell(r.train_seconds) << ','
        << cell(r.pred_seconds) << '\n';
}

void write_loss_trace_csv(const std::string& path,
                          const std::vector<double>& recon,
                          const std::vector<double>& mmd) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "iteration,recon,mmd\n";
  for (size_t i = 0; i < recon.size(); ++i)
    out << i << ',' << format_double(recon[i]) << ','
        << format_double(mmd[i]) << '\n';
}

}  // namespace gabi
