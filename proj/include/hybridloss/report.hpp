#pragma once

#include "hybridloss/stats.hpp"

#include <string>
#include <vector>

namespace hybridloss {

/// Two weight distributions over shared equal-width bins, so the series can
/// be compared bin by bin.
struct HistogramSeries {
  std::vector<double> bin_edges;      // bins + 1 edges
  std::vector<long> at_switch;        // counts per bin
  std::vector<long> at_end;
};

HistogramSeries weight_histogram(const Vector& switch_weights, const Vector& final_weights,
                                 int bins = 50);

void write_summary_csv(const std::string& path, const std::vector<VariantSummary>& summaries);
void write_pairwise_csv(const std::string& path, const std::vector<PairwiseTest>& tests);
/// Per-variant mean and std in the given order, for bar charts.
void write_bar_chart_csv(const std::string& path, const std::vector<VariantSummary>& summaries);
void write_histogram_csv(const std::string& path, const HistogramSeries& h);
void write_histogram_svg(const std::string& path, const HistogramSeries& h,
                         const std::string& title);

std::string format_double(double v, int precision = 6);

}  // namespace hybridloss
