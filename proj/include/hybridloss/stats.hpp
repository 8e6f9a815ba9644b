#pragma once

#include "hybridloss/experiment.hpp"

#include <string>
#include <vector>

namespace hybridloss {

struct VariantSummary {
  std::string dataset;
  std::string variant;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n-1)
  std::vector<double> sample;
  bool best = false;
  bool worst = false;
};

struct PairwiseTest {
  std::string dataset;
  std::string variant_a;
  std::string variant_b;
  double u_statistic = 0.0;  // U of sample A
  double p_value = 1.0;      // two-sided
  bool significant = false;  // p < 0.05
  bool exact = false;        // enumeration path used
};

/// Mean and sample standard deviation of the final test accuracies.
/// Requires at least two values.
VariantSummary summarize(const std::string& dataset, const std::string& variant,
                         const std::vector<double>& final_accuracies);

/// Groups successful records by variant (canonical order) and summarizes.
std::vector<VariantSummary> summarize_records(const std::vector<RunRecord>& records);

/// Two-sided Mann-Whitney U test with mid-rank ties. Exact enumeration when
/// both samples have fewer than 8 values, otherwise the normal approximation
/// with tie-corrected variance and continuity correction.
PairwiseTest mann_whitney_u(const std::vector<double>& sample_a,
                            const std::vector<double>& sample_b);

/// All variant pairs for one dataset, in summary order.
std::vector<PairwiseTest> pairwise_tests(const std::vector<VariantSummary>& summaries);

/// Flags the best set (the top mean plus everything not significantly
/// different from it) and, symmetrically, the worst set.
void mark_best_worst(std::vector<VariantSummary>& summaries,
                     const std::vector<PairwiseTest>& tests);

}  // namespace hybridloss
