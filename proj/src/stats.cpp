#include "hybridloss/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace hybridloss {

VariantSummary summarize(const std::string& dataset, const std::string& variant,
                         const std::vector<double>& final_accuracies) {
  if (final_accuracies.size() < 2) {
    throw std::invalid_argument("summary needs at least two successful runs");
  }
  VariantSummary s;
  s.dataset = dataset;
  s.variant = variant;
  s.sample = final_accuracies;
  const double n = static_cast<double>(s.sample.size());
  s.mean = std::accumulate(s.sample.begin(), s.sample.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : s.sample) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / (n - 1.0));
  return s;
}

std::vector<VariantSummary> summarize_records(const std::vector<RunRecord>& records) {
  std::map<std::string, std::vector<double>> by_variant;
  std::string dataset;
  std::vector<std::string> seen_order;
  for (const RunRecord& r : records) {
    if (dataset.empty()) dataset = r.dataset;
    if (r.failed) continue;
    if (!by_variant.count(r.variant)) seen_order.push_back(r.variant);
    by_variant[r.variant].push_back(r.final_test_accuracy);
  }
  std::vector<std::string> ordered;
  for (const std::string& label : LossVariant::canonical_labels()) {
    if (by_variant.count(label)) ordered.push_back(label);
  }
  for (const std::string& label : seen_order) {
    if (std::find(ordered.begin(), ordered.end(), label) == ordered.end()) {
      ordered.push_back(label);
    }
  }
  std::vector<VariantSummary> out;
  for (const std::string& label : ordered) {
    out.push_back(summarize(dataset, label, by_variant[label]));
  }
  return out;
}

namespace {

// Mid-ranks of the pooled sample; ranks start at 1.
std::vector<double> mid_ranks(const std::vector<double>& pooled) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = shared;
    i = j + 1;
  }
  return ranks;
}

double u_from_rank_sum(double rank_sum_a, std::size_t na) {
  return rank_sum_a - static_cast<double>(na) * (static_cast<double>(na) + 1.0) / 2.0;
}

bool next_combination(std::vector<std::size_t>& pick, std::size_t n) {
  const std::size_t k = pick.size();
  std::size_t i = k;
  while (i-- > 0) {
    if (pick[i] < n - k + i) {
      ++pick[i];
      for (std::size_t j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
      return true;
    }
  }
  return false;
}

// Counts assignments of nA out of the pooled ranks whose U is <= / >= the
// observed one. Lexicographic combination walk.
void exact_counts(const std::vector<double>& ranks, std::size_t na, double u_obs,
                  long& count_le, long& count_ge, long& total) {
  const std::size_t n = ranks.size();
  std::vector<std::size_t> pick(na);
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  count_le = count_ge = total = 0;
  do {
    double rank_sum = 0.0;
    for (std::size_t i : pick) rank_sum += ranks[i];
    const double u = u_from_rank_sum(rank_sum, na);
    ++total;
    if (u <= u_obs) ++count_le;
    if (u >= u_obs) ++count_ge;
  } while (next_combination(pick, n));
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

}  // namespace

PairwiseTest mann_whitney_u(const std::vector<double>& sample_a,
                            const std::vector<double>& sample_b) {
  const std::size_t na = sample_a.size(), nb = sample_b.size();
  if (na == 0 || nb == 0) throw std::invalid_argument("both samples must be non-empty");

  std::vector<double> pooled = sample_a;
  pooled.insert(pooled.end(), sample_b.begin(), sample_b.end());
  const std::vector<double> ranks = mid_ranks(pooled);

  double rank_sum_a = 0.0;
  for (std::size_t i = 0; i < na; ++i) rank_sum_a += ranks[i];
  const double u = u_from_rank_sum(rank_sum_a, na);

  PairwiseTest test;
  test.u_statistic = u;

  if (na < 8 && nb < 8) {
    test.exact = true;
    long count_le = 0, count_ge = 0, total = 0;
    exact_counts(ranks, na, u, count_le, count_ge, total);
    const double tail = static_cast<double>(std::min(count_le, count_ge));
    test.p_value = std::min(1.0, 2.0 * tail / static_cast<double>(total));
  } else {
    const double dn = static_cast<double>(na + nb);
    const double mu = static_cast<double>(na) * static_cast<double>(nb) / 2.0;
    // tie correction: sum over tie groups of t^3 - t
    double tie_sum = 0.0;
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_sum += t * t * t - t;
      i = j + 1;
    }
    const double var = static_cast<double>(na) * static_cast<double>(nb) / 12.0 *
                       ((dn + 1.0) - tie_sum / (dn * (dn - 1.0)));
    if (var <= 0.0) {
      test.p_value = 1.0;  // every pooled value identical
    } else {
      double centered = u - mu;
      if (centered > 0.0) centered -= 0.5;
      else if (centered < 0.0) centered += 0.5;
      test.p_value = std::min(1.0, normal_two_sided_p(centered / std::sqrt(var)));
    }
  }
  test.significant = test.p_value < 0.05;
  return test;
}

std::vector<PairwiseTest> pairwise_tests(const std::vector<VariantSummary>& summaries) {
  std::vector<PairwiseTest> tests;
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    for (std::size_t j = i + 1; j < summaries.size(); ++j) {
      PairwiseTest t = mann_whitney_u(summaries[i].sample, summaries[j].sample);
      t.dataset = summaries[i].dataset;
      t.variant_a = summaries[i].variant;
      t.variant_b = summaries[j].variant;
      tests.push_back(t);
    }
  }
  return tests;
}

void mark_best_worst(std::vector<VariantSummary>& summaries,
                     const std::vector<PairwiseTest>& tests) {
  if (summaries.empty()) return;
  auto significant = [&](const std::string& a, const std::string& b) {
    for (const PairwiseTest& t : tests) {
      if ((t.variant_a == a && t.variant_b == b) || (t.variant_a == b && t.variant_b == a)) {
        return t.significant;
      }
    }
    throw std::invalid_argument("missing pairwise test for " + a + " vs " + b);
  };

  std::size_t best_i = 0, worst_i = 0;
  for (std::size_t i = 1; i < summaries.size(); ++i) {
    if (summaries[i].mean > summaries[best_i].mean) best_i = i;
    if (summaries[i].mean < summaries[worst_i].mean) worst_i = i;
  }
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    summaries[i].best =
        i == best_i || !significant(summaries[i].variant, summaries[best_i].variant);
    summaries[i].worst =
        i == worst_i || !significant(summaries[i].variant, summaries[worst_i].variant);
  }
}

}  // namespace hybridloss
