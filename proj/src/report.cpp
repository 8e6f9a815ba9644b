#include "hybridloss/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace hybridloss {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

}  // namespace

std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

HistogramSeries weight_histogram(const Vector& switch_weights, const Vector& final_weights,
                                 int bins) {
  if (switch_weights.size() == 0 || final_weights.size() == 0) {
    throw std::invalid_argument("histogram needs both weight snapshots");
  }
  if (bins < 1) throw std::invalid_argument("bins must be >= 1");

  double lo = std::min(switch_weights.minCoeff(), final_weights.minCoeff());
  double hi = std::max(switch_weights.maxCoeff(), final_weights.maxCoeff());
  if (lo == hi) {  // all weights equal; give the single value a visible bin
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / bins;

  HistogramSeries h;
  h.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) h.bin_edges[static_cast<std::size_t>(b)] = lo + width * b;
  h.bin_edges.back() = hi;
  h.at_switch.assign(static_cast<std::size_t>(bins), 0);
  h.at_end.assign(static_cast<std::size_t>(bins), 0);

  auto fill = [&](const Vector& w, std::vector<long>& counts) {
    for (Index i = 0; i < w.size(); ++i) {
      int b = static_cast<int>((w[i] - lo) / width);
      b = std::clamp(b, 0, bins - 1);
      ++counts[static_cast<std::size_t>(b)];
    }
  };
  fill(switch_weights, h.at_switch);
  fill(final_weights, h.at_end);
  return h;
}

void write_summary_csv(const std::string& path, const std::vector<VariantSummary>& summaries) {
  std::ofstream out = open_out(path);
  out << "dataset,variant,mean,std,best,worst\n";
  for (const VariantSummary& s : summaries) {
    out << s.dataset << ',' << s.variant << ',' << format_double(s.mean) << ','
        << format_double(s.stddev) << ',' << (s.best ? 1 : 0) << ',' << (s.worst ? 1 : 0)
        << '\n';
  }
}

void write_pairwise_csv(const std::string& path, const std::vector<PairwiseTest>& tests) {
  std::ofstream out = open_out(path);
  out << "dataset,variant_a,variant_b,u,p,significant\n";
  for (const PairwiseTest& t : tests) {
    char pbuf[64];
    std::snprintf(pbuf, sizeof pbuf, "%.9g", t.p_value);
    out << t.dataset << ',' << t.variant_a << ',' << t.variant_b << ','
        << format_double(t.u_statistic, 1) << ',' << pbuf << ',' << (t.significant ? 1 : 0)
        << '\n';
  }
}

void write_bar_chart_csv(const std::string& path, const std::vector<VariantSummary>& summaries) {
  std::ofstream out = open_out(path);
  out << "variant,mean,std\n";
  for (const VariantSummary& s : summaries) {
    out << s.variant << ',' << format_double(s.mean) << ',' << format_double(s.stddev) << '\n';
  }
}

void write_histogram_csv(const std::string& path, const HistogramSeries& h) {
  std::ofstream out = open_out(path);
  out << "bin_left,bin_right,count_at_switch,count_at_end\n";
  for (std::size_t b = 0; b + 1 < h.bin_edges.size(); ++b) {
    out << format_double(h.bin_edges[b]) << ',' << format_double(h.bin_edges[b + 1]) << ','
        << h.at_switch[b] << ',' << h.at_end[b] << '\n';
  }
}

void write_histogram_svg(const std::string& path, const HistogramSeries& h,
                         const std::string& title) {
  const int bins = static_cast<int>(h.at_switch.size());
  const double view_w = 720.0, view_h = 420.0;
  const double margin_l = 50.0, margin_r = 16.0, margin_t = 36.0, margin_b = 34.0;
  const double plot_w = view_w - margin_l - margin_r;
  const double plot_h = view_h - margin_t - margin_b;

  long peak = 1;
  for (int b = 0; b < bins; ++b) {
    peak = std::max({peak, h.at_switch[static_cast<std::size_t>(b)],
                     h.at_end[static_cast<std::size_t>(b)]});
  }

  std::ofstream out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << view_w << ' ' << view_h
      << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << view_w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\" "
         "font-family=\"sans-serif\">"
      << title << "</text>\n";

  auto bars = [&](const std::vector<long>& counts, const char* color, double shift) {
    const double bw = plot_w / bins;
    for (int b = 0; b < bins; ++b) {
      const double c = static_cast<double>(counts[static_cast<std::size_t>(b)]);
      const double height = plot_h * c / static_cast<double>(peak);
      out << "<rect x=\"" << margin_l + bw * b + shift << "\" y=\""
          << margin_t + plot_h - height << "\" width=\"" << bw * 0.46 << "\" height=\""
          << height << "\" fill=\"" << color << "\" fill-opacity=\"0.85\"/>\n";
    }
  };
  bars(h.at_switch, "#4477cc", 0.0);
  bars(h.at_end, "#7fd47f", plot_w / bins * 0.48);

  char lbl[64];
  std::snprintf(lbl, sizeof lbl, "%.3g", h.bin_edges.front());
  out << "<text x=\"" << margin_l << "\" y=\"" << view_h - 12
      << "\" font-size=\"11\" font-family=\"sans-serif\">" << lbl << "</text>\n";
  std::snprintf(lbl, sizeof lbl, "%.3g", h.bin_edges.back());
  out << "<text x=\"" << view_w - margin_r << "\" y=\"" << view_h - 12
      << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << lbl
      << "</text>\n";
  out << "<text x=\"14\" y=\"" << margin_t + 8
      << "\" font-size=\"11\" font-family=\"sans-serif\">" << peak << "</text>\n"
      << "<rect x=\"" << margin_l << "\" y=\"" << margin_t + plot_h << "\" width=\"" << plot_w
      << "\" height=\"1\" fill=\"#333\"/>\n"
      << "<rect x=\"" << view_w - 200 << "\" y=\"30\" width=\"12\" height=\"12\" "
         "fill=\"#4477cc\"/><text x=\""
      << view_w - 184 << "\" y=\"40\" font-size=\"11\" font-family=\"sans-serif\">at "
         "switch</text>\n"
      << "<rect x=\"" << view_w - 110 << "\" y=\"30\" width=\"12\" height=\"12\" "
         "fill=\"#7fd47f\"/><text x=\""
      << view_w - 94 << "\" y=\"40\" font-size=\"11\" font-family=\"sans-serif\">after "
         "training</text>\n"
      << "</svg>\n";
}

}  // namespace hybridloss
