#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "tweetopics/cluster.hpp"
#include "tweetopics/error.hpp"
#include "tweetopics/matrix.hpp"
#include "tweetopics/random.hpp"
#include "tweetopics/text_io.hpp"

namespace tweetopics {

enum class SelectionRule { first_se, argmax_gap };

inline std::string_view to_string(SelectionRule r) noexcept {
  return r == SelectionRule::first_se ? "firstSE" : "argmaxGap";
}

inline SelectionRule parse_selection_rule(std::string_view s) {
  if (s == "firstSE") return SelectionRule::first_se;
  if (s == "argmaxGap") return SelectionRule::argmax_gap;
  throw ConfigError("unknown selection rule '" + std::string(s) + "' (expected firstSE or argmaxGap)");
}

struct GapCurve {
  std::vector<std::size_t> ks;
  std::vector<double> log_w;           // observed log W_k
  std::vector<double> log_w_ref_mean;  // mean over references of log W_k^(b)
  std::vector<double> gap;             // Gap_B(k)
  std::vector<double> s;               // s_k
  std::vector<bool> excluded;          // W_k = 0 somewhere; not eligible for selection
  std::vector<std::vector<double>> log_w_ref;  // [k index][b]
  std::size_t B = 0;
  SelectionRule rule = SelectionRule::first_se;
  std::size_t selected_k = 0;
  bool no_elbow = false;  // firstSE found no k in the sweep and fell back to argmax
};

struct GapOptions {
  std::size_t B = 10;
  std::uint64_t seed = 42;
  KMeansOptions kmeans{};
  std::size_t workers = 1;
  SelectionRule rule = SelectionRule::first_se;
};

// Uniform sample over the axis-aligned bounding box of `points`, same size.
inline MatrixD reference_sample(const MatrixD& points, Rng& rng) {
  if (points.rows() == 0) throw DataError("reference sample of an empty point set");
  const std::size_t n = points.cols();
  std::vector<double> lo(n, std::numeric_limits<double>::infinity());
  std::vector<double> hi(n, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto row = points.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      lo[j] = std::min(lo[j], row[j]);
      hi[j] = std::max(hi[j], row[j]);
    }
  }
  MatrixD ref(points.rows(), n);
  for (std::size_t i = 0; i < ref.rows(); ++i) {
    auto row = ref.row(i);
    for (std::size_t j = 0; j < n; ++j) row[j] = lo[j] == hi[j] ? lo[j] : std::min(uniform(rng, lo[j], hi[j]), hi[j]);
  }
  return ref;
}

// Picks K from a curve. firstSE: smallest eligible k with
// Gap(k) >= Gap(k') - s_k' where k' is the next eligible k in the sweep;
// argmaxGap: eligible k with the largest gap (smallest k on ties).
inline std::size_t select_k(const GapCurve& curve, SelectionRule rule, bool* no_elbow = nullptr) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < curve.ks.size(); ++i)
    if (!curve.excluded[i]) idx.push_back(i);
  if (idx.empty()) throw DataError("gap curve has no eligible k");
  if (no_elbow) *no_elbow = false;
  std::size_t arg = idx.front();
  for (auto i : idx)
    if (curve.gap[i] > curve.gap[arg]) arg = i;
  if (rule == SelectionRule::argmax_gap || idx.size() == 1) return curve.ks[arg];
  for (std::size_t t = 0; t + 1 < idx.size(); ++t) {
    const auto i = idx[t];
    const auto next = idx[t + 1];
    if (curve.gap[i] >= curve.gap[next] - curve.s[next]) return curve.ks[i];
  }
  if (no_elbow) *no_elbow = true;
  return curve.ks[arg];
}

namespace detail {

// Runs fn(job) for job in [0, n) on up to `workers` threads.
template <typename F>
void parallel_for(std::size_t n, std::size_t workers, F&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> threads;
  for (std::size_t w = 0; w < workers; ++w)
    threads.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
}

}  // namespace detail

// Observed and reference log-dispersions for each k. Reference sets are drawn
// once and reused for every k; every clustering job has its own seed, so the
// result is independent of `workers`.
inline GapCurve gap_curve(const MatrixD& points, const std::vector<std::size_t>& ks, const GapOptions& options) {
  if (options.B < 2) throw ConfigError("gap statistic needs B >= 2 reference sets");
  if (ks.empty()) throw ConfigError("gap statistic needs at least one k");
  options.kmeans.validate();
  for (auto k : ks) {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (k > points.rows())
      throw DataError("k = " + std::to_string(k) + " exceeds the number of points (" + std::to_string(points.rows()) +
                      ")");
  }
  const std::size_t B = options.B;
  std::vector<MatrixD> refs;
  refs.reserve(B);
  for (std::size_t b = 0; b < B; ++b) {
    Rng rng(derive_seed(options.seed, 0x7265, b));
    refs.push_back(reference_sample(points, rng));
  }

  // Job (ki, b) with b == B meaning the observed data.
  std::vector<double> w((B + 1) * ks.size(), 0.0);
  detail::parallel_for(w.size(), options.workers, [&](std::size_t job) {
    const std::size_t ki = job / (B + 1);
    const std::size_t b = job % (B + 1);
    KMeansOptions km = options.kmeans;
    km.seed = derive_seed(options.kmeans.seed, ks[ki], b);
    w[job] = kmeans(b == B ? points : refs[b], ks[ki], km).dispersion;
  });

  GapCurve curve;
  curve.ks = ks;
  curve.B = B;
  curve.rule = options.rule;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    const double observed = w[ki * (B + 1) + B];
    std::vector<double> refs_log(B);
    bool degenerate = !(observed > 0.0);
    for (std::size_t b = 0; b < B; ++b) {
      const double wb = w[ki * (B + 1) + b];
      degenerate = degenerate || !(wb > 0.0);
      refs_log[b] = wb > 0.0 ? std::log(wb) : -std::numeric_limits<double>::infinity();
    }
    curve.log_w.push_back(observed > 0.0 ? std::log(observed) : -std::numeric_limits<double>::infinity());
    curve.excluded.push_back(degenerate);
    if (degenerate) {
      log(LogLevel::info, "gap: k=", ks[ki], " excluded (zero within-cluster dispersion)");
      curve.log_w_ref_mean.push_back(nan);
      curve.gap.push_back(nan);
      curve.s.push_back(nan);
    } else {
      double sum = 0.0;
      for (double v : refs_log) sum += v;
      const double mean = sum / static_cast<double>(B);
      double ss = 0.0;
      for (double v : refs_log) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / static_cast<double>(B));
      curve.log_w_ref_mean.push_back(mean);
      curve.gap.push_back(mean - curve.log_w.back());
      curve.s.push_back(std::sqrt(1.0 + 1.0 / static_cast<double>(B)) * sd);
    }
    curve.log_w_ref.push_back(std::move(refs_log));
  }
  if (std::all_of(curve.excluded.begin(), curve.excluded.end(), [](bool e) { return e; })) {
    curve.selected_k = 0;
    log(LogLevel::info, "gap: every k was excluded; no K selected");
  } else {
    curve.selected_k = select_k(curve, options.rule, &curve.no_elbow);
    if (curve.no_elbow) log(LogLevel::info, "gap: no elbow under firstSE within the sweep; using argmax");
  }
  return curve;
}

inline std::vector<std::size_t> k_sweep(std::size_t k_min, std::size_t k_max, std::size_t step) {
  if (k_min < 1 || k_max < k_min || step < 1) throw ConfigError("invalid k sweep");
  std::vector<std::size_t> ks;
  for (std::size_t k = k_min; k <= k_max; k += step) ks.push_back(k);
  return ks;
}

// Plottable table: a "# selected_K=.. rule=.. no_elbow=.." line, a column
// header, then one row per k.
inline std::string format_gap_curve(const GapCurve& c) {
  std::string out = "# selected_K=" + std::to_string(c.selected_k) + " rule=" + std::string(to_string(c.rule)) +
                    " no_elbow=" + (c.no_elbow ? "1" : "0") + " B=" + std::to_string(c.B) + '\n';
  out += "k\tlogW\tlogW_ref_mean\tgap\ts\texcluded\n";
  for (std::size_t i = 0; i < c.ks.size(); ++i) {
    out += std::to_string(c.ks[i]) + '\t' + format_double(c.log_w[i]) + '\t' + format_double(c.log_w_ref_mean[i]) +
           '\t' + format_double(c.gap[i]) + '\t' + format_double(c.s[i]) + '\t' + (c.excluded[i] ? "1" : "0") + '\n';
  }
  return out;
}

// Reads back the table written by format_gap_curve (reference draws are not
// persisted).
inline GapCurve parse_gap_curve(std::string_view body) {
  GapCurve c;
  bool saw_columns = false;
  for (auto raw : split(body, '\n')) {
    const auto line = strip_cr(raw);
    if (line.empty()) continue;
    if (line.starts_with("#")) {
      for (auto f : split_ws(line.substr(1))) {
        const auto eq = f.find('=');
        if (eq == std::string_view::npos) continue;
        const auto key = f.substr(0, eq);
        const auto val = f.substr(eq + 1);
        if (key == "selected_K") c.selected_k = parse_integer<std::size_t>(val);
        if (key == "rule") c.rule = parse_selection_rule(val);
        if (key == "no_elbow") c.no_elbow = val == "1";
        if (key == "B") c.B = parse_integer<std::size_t>(val);
      }
      continue;
    }
    if (!saw_columns) {
      saw_columns = true;
      continue;
    }
    const auto f = split(line, '\t');
    if (f.size() != 6) throw DataError("gap table row must have 6 columns");
    c.ks.push_back(parse_integer<std::size_t>(f[0]));
    c.log_w.push_back(parse_double(f[1]));
    c.log_w_ref_mean.push_back(parse_double(f[2]));
    c.gap.push_back(parse_double(f[3]));
    c.s.push_back(parse_double(f[4]));
    c.excluded.push_back(f[5] == "1");
  }
  return c;
}

}  // namespace tweetopics
