#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tweetopics/error.hpp"
#include "tweetopics/matrix.hpp"
#include "tweetopics/random.hpp"
#include "tweetopics/text_io.hpp"

namespace tweetopics {

struct KMeansOptions {
  std::size_t max_iter = 300;
  double tol = 1e-6;  // stop when no centroid moves farther than this
  std::size_t restarts = 10;
  std::uint64_t seed = 42;

  void validate() const {
    if (max_iter < 1) throw ConfigError("k-means max_iter must be >= 1");
    if (!(tol >= 0.0)) throw ConfigError("k-means tol must be >= 0");
    if (restarts < 1) throw ConfigError("k-means restarts must be >= 1");
  }
};

struct ClusterModel {
  std::size_t k = 0;
  MatrixD centroids;                     // k x N
  std::vector<std::size_t> assignments;  // one cluster index per point
  double inertia = 0.0;                  // sum of squared distances to assigned centroid
  double dispersion = 0.0;               // W_k
  std::vector<double> inertia_trace;     // per Lloyd iteration of the winning restart
  std::size_t iterations = 0;

  std::vector<std::size_t> members(std::size_t cluster) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] == cluster) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out(k, 0);
    for (auto a : assignments) ++out[a];
    return out;
  }
};

// Index of the closest centroid (lowest index on ties) and its squared distance.
inline std::pair<std::size_t, double> nearest_centroid(std::span<const double> point, const MatrixD& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < centroids.rows(); ++r) {
    const double d = squared_distance(point, centroids.row(r));
    if (d < best_d) {
      best_d = d;
      best = r;
    }
  }
  return {best, best_d};
}

// D_r = (1 / 2 n_r) * sum over ordered pairs (i, j) in the cluster of |x_i - x_j|^2.
inline double within_dispersion_pairwise(const MatrixD& points, std::span<const std::size_t> members) {
  if (members.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t a = 0; a < members.size(); ++a)
    for (std::size_t b = a + 1; b < members.size(); ++b)
      sum += squared_distance(points.row(members[a]), points.row(members[b]));
  // Each unordered pair appears twice among ordered pairs.
  return 2.0 * sum / (2.0 * static_cast<double>(members.size()));
}

// Same quantity as the sum of squared distances to the cluster mean.
inline double within_dispersion_centroid(const MatrixD& points, std::span<const std::size_t> members) {
  if (members.empty()) return 0.0;
  std::vector<double> mean(points.cols(), 0.0);
  for (auto i : members) {
    const auto row = points.row(i);
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += row[j];
  }
  for (auto& v : mean) v /= static_cast<double>(members.size());
  double sum = 0.0;
  for (auto i : members) sum += squared_distance(points.row(i), mean);
  return sum;
}

inline constexpr std::size_t kPairwiseDispersionLimit = 64;

inline double within_dispersion(const MatrixD& points, std::span<const std::size_t> members) {
  return members.size() <= kPairwiseDispersionLimit ? within_dispersion_pairwise(points, members)
                                                    : within_dispersion_centroid(points, members);
}

inline double within_dispersion(const MatrixD& points) {
  std::vector<std::size_t> all(points.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return within_dispersion(points, all);
}

// W_k = sum of D_r over clusters.
inline double total_dispersion(std::span<const std::size_t> assignments, std::size_t k, const MatrixD& points) {
  if (assignments.size() != points.rows()) throw DataError("assignment count does not match point count");
  std::vector<std::vector<std::size_t>> groups(k);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] >= k) throw DataError("assignment outside 0..k-1");
    groups[assignments[i]].push_back(i);
  }
  double w = 0.0;
  for (const auto& g : groups) w += within_dispersion(points, g);
  return w;
}

inline double total_dispersion(const ClusterModel& model, const MatrixD& points) {
  return total_dispersion(model.assignments, model.k, points);
}

namespace detail {

inline MatrixD kmeanspp_seed(const MatrixD& points, std::size_t k, Rng& rng) {
  const std::size_t m = points.rows();
  MatrixD centroids;
  centroids.append_row(points.row(uniform_index(rng, m)));
  std::vector<double> d2(m);
  for (std::size_t i = 0; i < m; ++i) d2[i] = squared_distance(points.row(i), centroids.row(0));
  while (centroids.rows() < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      pick = m - 1;
      for (std::size_t i = 0; i < m; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uniform_index(rng, m);
    }
    centroids.append_row(points.row(pick));
    const auto c = centroids.row(centroids.rows() - 1);
    for (std::size_t i = 0; i < m; ++i) d2[i] = std::min(d2[i], squared_distance(points.row(i), c));
  }
  return centroids;
}

inline bool assign_all(const MatrixD& points, const MatrixD& centroids, std::vector<std::size_t>& assignments,
                       std::vector<double>& dist) {
  bool changed = false;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto [c, d] = nearest_centroid(points.row(i), centroids);
    if (assignments[i] != c) changed = true;
    assignments[i] = c;
    dist[i] = d;
  }
  return changed;
}

// Each empty cluster takes the point farthest from its own centroid (among
// points whose cluster would not become empty).
inline bool repair_empty(const MatrixD& points, MatrixD& centroids, std::vector<std::size_t>& assignments,
                         std::vector<double>& dist) {
  std::vector<std::size_t> sizes(centroids.rows(), 0);
  for (auto a : assignments) ++sizes[a];
  bool repaired = false;
  for (std::size_t r = 0; r < centroids.rows(); ++r) {
    if (sizes[r] != 0) continue;
    std::size_t far = points.rows();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
      if (sizes[assignments[i]] > 1 && dist[i] > far_d) {
        far_d = dist[i];
        far = i;
      }
    }
    if (far == points.rows()) break;
    --sizes[assignments[far]];
    assignments[far] = r;
    ++sizes[r];
    dist[far] = 0.0;
    auto c = centroids.row(r);
    const auto p = points.row(far);
    std::copy(p.begin(), p.end(), c.begin());
    repaired = true;
  }
  return repaired;
}

inline double update_means(const MatrixD& points, MatrixD& centroids, const std::vector<std::size_t>& assignments) {
  MatrixD sums(centroids.rows(), centroids.cols(), 0.0);
  std::vector<std::size_t> counts(centroids.rows(), 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto s = sums.row(assignments[i]);
    const auto p = points.row(i);
    for (std::size_t j = 0; j < p.size(); ++j) s[j] += p[j];
    ++counts[assignments[i]];
  }
  double shift = 0.0;
  for (std::size_t r = 0; r < centroids.rows(); ++r) {
    if (counts[r] == 0) continue;
    auto s = sums.row(r);
    for (auto& v : s) v /= static_cast<double>(counts[r]);
    shift = std::max(shift, std::sqrt(squared_distance(s, centroids.row(r))));
    auto c = centroids.row(r);
    std::copy(s.begin(), s.end(), c.begin());
  }
  return shift;
}

// Hartigan single-point transfers from a Lloyd fixed point: moving x from
// cluster a to b changes the inertia by n_b/(n_b+1)|x-c_b|^2 - n_a/(n_a-1)|x-c_a|^2,
// so any move with a negative change is applied. A converged state also has
// every point at its nearest centroid. Returns the number of moves.
inline std::size_t hartigan_refine(const MatrixD& points, MatrixD& centroids, std::vector<std::size_t>& assignments,
                                   std::size_t max_passes) {
  const std::size_t k = centroids.rows();
  std::vector<std::size_t> counts(k, 0);
  for (auto a : assignments) ++counts[a];
  std::size_t moves = 0;
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < points.rows(); ++i) {
      const std::size_t a = assignments[i];
      if (counts[a] <= 1) continue;
      const auto x = points.row(i);
      const double na = static_cast<double>(counts[a]);
      const double leave = na / (na - 1.0) * squared_distance(x, centroids.row(a));
      std::size_t best = a;
      double best_cost = leave;
      for (std::size_t b = 0; b < k; ++b) {
        if (b == a) continue;
        const double nb = static_cast<double>(counts[b]);
        const double join = nb / (nb + 1.0) * squared_distance(x, centroids.row(b));
        if (join < best_cost) {
          best_cost = join;
          best = b;
        }
      }
      // The relative margin keeps rounding noise from cycling a point.
      if (best == a || !(leave - best_cost > 1e-12 * leave)) continue;
      auto ca = centroids.row(a);
      auto cb = centroids.row(best);
      const double nb = static_cast<double>(counts[best]);
      for (std::size_t j = 0; j < x.size(); ++j) {
        ca[j] = (ca[j] * na - x[j]) / (na - 1.0);
        cb[j] = (cb[j] * nb + x[j]) / (nb + 1.0);
      }
      --counts[a];
      ++counts[best];
      assignments[i] = best;
      moved = true;
      ++moves;
    }
    if (!moved) break;
  }
  if (moves > 0) update_means(points, centroids, assignments);
  return moves;
}

inline ClusterModel lloyd(const MatrixD& points, std::size_t k, const KMeansOptions& opt, Rng& rng) {
  ClusterModel model;
  model.k = k;
  model.centroids = kmeanspp_seed(points, k, rng);
  const std::size_t m = points.rows();
  model.assignments.assign(m, k);  // sentinel: everything "changes" on the first pass
  std::vector<double> dist(m, 0.0);
  const auto inertia = [&] {
    double s = 0.0;
    for (double d : dist) s += d;
    return s;
  };
  for (std::size_t iter = 0; iter < opt.max_iter; ++iter) {
    ++model.iterations;
    const bool changed = assign_all(points, model.centroids, model.assignments, dist);
    const bool repaired = repair_empty(points, model.centroids, model.assignments, dist);
    model.inertia_trace.push_back(inertia());
    if (!changed && !repaired) break;
    if (update_means(points, model.centroids, model.assignments) < opt.tol) break;
  }
  assign_all(points, model.centroids, model.assignments, dist);
  // Lloyd fixed points can be strictly improvable by moving one point.
  if (hartigan_refine(points, model.centroids, model.assignments, opt.max_iter) > 0)
    assign_all(points, model.centroids, model.assignments, dist);
  model.inertia = inertia();
  model.inertia_trace.push_back(model.inertia);
  return model;
}

}  // namespace detail

// k-means++ seeding followed by Lloyd iterations; the lowest-inertia result
// over `restarts` seedings is returned (earliest restart on ties).
inline ClusterModel kmeans(const MatrixD& points, std::size_t k, const KMeansOptions& options = {}) {
  options.validate();
  if (k < 1) throw ConfigError("k must be >= 1");
  if (k > points.rows())
    throw DataError("k = " + std::to_string(k) + " exceeds the number of points (" + std::to_string(points.rows()) +
                    ")");
  ClusterModel best;
  for (std::size_t r = 0; r < options.restarts; ++r) {
    Rng rng(derive_seed(options.seed, 0x6b6d, r));
    ClusterModel candidate = detail::lloyd(points, k, options, rng);
    if (r == 0 || candidate.inertia < best.inertia) best = std::move(candidate);
  }
  best.dispersion = total_dispersion(best, points);
  return best;
}

// "user_id TAB cluster" per line.
inline std::string format_assignments(std::span<const std::string> user_ids, const ClusterModel& model) {
  if (user_ids.size() != model.assignments.size()) throw DataError("user id count does not match assignments");
  std::string out;
  for (std::size_t i = 0; i < user_ids.size(); ++i) {
    out += user_ids[i];
    out += '\t';
    out += std::to_string(model.assignments[i]);
    out += '\n';
  }
  return out;
}

struct ParsedAssignments {
  std::vector<std::string> user_ids;
  std::vector<std::size_t> clusters;
};

inline ParsedAssignments parse_assignments(std::string_view body) {
  ParsedAssignments out;
  std::size_t lineno = 0;
  for (auto raw : split(body, '\n')) {
    ++lineno;
    const auto line = strip_cr(raw);
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2) throw DataError("assignments line " + std::to_string(lineno) + ": expected id TAB cluster");
    out.user_ids.emplace_back(fields[0]);
    out.clusters.push_back(parse_integer<std::size_t>(fields[1]));
  }
  return out;
}

// "k N" header, then one centroid per line.
inline std::string format_centroids(const MatrixD& centroids) {
  std::string out = std::to_string(centroids.rows()) + ' ' + std::to_string(centroids.cols()) + '\n';
  for (std::size_t r = 0; r < centroids.rows(); ++r) {
    const auto row = centroids.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ' ';
      out += format_double(row[j]);
    }
    out += '\n';
  }
  return out;
}

inline MatrixD parse_centroids(std::string_view body) {
  const auto lines = split(body, '\n');
  if (lines.empty()) throw DataError("centroid file is empty");
  const auto head = split_ws(strip_cr(lines[0]));
  if (head.size() != 2) throw DataError("centroid header must be 'k N'");
  const auto k = parse_integer<std::size_t>(head[0]);
  const auto n = parse_integer<std::size_t>(head[1]);
  MatrixD c(k, n);
  std::size_t row = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto line = strip_cr(lines[li]);
    if (line.empty()) continue;
    const auto fields = split_ws(line);
    if (row >= k || fields.size() != n) throw DataError("centroid line " + std::to_string(li + 1) + " malformed");
    for (std::size_t j = 0; j < n; ++j) c(row, j) = parse_double(fields[j]);
    ++row;
  }
  if (row != k) throw DataError("centroid file declares " + std::to_string(k) + " rows, found " + std::to_string(row));
  return c;
}

}  // namespace tweetopics
