#pragma once

// Naive DBSCAN for cross-checking: core points from an all-pairs distance
// table, clusters as connected components of cores (union-find), border
// points given to the earliest-created adjacent cluster.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace oracle {

inline double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

inline std::vector<int> dbscan(const std::vector<std::vector<double>>& pts, double eps,
                               std::size_t min_samples) {
  const std::size_t n = pts.size();
  std::vector<std::vector<bool>> near(n, std::vector<bool>(n));
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count = 0;
    for (std::size_t j = 0; j < n; ++j) {
      near[i][j] = cosine_distance(pts[i], pts[j]) <= eps;
      count += near[i][j];
    }
    core[i] = count >= min_samples;
  }
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (core[i] && core[j] && near[i][j]) parent[root(i)] = root(j);

  // Components are numbered in order of their lowest core index, which is
  // the order an index-ordered scan discovers them.
  std::vector<int> comp_id(n, -1);
  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    const std::size_t r = root(i);
    if (comp_id[r] < 0) comp_id[r] = next++;
    label[i] = comp_id[r];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    int best = -1;
    for (std::size_t j = 0; j < n; ++j) {
      if (core[j] && near[i][j] && (best < 0 || label[j] < best)) best = label[j];
    }
    label[i] = best;
  }
  return label;
}

// Relabels clusters by first appearance so equal partitions compare equal.
inline std::vector<int> canonical(const std::vector<int>& labels) {
  std::vector<int> map;
  std::vector<int> out;
  for (int l : labels) {
    if (l < 0) {
      out.push_back(-1);
      continue;
    }
    if (static_cast<std::size_t>(l) >= map.size()) map.resize(static_cast<std::size_t>(l) + 1, -1);
    if (map[static_cast<std::size_t>(l)] < 0) {
      int used = 0;
      for (int m : map) used += m >= 0;
      map[static_cast<std::size_t>(l)] = used;
    }
    out.push_back(map[static_cast<std::size_t>(l)]);
  }
  return out;
}

}  // namespace oracle
