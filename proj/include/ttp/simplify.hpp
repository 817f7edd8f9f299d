// Copyright 2026 The ttp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TTP_SIMPLIFY_HPP_
#define TTP_SIMPLIFY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

#include "ttp/terrain.hpp"

namespace ttp {

// Signed perpendicular distance of p_i from the chord p_s -> p_e. Positive
// above the chord; only bumps above the plane block the track, so the cover
// test is one-sided.
inline double chord_distance(const ProfilePoint& ps, const ProfilePoint& pe,
                             const ProfilePoint& pi) {
  const double ex = pe.d - ps.d, eh = pe.h - ps.h;
  const double norm = std::hypot(ex, eh);
  return (ex * (pi.h - ps.h) - eh * (pi.d - ps.d)) / norm;
}

// True iff the chord from P[s] to P[e] covers every in-range point: signed
// deviation at most delta_m, and consecutive within-band points (|dist| <=
// delta_l) spaced at most max_gap so large potholes cannot be skipped.
inline bool covers(const Profile& P, int s, int e, const SimplifyConfig& cfg) {
  if (!(s >= 0 && e < static_cast<int>(P.size()) && s < e)) return false;
  double last_within_d = P[s].d;  // endpoints lie on the chord
  for (int i = s; i <= e; ++i) {
    const double dist = chord_distance(P[s], P[e], P[i]);
    if (dist > cfg.delta_m) return false;
    if (std::abs(dist) <= cfg.delta_l) {
      if (P[i].d - last_within_d > cfg.max_gap) return false;
      last_within_d = P[i].d;
    }
  }
  return P[e].d - last_within_d <= cfg.max_gap + 1e-12;
}

// Number of points within the delta_l band of the chord.
inline int within_count(const Profile& P, int s, int e, const SimplifyConfig& cfg) {
  int n = 0;
  for (int i = s; i <= e; ++i)
    if (std::abs(chord_distance(P[s], P[e], P[i])) <= cfg.delta_l) ++n;
  return n;
}

// Sparsity c = 1 - PN / ((d_e - d_s)/d_r + 1), clamped to [0, 1].
inline double sparsity(const Profile& P, int s, int e, const SimplifyConfig& cfg) {
  const double denom = (P[e].d - P[s].d) / cfg.d_r + 1.0;
  const double c = 1.0 - static_cast<double>(within_count(P, s, e, cfg)) / denom;
  return std::clamp(c, 0.0, 1.0);
}

struct CandidateSegment {
  int s = 0, e = 0;
  int pn = 0;  // within-band point count
};

// All chords (s, e) that cover their range. O(N^2) pairs with an O(N)
// early-exit test each.
inline std::vector<CandidateSegment> candidate_segments(const Profile& P,
                                                        const SimplifyConfig& cfg) {
  const int n = static_cast<int>(P.size());
  if (n < 2) throw TerrainError("need at least 2 profile points");
  std::vector<CandidateSegment> out;
  for (int s = 0; s < n - 1; ++s) {
    for (int e = s + 1; e < n; ++e) {
      if (covers(P, s, e, cfg)) out.push_back({s, e, within_count(P, s, e, cfg)});
    }
  }
  return out;
}

// Weighted digraph over 2N vertices: v_{2i-1} (odd, 1-based) means "p_i
// starts a segment", v_{2i} means "p_i ends one". Stored 0-based: vertex
// 2*i is the start role of p_i, 2*i+1 the end role.
struct CoverGraph {
  struct Edge {
    int to = 0;
    int cost = 0;    // 1 for segment edges, 0 for auxiliary edges
    int reward = 0;  // PN for segments, -1 for j=0 junctions, 0 otherwise
    int seg = -1;    // candidate index for segment edges
  };
  int num_points = 0;
  std::vector<std::vector<Edge>> adj;
  std::vector<CandidateSegment> candidates;

  int start_vertex(int i) const { return 2 * i; }
  int end_vertex(int i) const { return 2 * i + 1; }
};

inline CoverGraph build_graph(const Profile& P, std::vector<CandidateSegment> candidates,
                              const SimplifyConfig& cfg) {
  if (candidates.empty()) throw TerrainError("no candidate segments: surface not coverable");
  const int n = static_cast<int>(P.size());
  CoverGraph g;
  g.num_points = n;
  g.adj.assign(2 * n, {});
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    return a.s != b.s ? a.s < b.s : a.e < b.e;
  });
  g.candidates = std::move(candidates);
  for (int k = 0; k < static_cast<int>(g.candidates.size()); ++k) {
    const auto& c = g.candidates[k];
    g.adj[g.start_vertex(c.s)].push_back({g.end_vertex(c.e), 1, c.pn, k});
  }
  // Auxiliary edges from the end role of p_i to the start role of p_{i+j}.
  for (int i = 0; i < n - 1; ++i) {
    for (int j = 0; j <= cfg.n_ign; ++j) {
      if (i + j >= n) break;
      g.adj[g.end_vertex(i)].push_back({g.start_vertex(i + j), 0, j == 0 ? -1 : 0, -1});
    }
  }
  return g;
}

namespace detail {
// Reconstructs the candidate-index sequence of a shortest path by walking
// parents back from `v` to the source.
inline std::vector<int> path_segments(const std::vector<int>& parent_vertex,
                                      const std::vector<int>& parent_seg,
                                      const CoverGraph& g, int v) {
  std::vector<int> segs;
  while (parent_vertex[v] >= 0) {
    if (parent_seg[v] >= 0) segs.push_back(parent_seg[v]);
    v = parent_vertex[v];
  }
  std::reverse(segs.begin(), segs.end());
  return segs;
}

inline bool lex_less(const std::vector<int>& a, const std::vector<int>& b, const CoverGraph& g) {
  const size_t n = std::min(a.size(), b.size());
  for (size_t i = 0; i < n; ++i) {
    const auto& ca = g.candidates[a[i]];
    const auto& cb = g.candidates[b[i]];
    if (ca.s != cb.s) return ca.s < cb.s;
    if (ca.e != cb.e) return ca.e < cb.e;
  }
  return a.size() < b.size();
}
}  // namespace detail

// Shortest-path cover from v_1 to v_{2N} under the lexicographic objective
// (fewest segments, then largest total reward). Realized as scalar weight
// W*cost - reward with W greater than any achievable reward total, which is
// already nonnegative, so Dijkstra applies. Ties are broken toward the
// lexicographically smallest (start, end) segment sequence.
inline TerrainSequence optimal_coverage(const Profile& P, const CoverGraph& g,
                                        const SimplifyConfig& cfg) {
  const int n = g.num_points;
  const int source = g.start_vertex(0);
  const int target = g.end_vertex(n - 1);

  std::int64_t reward_sum = 0;
  for (const auto& c : g.candidates) reward_sum += c.pn;
  const std::int64_t W = reward_sum + 1;

  const std::int64_t inf = std::numeric_limits<std::int64_t>::max();
  std::vector<std::int64_t> dist(2 * n, inf);
  using Item = std::pair<std::int64_t, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  dist[source] = 0;
  pq.push({0, source});
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d != dist[u]) continue;
    for (const auto& e : g.adj[u]) {
      const std::int64_t nd = d + (W * e.cost - e.reward);
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        pq.push({nd, e.to});
      }
    }
  }
  if (dist[target] == inf)
    throw TerrainError("cover graph disconnected: surface not coverable");

  // Deterministic reconstruction: the graph is a DAG under (point, role)
  // order with end roles before start roles, so a single pass in that order
  // picks the lexicographically smallest tight predecessor chain.
  std::vector<int> parent_vertex(2 * n, -1), parent_seg(2 * n, -1);
  std::vector<char> settled(2 * n, 0);
  settled[source] = 1;
  std::vector<int> topo;
  topo.reserve(2 * n);
  for (int i = 0; i < n; ++i) {
    topo.push_back(g.end_vertex(i));
    topo.push_back(g.start_vertex(i));
  }
  for (int u : topo) {
    if (!settled[u] || dist[u] == inf) continue;
    for (const auto& e : g.adj[u]) {
      if (dist[u] + (W * e.cost - e.reward) != dist[e.to]) continue;
      if (!settled[e.to]) {
        settled[e.to] = 1;
        parent_vertex[e.to] = u;
        parent_seg[e.to] = e.seg;
        continue;
      }
      const int old_pv = parent_vertex[e.to], old_ps = parent_seg[e.to];
      parent_vertex[e.to] = u;
      parent_seg[e.to] = e.seg;
      auto cand = detail::path_segments(parent_vertex, parent_seg, g, e.to);
      parent_vertex[e.to] = old_pv;
      parent_seg[e.to] = old_ps;
      auto cur = detail::path_segments(parent_vertex, parent_seg, g, e.to);
      if (detail::lex_less(cand, cur, g)) {
        parent_vertex[e.to] = u;
        parent_seg[e.to] = e.seg;
      }
    }
  }

  const std::vector<int> segs = detail::path_segments(parent_vertex, parent_seg, g, target);
  TerrainSequence seq;
  seq.reserve(segs.size());
  for (int k : segs) {
    const auto& c = g.candidates[k];
    TerrainSegment s = make_segment(P[c.s], P[c.e], c.s, c.e);
    s.sparsity = sparsity(P, c.s, c.e, cfg);
    seq.push_back(s);
  }
  for (size_t i = 0; i + 1 < seq.size(); ++i)
    seq[i].h_step = seq[i + 1].p_start.h - seq[i].p_end.h;
  if (!seq.empty()) seq.back().h_step = 0.0;
  return seq;
}

// Full pipeline: candidates, graph, shortest-path cover.
inline TerrainSequence simplify_profile(const Profile& P, const SimplifyConfig& cfg) {
  cfg.validate();
  auto candidates = candidate_segments(P, cfg);
  const CoverGraph g = build_graph(P, std::move(candidates), cfg);
  return optimal_coverage(P, g, cfg);
}

}  // namespace ttp

#endif  // TTP_SIMPLIFY_HPP_
