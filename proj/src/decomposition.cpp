#include "abddc/decomposition.hpp"

#include <algorithm>
#include <iterator>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace abddc {

std::vector<int> Partition::sizes() const {
  std::vector<int> s(static_cast<std::size_t>(count), 0);
  for (int p : subdomain_of) ++s[static_cast<std::size_t>(p)];
  return s;
}

Partition partition_regular(const Mesh& mesh, std::array<int, 3> subs) {
  for (int d = 0; d < 3; ++d) {
    if (subs[d] < 1 || mesh.cells[d] % subs[d] != 0) {
      throw std::invalid_argument(
          "partition_regular: cell counts must be divisible by subdomains per axis");
    }
  }
  Partition p;
  p.count = subs[0] * subs[1] * subs[2];
  p.subdomain_of.resize(mesh.elements.size());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Vec3 c = element_centroid(mesh, e);
    std::array<int, 3> idx{};
    for (int d = 0; d < 3; ++d) {
      const double t = (c[d] - mesh.box.lo[d]) / (mesh.box.hi[d] - mesh.box.lo[d]);
      idx[d] = std::clamp(static_cast<int>(std::floor(t * subs[d])), 0, subs[d] - 1);
    }
    p.subdomain_of[e] = idx[0] + subs[0] * (idx[1] + subs[1] * idx[2]);
  }
  return p;
}

std::vector<std::vector<int>> element_face_adjacency(const Mesh& mesh) {
  static constexpr std::array<std::array<int, 3>, 4> kFaces{{
      {1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};
  std::unordered_map<std::uint64_t, int> first;
  first.reserve(2 * mesh.elements.size());
  std::vector<std::vector<int>> adj(mesh.elements.size());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Tet& t = mesh.elements[e];
    for (const auto& f : kFaces) {
      std::array<std::uint64_t, 3> n{static_cast<std::uint64_t>(t[f[0]]),
                                     static_cast<std::uint64_t>(t[f[1]]),
                                     static_cast<std::uint64_t>(t[f[2]])};
      std::sort(n.begin(), n.end());
      const std::uint64_t key = (n[0] << 42) | (n[1] << 21) | n[2];
      auto [it, inserted] = first.emplace(key, e);
      if (!inserted) {
        adj[e].push_back(it->second);
        adj[it->second].push_back(e);
      }
    }
  }
  return adj;
}

namespace {

// Connected components of each subdomain's element set.
std::vector<std::vector<std::vector<int>>> subdomain_components(
    const std::vector<std::vector<int>>& adj, const Partition& p) {
  std::vector<std::vector<std::vector<int>>> comps(
      static_cast<std::size_t>(p.count));
  std::vector<char> seen(adj.size(), 0);
  for (std::size_t e0 = 0; e0 < adj.size(); ++e0) {
    if (seen[e0]) continue;
    const int sd = p.subdomain_of[e0];
    std::vector<int> comp{static_cast<int>(e0)};
    seen[e0] = 1;
    for (std::size_t k = 0; k < comp.size(); ++k) {
      for (int nb : adj[comp[k]]) {
        if (!seen[nb] && p.subdomain_of[nb] == sd) {
          seen[nb] = 1;
          comp.push_back(nb);
        }
      }
    }
    comps[sd].push_back(std::move(comp));
  }
  return comps;
}

// Moves every component but the largest of each subdomain to the neighboring
// subdomain sharing the most faces with it.
void repair_connectivity(const std::vector<std::vector<int>>& adj, Partition& p) {
  for (int pass = 0; pass < 100; ++pass) {
    bool changed = false;
    auto comps = subdomain_components(adj, p);
    for (int sd = 0; sd < p.count; ++sd) {
      auto& list = comps[sd];
      if (list.size() <= 1) continue;
      std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
        return a.size() != b.size() ? a.size() > b.size() : a.front() < b.front();
      });
      for (std::size_t c = 1; c < list.size(); ++c) {
        std::map<int, int> contact;
        for (int e : list[c]) {
          for (int nb : adj[e]) {
            if (p.subdomain_of[nb] != sd) ++contact[p.subdomain_of[nb]];
          }
        }
        if (contact.empty()) continue;
        const int target = std::max_element(contact.begin(), contact.end(),
                                            [](const auto& a, const auto& b) {
                                              return a.second < b.second;
                                            })->first;
        for (int e : list[c]) p.subdomain_of[e] = target;
        changed = true;
      }
    }
    if (!changed) return;
  }
}

}  // namespace

bool subdomains_face_connected(const Mesh& mesh, const Partition& partition) {
  const auto comps = subdomain_components(element_face_adjacency(mesh), partition);
  return std::all_of(comps.begin(), comps.end(),
                     [](const auto& c) { return c.size() == 1; });
}

Partition partition_irregular(const Mesh& mesh, int n, std::uint64_t seed) {
  const int ne = mesh.num_elements();
  if (n < 1 || n > ne) {
    throw std::invalid_argument("partition_irregular: need 1 <= N <= element count");
  }
  Partition p;
  p.count = n;
  p.subdomain_of.assign(static_cast<std::size_t>(ne), -1);
  const auto adj = element_face_adjacency(mesh);

  std::vector<Vec3> centroid(static_cast<std::size_t>(ne));
  for (int e = 0; e < ne; ++e) centroid[e] = element_centroid(mesh, e);
  auto dist2 = [&](int a, int b) {
    double s = 0.0;
    for (int d = 0; d < 3; ++d) {
      const double t = centroid[a][d] - centroid[b][d];
      s += t * t;
    }
    return s;
  };

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, ne - 1);
  std::vector<int> seeds{pick(rng)};
  std::vector<double> dmin(static_cast<std::size_t>(ne),
                           std::numeric_limits<double>::infinity());
  while (static_cast<int>(seeds.size()) < n) {
    const int last = seeds.back();
    for (int e = 0; e < ne; ++e) dmin[e] = std::min(dmin[e], dist2(e, last));
    const int next = static_cast<int>(
        std::max_element(dmin.begin(), dmin.end()) - dmin.begin());
    seeds.push_back(next);
  }

  std::vector<std::deque<int>> frontier(static_cast<std::size_t>(n));
  std::vector<int> size(static_cast<std::size_t>(n), 0);
  for (int s = 0; s < n; ++s) frontier[s].push_back(seeds[s]);
  int assigned = 0;
  while (assigned < ne) {
    int grow = -1;
    for (int s = 0; s < n; ++s) {
      if (frontier[s].empty()) continue;
      if (grow < 0 || size[s] < size[grow]) grow = s;
    }
    if (grow < 0) break;
    auto& q = frontier[grow];
    while (!q.empty() && p.subdomain_of[q.front()] >= 0) q.pop_front();
    if (q.empty()) continue;
    const int e = q.front();
    q.pop_front();
    p.subdomain_of[e] = grow;
    ++size[grow];
    ++assigned;
    for (int nb : adj[e]) {
      if (p.subdomain_of[nb] < 0) q.push_back(nb);
    }
  }
  // Only reachable for a disconnected mesh.
  for (int e = 0; e < ne; ++e) {
    if (p.subdomain_of[e] < 0) p.subdomain_of[e] = 0;
  }
  repair_connectivity(adj, p);
  return p;
}

void write_partition(const Partition& partition, std::ostream& os) {
  for (std::size_t e = 0; e < partition.subdomain_of.size(); ++e) {
    os << e << ' ' << partition.subdomain_of[e] << '\n';
  }
}

std::string_view to_string(GlobKind kind) {
  switch (kind) {
    case GlobKind::face: return "face";
    case GlobKind::edge: return "edge";
    case GlobKind::vertex: return "vertex";
  }
  return "unknown";
}

int Glob::sharer_position(int subdomain) const {
  const auto it = std::lower_bound(sharers.begin(), sharers.end(), subdomain);
  if (it == sharers.end() || *it != subdomain) return -1;
  return static_cast<int>(it - sharers.begin());
}

int GlobSet::count(GlobKind kind) const {
  return static_cast<int>(std::count_if(globs.begin(), globs.end(),
                                        [kind](const Glob& g) { return g.kind == kind; }));
}

namespace {

// Connected components of `members` in the node graph.
std::vector<std::vector<int>> node_components(
    const std::vector<int>& members, const std::vector<std::vector<int>>& graph,
    std::vector<int>& mark, int stamp) {
  for (int v : members) mark[v] = stamp;
  std::vector<std::vector<int>> comps;
  for (int v0 : members) {
    if (mark[v0] != stamp) continue;
    std::vector<int> comp{v0};
    mark[v0] = stamp + 1;
    for (std::size_t k = 0; k < comp.size(); ++k) {
      for (int w : graph[comp[k]]) {
        if (mark[w] == stamp) {
          mark[w] = stamp + 1;
          comp.push_back(w);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

}  // namespace

GlobSet classify_globs(const Mesh& mesh, const Partition& partition,
                       const std::vector<bool>& dirichlet) {
  const int nn = mesh.num_nodes();
  GlobSet gs;
  gs.num_subdomains = partition.count;
  gs.node_sharers.assign(static_cast<std::size_t>(nn), {});
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const int sd = partition.subdomain_of[e];
    for (int v : mesh.elements[e]) {
      auto& s = gs.node_sharers[v];
      const auto it = std::lower_bound(s.begin(), s.end(), sd);
      if (it == s.end() || *it != sd) s.insert(it, sd);
    }
  }

  gs.node_to_interface.assign(static_cast<std::size_t>(nn), -1);
  for (int v = 0; v < nn; ++v) {
    if (!dirichlet[v] && gs.node_sharers[v].size() >= 2) {
      gs.node_to_interface[v] = static_cast<int>(gs.interface_nodes.size());
      gs.interface_nodes.push_back(v);
    }
  }

  // Mesh-edge graph restricted to interface nodes.
  std::vector<std::vector<int>> graph(static_cast<std::size_t>(nn));
  for (const Tet& t : mesh.elements) {
    for (int a = 0; a < 4; ++a) {
      for (int b = a + 1; b < 4; ++b) {
        if (gs.node_to_interface[t[a]] < 0 || gs.node_to_interface[t[b]] < 0) continue;
        graph[t[a]].push_back(t[b]);
        graph[t[b]].push_back(t[a]);
      }
    }
  }
  for (auto& g : graph) {
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
  }

  std::map<std::vector<int>, std::vector<int>> groups;
  for (int v : gs.interface_nodes) groups[gs.node_sharers[v]].push_back(v);

  std::vector<int> mark(static_cast<std::size_t>(nn), 0);
  int stamp = 1;
  std::vector<std::vector<int>> faces, edges, vertices;
  // Edge component id per node, used to detect edge-edge contacts.
  std::vector<int> edge_comp(static_cast<std::size_t>(nn), -1);
  std::vector<std::vector<int>> edge_candidates;
  for (const auto& [sigma, members] : groups) {
    auto comps = node_components(members, graph, mark, stamp);
    stamp += 2;
    for (auto& c : comps) {
      if (sigma.size() == 2) {
        faces.push_back(std::move(c));
      } else if (c.size() == 1) {
        vertices.push_back(std::move(c));
      } else {
        for (int v : c) edge_comp[v] = static_cast<int>(edge_candidates.size());
        edge_candidates.push_back(std::move(c));
      }
    }
  }

  std::vector<char> promoted(static_cast<std::size_t>(nn), 0);
  for (const auto& c : edge_candidates) {
    for (int v : c) {
      for (int w : graph[v]) {
        const auto& sv = gs.node_sharers[v];
        const auto& sw = gs.node_sharers[w];
        if (edge_comp[w] < 0 || edge_comp[w] == edge_comp[v] || sv == sw ||
            std::includes(sw.begin(), sw.end(), sv.begin(), sv.end())) {
          continue;
        }
        // Two edges that already meet at a common junction stay edges.
        std::vector<int> joint;
        std::set_union(sv.begin(), sv.end(), sw.begin(), sw.end(), std::back_inserter(joint));
        bool junction = false;
        for (int u : graph[v]) {
          const auto& su = gs.node_sharers[u];
          if (std::binary_search(graph[w].begin(), graph[w].end(), u) &&
              std::includes(su.begin(), su.end(), joint.begin(), joint.end())) {
            junction = true;
            break;
          }
        }
        if (!junction) promoted[v] = 1;
      }
    }
  }
  for (const auto& c : edge_candidates) {
    std::vector<int> rest;
    for (int v : c) {
      if (promoted[v]) {
        vertices.push_back({v});
      } else {
        rest.push_back(v);
      }
    }
    if (rest.empty()) continue;
    for (auto& r : node_components(rest, graph, mark, stamp)) {
      if (r.size() == 1) {
        vertices.push_back(std::move(r));
      } else {
        edges.push_back(std::move(r));
      }
    }
    stamp += 2;
  }

  auto by_sharers = [&](const std::vector<int>& a, const std::vector<int>& b) {
    const auto& sa = gs.node_sharers[a.front()];
    const auto& sb = gs.node_sharers[b.front()];
    return sa != sb ? sa < sb : a.front() < b.front();
  };
  std::sort(faces.begin(), faces.end(), by_sharers);
  std::sort(edges.begin(), edges.end(), by_sharers);
  std::sort(vertices.begin(), vertices.end(), by_sharers);

  auto add = [&](GlobKind kind, std::vector<std::vector<int>>& list) {
    for (auto& nodes : list) {
      Glob g;
      g.id = static_cast<int>(gs.globs.size());
      g.kind = kind;
      g.sharers = gs.node_sharers[nodes.front()];
      for (int v : nodes) g.dofs.push_back(gs.node_to_interface[v]);
      g.nodes = std::move(nodes);
      gs.globs.push_back(std::move(g));
    }
  };
  add(GlobKind::face, faces);
  add(GlobKind::edge, edges);
  add(GlobKind::vertex, vertices);

  gs.glob_of_dof.assign(gs.interface_nodes.size(), -1);
  gs.subdomain_globs.assign(static_cast<std::size_t>(partition.count), {});
  for (const Glob& g : gs.globs) {
    for (int d : g.dofs) gs.glob_of_dof[d] = g.id;
    for (int s : g.sharers) gs.subdomain_globs[s].push_back(g.id);
  }
  return gs;
}

}  // namespace abddc
