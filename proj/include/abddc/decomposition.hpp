#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "abddc/mesh.hpp"

namespace abddc {

/// Element-to-subdomain assignment.
struct Partition {
  std::vector<int> subdomain_of;
  int count = 0;

  [[nodiscard]] std::vector<int> sizes() const;
};

/// Box subdomains on a structured mesh; cells must be divisible by subs per
/// axis. Subdomain ids are lexicographic with x fastest.
Partition partition_regular(const Mesh& mesh, std::array<int, 3> subs_per_axis);

/// Irregular, load-balanced aggregation on the element face graph:
/// farthest-point seeding from a random element, then multi-source BFS growth
/// that always extends the currently smallest subdomain. Deterministic in
/// (mesh, n, seed).
Partition partition_irregular(const Mesh& mesh, int n, std::uint64_t seed);

/// Element pairs sharing a triangular face, as adjacency lists.
std::vector<std::vector<int>> element_face_adjacency(const Mesh& mesh);

/// True when every subdomain's element set is face-connected.
bool subdomains_face_connected(const Mesh& mesh, const Partition& partition);

void write_partition(const Partition& partition, std::ostream& os);

enum class GlobKind { face, edge, vertex };

std::string_view to_string(GlobKind kind);

/// An equivalence class of interface nodes with a common sharing set.
struct Glob {
  int id = 0;
  GlobKind kind = GlobKind::face;
  std::vector<int> nodes;    ///< mesh node ids, ascending
  std::vector<int> dofs;     ///< interface dof ids, aligned with nodes
  std::vector<int> sharers;  ///< subdomain ids, ascending

  [[nodiscard]] int size() const { return static_cast<int>(dofs.size()); }
  [[nodiscard]] int sharer_position(int subdomain) const;
};

/// Interface classification. Globs are stored faces first, then edges, then
/// vertices. Interface dofs are the free interface nodes in ascending node
/// order.
struct GlobSet {
  std::vector<Glob> globs;
  std::vector<int> interface_nodes;
  std::vector<int> node_to_interface;  ///< -1 off the interface
  std::vector<int> glob_of_dof;
  std::vector<std::vector<int>> subdomain_globs;  ///< glob ids per subdomain
  std::vector<std::vector<int>> node_sharers;     ///< for every mesh node
  int num_subdomains = 0;

  [[nodiscard]] int num_interface() const {
    return static_cast<int>(interface_nodes.size());
  }
  [[nodiscard]] int count(GlobKind kind) const;
};

/// Groups non-Dirichlet interface nodes by sharing set. Sharing sets of size
/// two give faces; larger ones are split into connected components of the
/// interface node graph, with singletons becoming vertices. Where two edges of
/// different sharing sets touch, the touching nodes become vertices.
/// Face groups are split into connected components as well.
GlobSet classify_globs(const Mesh& mesh, const Partition& partition,
                       const std::vector<bool>& dirichlet);

}  // namespace abddc
