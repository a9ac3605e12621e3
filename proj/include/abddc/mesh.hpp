#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace abddc {

using Vec3 = std::array<double, 3>;
using Tet = std::array<int, 4>;

struct Box {
  Vec3 lo{0.0, 0.0, 0.0};
  Vec3 hi{1.0, 1.0, 1.0};

  [[nodiscard]] double volume() const {
    return (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]);
  }
};

/// Bit flags naming the box faces a node lies on.
enum BoxFace : std::uint8_t {
  kXLo = 1u << 0,
  kXHi = 1u << 1,
  kYLo = 1u << 2,
  kYHi = 1u << 3,
  kZLo = 1u << 4,
  kZHi = 1u << 5,
};

/// Conforming tetrahedral mesh of a box. Node numbering is lexicographic with
/// x running fastest. `boundary_tags[n]` is a BoxFace mask, zero for interior
/// nodes.
struct Mesh {
  std::vector<Vec3> nodes;
  std::vector<Tet> elements;
  std::vector<std::uint8_t> boundary_tags;
  Box box;
  std::array<int, 3> cells{0, 0, 0};

  [[nodiscard]] int num_nodes() const { return static_cast<int>(nodes.size()); }
  [[nodiscard]] int num_elements() const {
    return static_cast<int>(elements.size());
  }
  [[nodiscard]] bool on_boundary(int node) const {
    return boundary_tags[static_cast<std::size_t>(node)] != 0;
  }
  [[nodiscard]] std::array<Vec3, 4> vertices(int elem) const;
};

/// Splits each of cells[0]*cells[1]*cells[2] cubes into six Kuhn tetrahedra
/// sharing the cube's main diagonal. Throws std::invalid_argument for zero
/// counts or a degenerate box.
Mesh build_structured_mesh(std::array<int, 3> cells, const Box& box);

/// Largest pairwise vertex distance of element `elem`.
double element_diameter(const Mesh& mesh, int elem);
double tet_diameter(const std::array<Vec3, 4>& v);

/// Signed volume; positive for every element produced by this module.
double tet_signed_volume(const std::array<Vec3, 4>& v);
double element_volume(const Mesh& mesh, int elem);
Vec3 element_centroid(const Mesh& mesh, int elem);

/// Plain-text dump: "v x y z" per node then "t i0 i1 i2 i3" per element.
void write_mesh(const Mesh& mesh, std::ostream& os);

}  // namespace abddc
