#include "abddc/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace abddc {

namespace {

void check_element(const Mesh& mesh, int elem) {
  if (elem < 0 || elem >= mesh.num_elements()) {
    throw std::invalid_argument("element index out of range: " +
                                std::to_string(elem));
  }
}

}  // namespace

std::array<Vec3, 4> Mesh::vertices(int elem) const {
  const Tet& t = elements[static_cast<std::size_t>(elem)];
  return {nodes[t[0]], nodes[t[1]], nodes[t[2]], nodes[t[3]]};
}

Mesh build_structured_mesh(std::array<int, 3> cells, const Box& box) {
  for (int d = 0; d < 3; ++d) {
    if (cells[d] < 1) {
      throw std::invalid_argument("build_structured_mesh: cell counts must be >= 1");
    }
    if (!(box.hi[d] > box.lo[d])) {
      throw std::invalid_argument("build_structured_mesh: degenerate box");
    }
  }
  Mesh mesh;
  mesh.box = box;
  mesh.cells = cells;
  const int nx = cells[0] + 1, ny = cells[1] + 1, nz = cells[2] + 1;
  auto node_id = [&](int i, int j, int k) { return i + nx * (j + ny * k); };

  mesh.nodes.reserve(static_cast<std::size_t>(nx) * ny * nz);
  mesh.boundary_tags.reserve(mesh.nodes.capacity());
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const std::array<int, 3> ijk{i, j, k};
        Vec3 p{};
        std::uint8_t tag = 0;
        for (int d = 0; d < 3; ++d) {
          // Exact endpoints so that boundary coordinates compare exactly.
          if (ijk[d] == 0) {
            p[d] = box.lo[d];
            tag |= static_cast<std::uint8_t>(1u << (2 * d));
          } else if (ijk[d] == cells[d]) {
            p[d] = box.hi[d];
            tag |= static_cast<std::uint8_t>(1u << (2 * d + 1));
          } else {
            p[d] = box.lo[d] + (box.hi[d] - box.lo[d]) * ijk[d] / cells[d];
          }
        }
        mesh.nodes.push_back(p);
        mesh.boundary_tags.push_back(tag);
      }
    }
  }

  // Kuhn subdivision: one tetrahedron per axis permutation, each a monotone
  // path from the cube corner (0,0,0) to (1,1,1).
  static constexpr std::array<std::array<int, 3>, 6> kPerms{{
      {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  mesh.elements.reserve(6u * cells[0] * cells[1] * cells[2]);
  for (int k = 0; k < cells[2]; ++k) {
    for (int j = 0; j < cells[1]; ++j) {
      for (int i = 0; i < cells[0]; ++i) {
        for (const auto& perm : kPerms) {
          std::array<int, 3> c{i, j, k};
          Tet t{};
          t[0] = node_id(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[perm[s]];
            t[s + 1] = node_id(c[0], c[1], c[2]);
          }
          const std::array<Vec3, 4> v{mesh.nodes[t[0]], mesh.nodes[t[1]],
                                      mesh.nodes[t[2]], mesh.nodes[t[3]]};
          if (tet_signed_volume(v) < 0.0) std::swap(t[2], t[3]);
          mesh.elements.push_back(t);
        }
      }
    }
  }
  return mesh;
}

double tet_diameter(const std::array<Vec3, 4>& v) {
  double best = 0.0;
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      const double dx = v[a][0] - v[b][0];
      const double dy = v[a][1] - v[b][1];
      const double dz = v[a][2] - v[b][2];
      best = std::max(best, std::sqrt(dx * dx + dy * dy + dz * dz));
    }
  }
  return best;
}

double tet_signed_volume(const std::array<Vec3, 4>& v) {
  const Vec3 a{v[1][0] - v[0][0], v[1][1] - v[0][1], v[1][2] - v[0][2]};
  const Vec3 b{v[2][0] - v[0][0], v[2][1] - v[0][1], v[2][2] - v[0][2]};
  const Vec3 c{v[3][0] - v[0][0], v[3][1] - v[0][1], v[3][2] - v[0][2]};
  const double det = a[0] * (b[1] * c[2] - b[2] * c[1]) -
                     a[1] * (b[0] * c[2] - b[2] * c[0]) +
                     a[2] * (b[0] * c[1] - b[1] * c[0]);
  return det / 6.0;
}

double element_diameter(const Mesh& mesh, int elem) {
  check_element(mesh, elem);
  return tet_diameter(mesh.vertices(elem));
}

double element_volume(const Mesh& mesh, int elem) {
  check_element(mesh, elem);
  return tet_signed_volume(mesh.vertices(elem));
}

Vec3 element_centroid(const Mesh& mesh, int elem) {
  check_element(mesh, elem);
  const auto v = mesh.vertices(elem);
  Vec3 c{0.0, 0.0, 0.0};
  for (const auto& p : v) {
    for (int d = 0; d < 3; ++d) c[d] += 0.25 * p[d];
  }
  return c;
}

void write_mesh(const Mesh& mesh, std::ostream& os) {
  const auto prec = os.precision(17);
  for (const auto& p : mesh.nodes) {
    os << "v " << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
  }
  for (const auto& t : mesh.elements) {
    os << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  }
  os.precision(prec);
}

}  // namespace abddc
