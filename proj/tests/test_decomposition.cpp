#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "abddc/decomposition.hpp"

using namespace abddc;

namespace {

std::vector<bool> boundary_dirichlet(const Mesh& mesh) {
  std::vector<bool> d(static_cast<std::size_t>(mesh.num_nodes()));
  for (int v = 0; v < mesh.num_nodes(); ++v) d[v] = mesh.on_boundary(v);
  return d;
}

// Sharing set of every node, computed straight from the element list.
std::vector<std::set<int>> brute_force_sharers(const Mesh& mesh, const Partition& p) {
  std::vector<std::set<int>> s(static_cast<std::size_t>(mesh.num_nodes()));
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (int v : mesh.elements[e]) s[v].insert(p.subdomain_of[e]);
  }
  return s;
}

GlobSet classify_regular(std::array<int, 3> cells, std::array<int, 3> subs, Mesh* out = nullptr) {
  const Mesh mesh = build_structured_mesh(cells, Box{});
  const Partition p = partition_regular(mesh, subs);
  GlobSet g = classify_globs(mesh, p, boundary_dirichlet(mesh));
  if (out) *out = mesh;
  return g;
}

}  // namespace

TEST_CASE("regular partition sizes and numbering") {
  const Mesh mesh = build_structured_mesh({8, 8, 8}, Box{});
  const Partition p = partition_regular(mesh, {2, 2, 2});
  CHECK(p.count == 8);
  for (int s : p.sizes()) CHECK(s == 384);

  const Partition one = partition_regular(mesh, {1, 1, 1});
  CHECK(one.count == 1);
  CHECK(std::all_of(one.subdomain_of.begin(), one.subdomain_of.end(), [](int s) { return s == 0; }));

  const Mesh small = build_structured_mesh({4, 4, 4}, Box{});
  const Partition q = partition_regular(small, {2, 2, 2});
  for (int e = 0; e < small.num_elements(); ++e) {
    const Vec3 c = element_centroid(small, e);
    const int expected = (c[0] > 0.5 ? 1 : 0) + 2 * (c[1] > 0.5 ? 1 : 0) + 4 * (c[2] > 0.5 ? 1 : 0);
    CHECK(q.subdomain_of[e] == expected);
  }
  CHECK_THROWS_AS(partition_regular(small, {3, 1, 1}), std::invalid_argument);
}

TEST_CASE("irregular partition is balanced, connected and deterministic") {
  const Mesh mesh = build_structured_mesh({20, 20, 20}, Box{});
  const Partition p = partition_irregular(mesh, 8, 1);
  CHECK(p.count == 8);
  const auto sizes = p.sizes();
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  CHECK(static_cast<double>(*hi) / *lo <= 1.3);
  CHECK(subdomains_face_connected(mesh, p));
  const Partition again = partition_irregular(mesh, 8, 1);
  CHECK(again.subdomain_of == p.subdomain_of);

  const Partition single = partition_irregular(mesh, 1, 5);
  CHECK(std::all_of(single.subdomain_of.begin(), single.subdomain_of.end(),
                    [](int s) { return s == 0; }));
  CHECK_THROWS_AS(partition_irregular(build_structured_mesh({1, 1, 1}, Box{}), 7, 1),
                  std::invalid_argument);
}

TEST_CASE("irregular partitions with 27 parts stay balanced and connected") {
  const Mesh mesh = build_structured_mesh({12, 12, 12}, Box{});
  const Partition p = partition_irregular(mesh, 27, 2024);
  const auto sizes = p.sizes();
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  CHECK(static_cast<double>(*hi) / *lo <= 1.3);
  CHECK(subdomains_face_connected(mesh, p));
}

TEST_CASE("glob counts on regular partitions") {
  SUBCASE("2x1x1: one face") {
    const GlobSet g = classify_regular({4, 4, 4}, {2, 1, 1});
    CHECK(g.count(GlobKind::face) == 1);
    CHECK(g.count(GlobKind::edge) == 0);
    CHECK(g.count(GlobKind::vertex) == 0);
  }
  SUBCASE("2x2x1: four faces and one vertical edge") {
    const GlobSet g = classify_regular({4, 4, 4}, {2, 2, 1});
    CHECK(g.count(GlobKind::face) == 4);
    REQUIRE(g.count(GlobKind::edge) == 1);
    CHECK(g.count(GlobKind::vertex) == 0);
    for (const Glob& gl : g.globs) {
      if (gl.kind == GlobKind::edge) CHECK(gl.size() == 3);
    }
  }
  SUBCASE("2x2x2: twelve faces, six edges, the centre vertex") {
    Mesh mesh;
    const GlobSet g = classify_regular({8, 8, 8}, {2, 2, 2}, &mesh);
    CHECK(g.count(GlobKind::face) == 12);
    CHECK(g.count(GlobKind::edge) == 6);
    REQUIRE(g.count(GlobKind::vertex) == 1);
    for (const Glob& gl : g.globs) {
      if (gl.kind != GlobKind::vertex) continue;
      const Vec3& x = mesh.nodes[gl.nodes[0]];
      CHECK(x[0] == doctest::Approx(0.5));
      CHECK(x[1] == doctest::Approx(0.5));
      CHECK(x[2] == doctest::Approx(0.5));
      CHECK(gl.sharers.size() == 8);
    }
  }
  SUBCASE("2x2x2 with two cells per subdomain: edge lines collapse to single nodes") {
    const GlobSet g = classify_regular({4, 4, 4}, {2, 2, 2});
    CHECK(g.count(GlobKind::edge) == 0);
    CHECK(g.count(GlobKind::vertex) == 7);
  }
}

TEST_CASE("globs partition the interface and carry the brute-force sharing sets") {
  const Mesh mesh = build_structured_mesh({10, 10, 10}, Box{});
  const Partition p = partition_irregular(mesh, 8, 3);
  const auto dirichlet = boundary_dirichlet(mesh);
  const GlobSet g = classify_globs(mesh, p, dirichlet);
  const auto sharers = brute_force_sharers(mesh, p);

  std::set<int> expected_interface;
  for (int v = 0; v < mesh.num_nodes(); ++v) {
    if (!dirichlet[v] && sharers[v].size() >= 2) expected_interface.insert(v);
  }
  CHECK(g.num_interface() == static_cast<int>(expected_interface.size()));

  std::map<int, int> seen;
  int total = 0;
  for (const Glob& gl : g.globs) {
    total += gl.size();
    for (int v : gl.nodes) {
      ++seen[v];
      CHECK(expected_interface.count(v) == 1);
      if (gl.kind == GlobKind::face) {
        CHECK(std::vector<int>(sharers[v].begin(), sharers[v].end()) == gl.sharers);
      } else {
        // Vertices promoted from edge endpoints may have a larger set than
        // the glob they were split from, never a smaller one.
        CHECK(sharers[v].size() >= 2);
      }
    }
    if (gl.kind == GlobKind::face) CHECK(gl.sharers.size() == 2);
  }
  CHECK(total == g.num_interface());
  for (const auto& [v, count] : seen) CHECK(count == 1);
}

TEST_CASE("partition dump lists one element per line") {
  const Mesh mesh = build_structured_mesh({2, 2, 2}, Box{});
  const Partition p = partition_regular(mesh, {2, 1, 1});
  std::ostringstream os;
  write_partition(p, os);
  std::istringstream in(os.str());
  int lines = 0, e = 0, s = 0;
  while (in >> e >> s) {
    CHECK(s == p.subdomain_of[e]);
    ++lines;
  }
  CHECK(lines == mesh.num_elements());
}
