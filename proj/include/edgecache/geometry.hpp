#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "edgecache/rng.hpp"

namespace edgecache {

using Vec2 = std::array<double, 2>;

enum class LayoutKind { hexagonal, explicit_coords };

// Base-station layout plus the bounded region users live in.
//
// hexagonal: BSs on a triangular lattice with spacing 2*D (D = hexagon
// inradius = cell_radius_m), filled in spiral order from the origin; the
// region is the union of the per-BS hexagons (edge normals at k*60 degrees).
//
// explicit_coords: arbitrary distinct BS positions; cells are Voronoi cells
// clipped to the bounding box of the coordinates padded by cell_radius_m.
struct NetworkLayout {
  LayoutKind kind = LayoutKind::hexagonal;
  double cell_radius_m = 0.0;
  std::vector<Vec2> bs;
  std::array<double, 4> box{};  // xmin, ymin, xmax, ymax sampling envelope

  int n_bs() const { return static_cast<int>(bs.size()); }
};

NetworkLayout build_layout_hexagonal(int n_bs, double cell_radius_m);
NetworkLayout build_layout_explicit(const std::vector<Vec2>& coords,
                                    double cell_radius_m);

// One cell of the ordered K-nearest-BS partition. order[0] is always the
// cell's own BS. Hexagonal cells with 2 <= K <= 3 carry a rigid map from the
// canonical right triangle {0 <= y <= D, 0 <= x <= y/sqrt(3)} (apex at the
// BS) so integrands can be evaluated in a shared frame.
struct Subregion {
  int cell = 0;
  int index_in_cell = 0;
  std::vector<int> order;
  double area = 0.0;
  double area_se = 0.0;  // Monte Carlo standard error (0 for closed form)
  bool has_transform = false;
  Vec2 origin{};
  std::array<double, 4> rot{};  // row-major 2x2, maps canonical -> world
};

struct SubregionOptions {
  long n_samples = 200000;  // Monte Carlo classification budget
  std::uint64_t seed = 12345;
  int n_verify = 256;  // per-triangle ordering verification samples
};

struct SubregionTable {
  int K = 1;
  std::vector<double> cell_area;
  std::vector<std::vector<Subregion>> by_cell;

  int total() const {
    int n = 0;
    for (const auto& c : by_cell) n += static_cast<int>(c.size());
    return n;
  }
};

// Partition every cell into sub-regions of constant ordered K-NN BS list.
// K = 1 collapses to one sub-region per cell. Hexagonal layouts with K <= 3
// use the exact 12-triangle split per cell; everything else is sampler-based
// with Monte Carlo areas (per-cell areas then sum exactly by construction).
SubregionTable build_subregions(const NetworkLayout& layout, int K,
                                const SubregionOptions& opt = {});

enum class FrequencyMode { colored, orthogonal };

struct FrequencyPlan {
  FrequencyMode mode = FrequencyMode::colored;
  int n_colors = 0;
  std::vector<int> color;
  std::vector<std::vector<int>> cochannel;  // per BS, includes the BS itself
};

// colored: greedy proper coloring (ascending BS index) of the conflict graph
// whose edges join BSs that appear together in some sub-region order list.
// orthogonal: one color per BS.
FrequencyPlan build_frequency_plan(const NetworkLayout& layout,
                                   const SubregionTable& subregions,
                                   FrequencyMode mode);

// Distance-sorted K nearest BS indices from a point; ties broken by index.
std::vector<int> knn_order(const NetworkLayout& layout, const Vec2& p, int K);

int nearest_bs(const NetworkLayout& layout, const Vec2& p);

bool point_in_region(const NetworkLayout& layout, const Vec2& p);

// True when p lies in the (closed) cell of BS i.
bool point_in_cell(const NetworkLayout& layout, int cell, const Vec2& p);

// Uniform sample from cell i (exact triangle decomposition for hexagonal,
// rejection from the padded box for explicit layouts).
Vec2 sample_point_in_cell(const NetworkLayout& layout, int cell, Pcg32& rng);

// Hexagonal kinds only: which of the twelve 30-degree sectors of the cell
// contains p (the triangle index used by build_subregions).
int hex_subregion_index(const NetworkLayout& layout, int cell, const Vec2& p);

double hex_cell_area(double cell_radius_m);  // 2*sqrt(3)*D^2

// Rigid map of triangle j (0..11) of a hexagonal cell: world = origin +
// rot * canonical, with the canonical triangle {0 <= y <= D, 0 <= x <=
// y/sqrt(3)} (apex at the BS). Used to evaluate integrands in a shared frame.
void hex_triangle_transform(const NetworkLayout& layout, int cell, int j,
                            Vec2& origin, std::array<double, 4>& rot);

double distance(const Vec2& a, const Vec2& b);

}  // namespace edgecache
