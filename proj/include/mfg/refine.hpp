#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mfg/mesh.hpp"

namespace mfg {

struct MarkedSet {
  std::vector<int> elements; // in the order they were selected
  double theta = 0.0;
  /// sum_i (sum_{K in M} eta_{K,i}^2)^(1/2) divided by sum_i eta_res,i.
  double achieved_fraction = 0.0;
};

/// Bulk-chasing marking on two indicator families.
///
/// Elements are added greedily in order of decreasing eta1^2 + eta2^2 (ties by
/// index) until sum_i ||eta_i restricted to M|| >= theta * sum_i ||eta_i||.
MarkedSet doerfler_mark(std::span<const double> eta1, std::span<const double> eta2, double theta);

/// Marking inequality left-hand side for an arbitrary subset.
double marked_mass(std::span<const double> eta1, std::span<const double> eta2, std::span<const int> subset);

struct Refinement {
  MeshPtr mesh;
  /// For every vertex of the refined mesh that did not exist before, the two
  /// endpoints of the bisected parent edge; indexed by (v - old vertex count).
  std::vector<std::array<int, 2>> new_vertex_parents;
  int old_num_vertices = 0;

  /// Interpolates a P1 coefficient vector from the parent mesh.
  Eigen::VectorXd prolongate(const Eigen::VectorXd& coarse) const;
};

/// Newest vertex bisection with conformity closure.
Refinement refine_nvb_detailed(const Mesh& mesh, std::span<const int> marked);
MeshPtr refine_nvb(const Mesh& mesh, const MarkedSet& marked);

/// Two NVB sweeps over all elements (every triangle split into four).
Refinement uniform_refine_detailed(const Mesh& mesh);
MeshPtr uniform_refine(const Mesh& mesh);

} // namespace mfg
