#pragma once

#include <string>
#include <vector>

#include "geoforge/geom.hpp"
#include "geoforge/verdict.hpp"

namespace geoforge::shadow {

using geom::Homography;
using geom::Line2h;
using geom::Mat3;
using geom::Point2h;

struct ShadowTriple {
  Point2h t;  // object top
  Point2h f;  // foot, on the ground
  Point2h s;  // shadow of the top
  std::string label;
};

struct PlanarHomology {
  Point2h vertex;
  Line2h axis;
  double mu = 1.0;
};

struct Vertex {
  Point2h point;
  /// Light rays parallel in the image (light at infinity, seen fronto-parallel).
  bool ideal = false;
};

/// Meet of the two light rays t_i s_i.
Vertex homology_vertex(const ShadowTriple& a, const ShadowTriple& b);

/// |((t2 x t1) x (s2 x s1)) . axis| with every factor unit-normalized, in
/// coordinates normalized over the six points. The axis defaults to f2 x f1.
double axis_consistency_residual(const ShadowTriple& a, const ShadowTriple& b);
double axis_consistency_residual(const ShadowTriple& a, const ShadowTriple& b, const Line2h& axis);

/// The homology's characteristic ratio mu for one triple, using
/// i = meet(line(vertex, t), axis).
double homology_cross_ratio(const ShadowTriple& tr, const Point2h& vertex, const Line2h& axis);

/// I + (mu - 1) v l^T / (v^T l), unscaled.
Mat3 homology_matrix(const Point2h& vertex, const Line2h& axis, double mu);
Homography build_homology(const Point2h& vertex, const Line2h& axis, double mu);

struct Thresholds {
  double tau_mu_pct = 5.0;
  double tau_axis = 1e-2;
};

struct PairRow {
  std::size_t a = 0;
  std::size_t b = 0;
  std::string label_a;
  std::string label_b;
  double mu_a = 0.0;
  double mu_b = 0.0;
  double diff_ratio_pct = 0.0;
  double axis_residual = 0.0;
  bool ideal_vertex = false;
  Point2h vertex;
  Verdict verdict = Verdict::consistent;
};

struct ShadowReport {
  Line2h axis;
  /// Least-squares meet of all light rays (three or more triples). The pair
  /// rows keep their own vertex so a bad triple does not smear into good pairs.
  Point2h vertex;
  /// Foot distances from the common axis in normalized units (three or more triples).
  std::vector<double> foot_residuals;
  /// Light-ray distances from their common vertex, same units and condition.
  std::vector<double> ray_residuals;
  std::vector<PairRow> rows;
  Verdict verdict = Verdict::consistent;
};

ShadowReport shadow_composite_check(const std::vector<ShadowTriple>& triples,
                                    const Thresholds& th = {});

}  // namespace geoforge::shadow
