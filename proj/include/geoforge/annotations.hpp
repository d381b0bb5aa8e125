#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geoforge/geom.hpp"

namespace geoforge::io {

inline constexpr const char* kAnnotSchema = "geoforge-annot/1";

struct ImageRef {
  std::string path;
  std::string path2;  // second view for twoview checks
  int width = 0;
  int height = 0;
  std::optional<double> focal_px;
  bool operator==(const ImageRef&) const = default;
};

struct AnnotPoint {
  double x = 0.0;
  double y = 0.0;
  /// Coordinates on a world plane with known metric structure.
  std::optional<std::pair<double, double>> world;
  std::string plane;  // groups world points by plane
  bool operator==(const AnnotPoint&) const = default;
};

struct AnnotSegment {
  std::string a, b;  // point ids
  std::string label;
  std::optional<double> length;  // known world length
  std::string units;
  bool operator==(const AnnotSegment&) const = default;
};

struct ParallelGroup {
  std::vector<std::string> segments;
  std::string role;  // "vertical", "ground" or empty
  bool operator==(const ParallelGroup&) const = default;
};

struct AngleConstraint {
  std::string first, second;  // segment ids
  double degrees = 90.0;
  bool operator==(const AngleConstraint&) const = default;
};

struct EqualAnglePair {
  std::string first_a, first_b, second_a, second_b;
  bool operator==(const EqualAnglePair&) const = default;
};

struct LengthRatio {
  std::string first, second;
  double ratio = 1.0;
  bool operator==(const LengthRatio&) const = default;
};

struct Ellipse {
  std::vector<std::string> points;
  bool operator==(const Ellipse&) const = default;
};

struct Match {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  std::string set;  // one fundamental matrix per set
  bool operator==(const Match&) const = default;
};

struct ShadowTripleRef {
  std::string top, foot, shadow;
  std::string label;
  bool operator==(const ShadowTripleRef&) const = default;
};

struct HeightTarget {
  std::string id;
  std::string foot, top;
  std::optional<double> claimed;
  bool operator==(const HeightTarget&) const = default;
};

struct ReferenceHeight {
  std::string foot, top;
  double value = 0.0;
  std::string units;
  std::vector<HeightTarget> targets;
  bool operator==(const ReferenceHeight&) const = default;
};

struct PlaneMeasure {
  std::string a, b;  // point ids
  std::optional<double> claimed;
  bool operator==(const PlaneMeasure&) const = default;
};

struct TraceLine {
  std::string segment;                   // ground trace of the measured plane
  std::vector<std::string> parallel;     // two segments, for a non-vertical plane
  std::vector<PlaneMeasure> measure;
  std::string units;
  bool operator==(const TraceLine&) const = default;
};

struct EyePair {
  std::string id;
  std::vector<std::string> left, right;  // limbus point ids
  std::optional<double> interocular_ratio;
  bool operator==(const EyePair&) const = default;
};

struct AnnotationSet {
  ImageRef image;
  std::map<std::string, AnnotPoint> points;
  std::map<std::string, AnnotSegment> segments;
  std::map<std::string, ParallelGroup> parallel_groups;
  std::vector<AngleConstraint> angles;
  std::vector<EqualAnglePair> equal_angle_pairs;
  std::vector<LengthRatio> length_ratios;
  std::map<std::string, Ellipse> ellipses;
  std::vector<Match> correspondences;
  std::vector<ShadowTripleRef> shadow_triples;
  std::optional<ReferenceHeight> reference_height;
  std::vector<TraceLine> trace_lines;
  std::vector<EyePair> eyes;

  geom::Point2h point(const std::string& id) const;
  geom::Segment segment(const std::string& id) const;
  bool operator==(const AnnotationSet&) const = default;
};

/// Pixel coordinates span [0, width] x [0, height]; points may sit this far
/// outside.
inline constexpr double kBoundsMargin = 0.5;

AnnotationSet load_annotations(const std::string& text);
std::string save_annotations(const AnnotationSet& a);

}  // namespace geoforge::io
