#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geoforge/camera.hpp"
#include "geoforge/geom.hpp"
#include "geoforge/image.hpp"

namespace geoforge::twoview {

using camera::FundamentalMatrix;
using geom::Correspondence;
using geom::Homography;
using geom::Point2h;

struct RansacConfig {
  int max_iters = 2000;
  double inlier_tol = 1.5;
  int bucket_rows = 8;
  int bucket_cols = 8;
  double confidence = 0.995;
  std::uint64_t seed = 0;
};

struct HomographyFit {
  Homography h;
  std::vector<std::size_t> inliers;
  int iterations = 0;
};

struct FundamentalFit {
  FundamentalMatrix f;
  std::vector<std::size_t> inliers;
  int iterations = 0;
};

/// Bucket-stratified 4-point RANSAC; inliers by RMS symmetric transfer
/// distance, final model re-fit on the inliers.
HomographyFit ransac_homography(const std::vector<Correspondence>& matches,
                                const RansacConfig& cfg);

/// 8-point RANSAC with the same sampling, inliers by Sampson distance,
/// followed by Sampson-cost refinement on the inliers.
FundamentalFit ransac_fundamental(const std::vector<Correspondence>& matches,
                                  const RansacConfig& cfg);

/// d = 1 - NCC per pixel of image 2's frame.
struct DifferenceMap {
  int width = 0;
  int height = 0;
  std::vector<double> d;
  Mask valid;

  double at(int x, int y) const { return d[static_cast<std::size_t>(y) * width + x]; }
};

DifferenceMap difference_map(const ImageRaster& i1, const ImageRaster& i2, const Homography& h,
                             int window = 7);

struct Component {
  int min_x = 0;
  int min_y = 0;
  int max_x = 0;
  int max_y = 0;
  std::size_t area = 0;
};

struct FakeRegionMask {
  Mask mask;
  std::vector<Component> components;
  double threshold = 0.0;
  std::vector<std::string> warnings;
};

/// Labels 8-connected regions of `mask`, removing those under min_area.
std::vector<Component> label_components(Mask& mask, std::size_t min_area);

FakeRegionMask fake_mask_from_difference(const DifferenceMap& d, double c = 0.45,
                                         double d_floor = 0.1, std::size_t min_area = 25);

/// Distance from x2 to the epipolar line F x1.
double epipolar_distance(const Point2h& x1, const Point2h& x2, const FundamentalMatrix& f);

/// First-order geometric error of a match under F.
double sampson_distance(const Point2h& x1, const Point2h& x2, const geom::Mat3& f);

struct FakeCandidates {
  std::vector<std::size_t> psi;
  FakeRegionMask mask;
};

FakeCandidates fake_candidates(const std::vector<Correspondence>& matches,
                               const FundamentalMatrix& f, double t, double dilation_radius,
                               int width, int height, std::size_t min_area = 25);

struct TwoViewConfig {
  RansacConfig ransac;
  int window = 7;
  double c = 0.45;
  double d_floor = 0.1;
  double t = 3.0;
  double dilation_radius = 12.0;
  std::size_t min_area = 25;
};

struct HDetection {
  HomographyFit fit;
  DifferenceMap diff;
  FakeRegionMask mask;
};

HDetection detect_with_homography(const ImageRaster& i1, const ImageRaster& i2,
                                  const std::vector<Correspondence>& matches,
                                  const TwoViewConfig& cfg);

struct FDetection {
  FundamentalFit fit;
  FakeCandidates candidates;
};

FDetection detect_with_fundamental(const std::vector<Correspondence>& matches, int width,
                                   int height, const TwoViewConfig& cfg);

}  // namespace geoforge::twoview
