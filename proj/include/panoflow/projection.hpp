#pragma once

#include <optional>
#include <string>

#include "panoflow/image.hpp"
#include "panoflow/sphere.hpp"

namespace panoflow {

enum class Projection : uint32_t { Equirect = 0, TriCylinder = 1, CubePadding = 2 };

/// One of the three sphere-to-image layouts, with its pixel geometry.
///
/// Conventions shared by all layouts: pixel (x, y) covers the unit square
/// [x, x+1) x [y, y+1) with its center at (x+0.5, y+0.5); continuous image
/// coordinates used throughout the API put integer positions at pixel
/// centers (so position 0.0 is the center of pixel 0).
struct ProjectionSpec {
  Projection kind = Projection::Equirect;
  int width = 0;
  int height = 0;
  double half_vfov = kPi / 4;  // TriCylinder: vertical half field of view
  int face_size = 0;           // CubePadding: face edge F in pixels
  int pad = 0;                 // CubePadding: pad width p in pixels

  static ProjectionSpec equirect(int w, int h);
  static ProjectionSpec tri_cylinder(int w, int h_total, double half_vfov = kPi / 4);
  static ProjectionSpec cube_padding(int face_size, int pad);

  int chart_count() const;
  /// TriCylinder band height (height / 3).
  int band_height() const { return height / 3; }

  bool operator==(const ProjectionSpec& o) const;
  bool operator!=(const ProjectionSpec& o) const { return !(*this == o); }
};

/// Throws ConfigError when the layout invariants are violated.
void validate(const ProjectionSpec& spec);

/// "equirect:512x256" | "tricyl:512x432[:fov=45]" (half-FOV, degrees) |
/// "cubepad:160[:pad=20]".
ProjectionSpec parse_spec(const std::string& text);
std::string to_string(const ProjectionSpec& spec);

/// Subpixel position within a chart.
struct ChartPos {
  double x = 0.0, y = 0.0;
  int chart = 0;
};

/// Chart index covering an integer pixel, or -1 in dead canvas regions.
/// For CubePadding, pad pixels report the face whose continuation fills them.
int chart_at(const ProjectionSpec& spec, int x, int y);

/// Continuous direction map of one chart, extended smoothly beyond the chart
/// bounds (Mercator bands extend in h; cube faces unfold onto the adjacent
/// face, valid while only one coordinate overflows). Returns nullopt where
/// the extension is undefined.
std::optional<Vec3> chart_dir(const ProjectionSpec& spec, int chart, double x, double y);

/// Direction of an integer pixel, nullopt in dead regions.
std::optional<Vec3> pixel_dir(const ProjectionSpec& spec, int x, int y);

/// The chart that owns direction d under the spec's ownership rule
/// (TriCylinder: nearest band equator; CubePadding: dominant axis face).
/// Ties break toward the lower chart index.
int owning_chart(const ProjectionSpec& spec, const Vec3& d);

/// Position of d within a given chart; nullopt when d cannot be represented
/// there (cylinder pole, behind a cube face). Coordinates may lie outside
/// the chart's pixel rectangle.
std::optional<ChartPos> chart_project(const ProjectionSpec& spec, int chart, const Vec3& d);

/// Position of d in its owning chart. Total for valid unit vectors.
std::optional<ChartPos> dir_to_pixel(const ProjectionSpec& spec, const Vec3& d);

/// True when the pixel is the unique representative of its direction
/// (weight-map ownership).
bool pixel_owned(const ProjectionSpec& spec, int x, int y);

/// Distortion coordinate in [0, 1]: 0 at the chart's lowest-distortion locus
/// (equirect equator, band equator, face center) and 1 at its FOV/face edge.
double distortion_coord(const ProjectionSpec& spec, int chart, double x, double y);

/// Angular margin (radians) between d and the nearest ownership boundary of
/// its owning chart: pole distance for equirect, equator-distance runner-up
/// gap for TriCylinder, face-angle runner-up gap for CubePadding.
double ownership_margin(const ProjectionSpec& spec, const Vec3& d);

/// Per-pixel solid angle S = |(P_r - P_c) x (P_d - P_c)| from the chord
/// vectors to the right/down neighbor directions, with the ownership mask
/// that counts duplicated content exactly once.
struct WeightMap {
  int width = 0, height = 0;
  std::vector<float> weight;   // steradians; 0 in dead regions
  std::vector<uint8_t> owned;  // 1 = counted
  float at(int x, int y) const { return weight[static_cast<size_t>(y) * width + x]; }
  bool owned_at(int x, int y) const { return owned[static_cast<size_t>(y) * width + x] != 0; }
};

WeightMap solid_angle_weights(const ProjectionSpec& spec);

/// Bilinear sample respecting the chart's addressing: longitude-periodic x
/// for Equirect/TriCylinder, rows clamped to the chart band, dead cube
/// pixels excluded and weights renormalized. Returns false if no valid tap.
bool sample_bilinear(const Image& img, const ProjectionSpec& spec, int chart,
                     double x, double y, float* out);

/// Projects src into dst_spec's layout (bilinear). Dead dst pixels are black.
Image resample(const ProjectionSpec& src_spec, const Image& src, const ProjectionSpec& dst_spec);

}  // namespace panoflow
