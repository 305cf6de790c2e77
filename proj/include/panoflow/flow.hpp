#pragma once

#include <filesystem>
#include <optional>

#include "panoflow/projection.hpp"

namespace panoflow {

/// Dense per-pixel flow tied to a projection. Equirect fields store
/// (delta-theta, delta-phi) in radians with u in (-pi, pi]; chart layouts
/// (TriCylinder, CubePadding) store pixel displacements within the chart.
struct FlowField {
  static constexpr uint8_t kValid = 1;
  static constexpr uint8_t kSaturated = 2;  // pole-clamped / left the chart

  ProjectionSpec spec;
  std::vector<float> u, v;
  std::vector<uint8_t> valid;

  size_t index(int x, int y) const { return static_cast<size_t>(y) * spec.width + x; }
  bool is_valid(int x, int y) const { return valid[index(x, y)] & kValid; }
  size_t size() const { return u.size(); }
};

/// Zero flow over the spec; dead canvas pixels are marked invalid.
FlowField make_flow(const ProjectionSpec& spec);

/// Pixel-unit displacement of one flow sample (equirect radians are scaled
/// by W/2pi horizontally and -H/pi vertically; chart flows pass through).
void flow_to_pixel_delta(const ProjectionSpec& spec, double u, double v,
                         double* dx, double* dy);

/// Direction the flow at chart position (x, y) points to. Equirect advances
/// theta (wrapped) then phi (clamped, setting *saturated); chart layouts
/// evaluate the chart's extended map at (x+u, y+v). Nullopt when the target
/// cannot be represented in the chart.
std::optional<Vec3> chart_flow_endpoint(const ProjectionSpec& spec, int chart,
                                        double x, double y, double fu, double fv,
                                        bool* saturated = nullptr);

/// Endpoint of the stored flow at a pixel; nullopt if invalid there.
std::optional<Vec3> endpoint_dir(const FlowField& f, int x, int y);

/// Bilinear flow sample in a chart; equirect u components are blended on a
/// common wrap branch. Returns false when no valid tap contributes.
bool sample_flow(const FlowField& f, int chart, double x, double y,
                 float* fu, float* fv, uint8_t* flags = nullptr);

/// Re-expresses flow in another projection: per destination pixel, the
/// source flow is sampled at the matching direction, advanced on the
/// sphere, and re-encoded as a destination-chart displacement.
FlowField reproject_flow(const FlowField& src, const ProjectionSpec& dst_spec);

/// SFL1 container (magic, kind, dims, params, f32 u/v pairs, validity).
void write_flow(const FlowField& f, const std::filesystem::path& path);
FlowField read_flow(const std::filesystem::path& path);

/// Middlebury .flo interchange for equirect fields (pixel units on disk).
void write_flo(const FlowField& f, const std::filesystem::path& path);
FlowField read_flo(const std::filesystem::path& path);

struct FlowColorResult {
  Image image;          // RGB
  double max_magnitude; // normalization actually applied (pixels)
};

/// Color-wheel rendering: hue = direction, saturation = magnitude / max,
/// invalid pixels black. max_magnitude <= 0 selects the field's maximum.
FlowColorResult flow_to_color(const FlowField& f, double max_magnitude = 0.0);

/// Backward warp: out(p) = img(p + flow_px(p)); invalid pixels copy img.
Image warp_by_flow(const Image& img, const FlowField& f);

}  // namespace panoflow
