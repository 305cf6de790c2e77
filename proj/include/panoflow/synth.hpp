#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "panoflow/flow.hpp"
#include "panoflow/image.hpp"
#include "panoflow/projection.hpp"
#include "panoflow/vec.hpp"

namespace panoflow {

/// Rigid object-to-world transform: X_world = R * X_local + t.
struct RigidMotion {
  Mat3 rotation;
  Vec3 translation;
};

/// Camera-to-world: d_world = R * d_cam, rays start at position.
struct CameraPose {
  Mat3 rotation;
  Vec3 position;
};

struct ProceduralTexture {
  enum class Kind { Checker, Noise };
  Kind kind = Kind::Checker;
  double scale = 1.0;
  Vec3 color_a{0.85, 0.85, 0.85};
  Vec3 color_b{0.2, 0.2, 0.2};
  uint64_t seed = 0;

  /// Albedo at an object-local point; rigid motion carries the pattern along.
  Vec3 sample(const Vec3& local) const;
};

struct SceneObject {
  enum class Shape { Sphere, Box, GroundPlane };
  Shape shape = Shape::Sphere;
  double radius = 1.0;              // Sphere
  Vec3 box_half{0.5, 0.5, 0.5};     // Box: local AAB [-half, half]
  ProceduralTexture texture;
  std::vector<RigidMotion> poses;   // one per frame

  /// Local-frame bounding radius (infinite for the ground plane).
  double bounding_radius() const;
};

struct Scene {
  std::vector<SceneObject> objects;
  std::vector<CameraPose> camera;  // one per frame
  Vec3 light_dir = Vec3{0.4, 0.8, 0.35}.normalized();
  double ambient = 0.35;
  Vec3 sky_horizon{0.62, 0.68, 0.78};
  Vec3 sky_zenith{0.16, 0.26, 0.5};
  Vec3 sky_nadir{0.3, 0.28, 0.24};

  int frame_count() const { return static_cast<int>(camera.size()); }
};

/// Throws ConfigError on non-orthonormal transforms or an object containing
/// the camera at any frame.
void validate(const Scene& scene);

struct RayHit {
  double t = 0;
  int object = -1;
  Vec3 point_world, point_local, normal_world;
};

/// Nearest intersection along a world-space ray at a given frame.
std::optional<RayHit> trace(const Scene& scene, int frame, const Vec3& origin, const Vec3& dir);

/// Latitude-gradient sky (longitude-invariant).
Vec3 sky_color(const Scene& scene, const Vec3& dir_world);

Image render_frame(const Scene& scene, int frame, const ProjectionSpec& spec);

/// Exact rigid-scene flow from frame `from` to frame `to` on an equirect
/// grid. Sky pixels receive the camera-rotation flow of a point at infinity.
/// Occluded-at-target pixels still carry the rigid-motion flow.
FlowField ground_truth_flow(const Scene& scene, int from, int to, const ProjectionSpec& spec);

/// Two-pass visibility: 1 where the flow target is unobstructed at frame
/// `to`, 0 where it is occluded.
Image occlusion_mask(const Scene& scene, int from, int to, const ProjectionSpec& spec);

struct GenerateConfig {
  std::string schedule = "eft";  // "city" | "eft"
  int pairs = 8;
  int objects = 30;
  ProjectionSpec spec = ProjectionSpec::equirect(512, 256);
  uint64_t seed = 0;
  std::filesystem::path out_dir;
  bool backward_flows = true;
};

struct GenerateResult {
  std::filesystem::path manifest_path;
  int pairs = 0;
};

/// Writes frames (PNG), forward/backward flows (SFL1), occlusion masks (PFM)
/// and a JSON-lines manifest. Deterministic for a fixed seed.
GenerateResult generate_dataset(const GenerateConfig& cfg);

/// Ground plane plus box "vehicles" with planar motion; camera yaw/pitch/roll
/// random walks hard-clamped to +-45 degrees. euler_log (optional) receives
/// the per-frame (yaw, pitch, roll).
Scene make_city_scene(uint64_t seed, int frames, int objects,
                      std::vector<Vec3>* euler_log = nullptr);

/// Floating primitives around the camera with random rigid motions; the
/// camera rotation direction flips sign at every frame index = 0 mod 20.
/// rotation_axis (optional) receives the fixed camera spin axis.
Scene make_eft_scene(uint64_t seed, int frames, int objects,
                     Vec3* rotation_axis = nullptr, double* rotation_rate = nullptr);

}  // namespace panoflow
