#include "panoflow/synth.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <random>

#include "panoflow/errors.hpp"
#include "panoflow/parallel.hpp"
#include "panoflow/util.hpp"

namespace panoflow {

namespace {

constexpr double kRayEps = 1e-9;

double fade(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(uint64_t seed, const Vec3& p) {
  const double fx = std::floor(p.x), fy = std::floor(p.y), fz = std::floor(p.z);
  const int64_t ix = static_cast<int64_t>(fx), iy = static_cast<int64_t>(fy),
                iz = static_cast<int64_t>(fz);
  const double tx = fade(p.x - fx), ty = fade(p.y - fy), tz = fade(p.z - fz);
  double acc[2][2];
  for (int dy = 0; dy < 2; ++dy)
    for (int dz = 0; dz < 2; ++dz) {
      const double v0 = hash01(seed, ix, iy + dy, iz + dz);
      const double v1 = hash01(seed, ix + 1, iy + dy, iz + dz);
      acc[dy][dz] = v0 + (v1 - v0) * tx;
    }
  const double a = acc[0][0] + (acc[0][1] - acc[0][0]) * tz;
  const double b = acc[1][0] + (acc[1][1] - acc[1][0]) * tz;
  return a + (b - a) * ty;
}

double fractal_noise(uint64_t seed, Vec3 p) {
  double sum = 0, amp = 0.55, total = 0;
  for (int octave = 0; octave < 3; ++octave) {
    sum += amp * value_noise(seed + octave * 7919, p);
    total += amp;
    p = p * 2.03;
    amp *= 0.5;
  }
  return sum / total;
}

Vec3 lerp(const Vec3& a, const Vec3& b, double t) { return a + (b - a) * t; }

}  // namespace

Vec3 ProceduralTexture::sample(const Vec3& local) const {
  const Vec3 p = local / std::max(scale, 1e-9);
  if (kind == Kind::Checker) {
    // Soft parity field keeps warps resolvable under bilinear resampling.
    const double s = std::sin(kPi * p.x) * std::sin(kPi * p.y + 0.7) * std::sin(kPi * p.z + 1.3);
    return lerp(color_a, color_b, smoothstep(-0.25, 0.25, s));
  }
  return lerp(color_a, color_b, fractal_noise(seed, p));
}

double SceneObject::bounding_radius() const {
  switch (shape) {
    case Shape::Sphere: return radius;
    case Shape::Box: return box_half.norm();
    default: return std::numeric_limits<double>::infinity();
  }
}

void validate(const Scene& scene) {
  if (scene.camera.empty()) throw ConfigError("scene: no camera frames");
  const int frames = scene.frame_count();
  for (const auto& cam : scene.camera)
    if (cam.rotation.orthonormal_error() > 1e-9 || cam.rotation.det() < 0)
      throw ConfigError("scene: camera rotation not orthonormal");
  for (const auto& obj : scene.objects) {
    if (static_cast<int>(obj.poses.size()) != frames)
      throw ConfigError("scene: object pose count != frame count");
    for (const auto& pose : obj.poses)
      if (pose.rotation.orthonormal_error() > 1e-9 || pose.rotation.det() < 0)
        throw ConfigError("scene: object rotation not orthonormal");
  }
  // Collision rule: the camera must never sit inside an object.
  for (int t = 0; t < frames; ++t) {
    const Vec3 cam = scene.camera[t].position;
    for (const auto& obj : scene.objects) {
      const RigidMotion& pose = obj.poses[t];
      const Vec3 local = pose.rotation.transposed() * (cam - pose.translation);
      bool inside = false;
      if (obj.shape == SceneObject::Shape::Sphere) {
        inside = local.norm() <= obj.radius;
      } else if (obj.shape == SceneObject::Shape::Box) {
        inside = std::abs(local.x) <= obj.box_half.x && std::abs(local.y) <= obj.box_half.y &&
                 std::abs(local.z) <= obj.box_half.z;
      }
      if (inside) throw ConfigError("scene: camera inside an object");
    }
  }
}

std::optional<RayHit> trace(const Scene& scene, int frame, const Vec3& origin, const Vec3& dir) {
  RayHit best;
  best.t = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < scene.objects.size(); ++k) {
    const SceneObject& obj = scene.objects[k];
    const RigidMotion& pose = obj.poses[frame];
    const Mat3 rt = pose.rotation.transposed();
    const Vec3 o = rt * (origin - pose.translation);
    const Vec3 d = rt * dir;

    double t = -1;
    Vec3 nl;
    switch (obj.shape) {
      case SceneObject::Shape::Sphere: {
        const double b = o.dot(d);
        const double c = o.norm2() - obj.radius * obj.radius;
        const double disc = b * b - c;
        if (disc < 0) continue;
        const double sq = std::sqrt(disc);
        t = -b - sq;
        if (t < kRayEps) t = -b + sq;
        if (t < kRayEps) continue;
        nl = (o + d * t) / obj.radius;
        break;
      }
      case SceneObject::Shape::Box: {
        double tmin = -std::numeric_limits<double>::infinity();
        double tmax = std::numeric_limits<double>::infinity();
        const double oo[3] = {o.x, o.y, o.z}, dd[3] = {d.x, d.y, d.z};
        const double hh[3] = {obj.box_half.x, obj.box_half.y, obj.box_half.z};
        bool miss = false;
        for (int a = 0; a < 3; ++a) {
          if (std::abs(dd[a]) < 1e-14) {
            if (std::abs(oo[a]) > hh[a]) { miss = true; break; }
            continue;
          }
          double t0 = (-hh[a] - oo[a]) / dd[a];
          double t1 = (hh[a] - oo[a]) / dd[a];
          if (t0 > t1) std::swap(t0, t1);
          tmin = std::max(tmin, t0);
          tmax = std::min(tmax, t1);
          if (tmin > tmax) { miss = true; break; }
        }
        if (miss) continue;
        t = tmin >= kRayEps ? tmin : tmax;
        if (t < kRayEps) continue;
        const Vec3 hp = o + d * t;
        const double rx = std::abs(hp.x) / hh[0], ry = std::abs(hp.y) / hh[1],
                     rz = std::abs(hp.z) / hh[2];
        if (rx >= ry && rx >= rz) nl = {hp.x > 0 ? 1.0 : -1.0, 0, 0};
        else if (ry >= rz) nl = {0, hp.y > 0 ? 1.0 : -1.0, 0};
        else nl = {0, 0, hp.z > 0 ? 1.0 : -1.0};
        break;
      }
      case SceneObject::Shape::GroundPlane: {
        if (std::abs(d.y) < 1e-14) continue;
        t = -o.y / d.y;
        if (t < kRayEps) continue;
        nl = {0, o.y >= 0 ? 1.0 : -1.0, 0};
        break;
      }
    }
    if (t < best.t) {
      best.t = t;
      best.object = static_cast<int>(k);
      best.point_local = o + d * t;
      best.point_world = origin + dir * t;
      best.normal_world = pose.rotation * nl;
    }
  }
  if (best.object < 0) return std::nullopt;
  return best;
}

Vec3 sky_color(const Scene& scene, const Vec3& dir_world) {
  const double s = dir_world.normalized().y;  // sin(latitude)
  if (s >= 0) return lerp(scene.sky_horizon, scene.sky_zenith, s);
  return lerp(scene.sky_horizon, scene.sky_nadir, -s);
}

namespace {

Vec3 shade(const Scene& scene, const RayHit& hit) {
  const SceneObject& obj = scene.objects[hit.object];
  const Vec3 albedo = obj.texture.sample(hit.point_local);
  const double lambert = std::max(0.0, hit.normal_world.dot(scene.light_dir));
  return albedo * (scene.ambient + (1.0 - scene.ambient) * lambert);
}

}  // namespace

Image render_frame(const Scene& scene, int frame, const ProjectionSpec& spec) {
  if (frame < 0 || frame >= scene.frame_count()) throw ConfigError("render_frame: bad frame");
  Image img(spec.width, spec.height, 3);
  const CameraPose& cam = scene.camera[frame];
  parallel_for(0, spec.height, [&](int y) {
    for (int x = 0; x < spec.width; ++x) {
      const int chart = chart_at(spec, x, y);
      if (chart < 0) continue;
      const auto d_cam = chart_dir(spec, chart, x, y);
      if (!d_cam) continue;
      const Vec3 d = cam.rotation * *d_cam;
      const auto hit = trace(scene, frame, cam.position, d);
      const Vec3 color = hit ? shade(scene, *hit) : sky_color(scene, d);
      img.at(x, y, 0) = static_cast<float>(color.x);
      img.at(x, y, 1) = static_cast<float>(color.y);
      img.at(x, y, 2) = static_cast<float>(color.z);
    }
  });
  return img;
}

FlowField ground_truth_flow(const Scene& scene, int from, int to, const ProjectionSpec& spec) {
  if (spec.kind != Projection::Equirect)
    throw ConfigError("ground_truth_flow: equirect target required");
  if (from < 0 || to < 0 || from >= scene.frame_count() || to >= scene.frame_count())
    throw ConfigError("ground_truth_flow: frame out of range");
  FlowField f = make_flow(spec);
  const CameraPose& cam_a = scene.camera[from];
  const CameraPose& cam_b = scene.camera[to];
  const Mat3 rb_t = cam_b.rotation.transposed();
  parallel_for(0, spec.height, [&](int y) {
    for (int x = 0; x < spec.width; ++x) {
      const double theta = (x + 0.5) / spec.width * kTwoPi - kPi;
      const double phi = kHalfPi - (y + 0.5) / spec.height * kPi;
      const Vec3 d_cam = spherical_to_dir({theta, phi});
      const Vec3 d_world = cam_a.rotation * d_cam;
      Vec3 d_next;
      if (const auto hit = trace(scene, from, cam_a.position, d_world)) {
        const SceneObject& obj = scene.objects[hit->object];
        const RigidMotion& pb = obj.poses[to];
        const Vec3 moved = pb.rotation * hit->point_local + pb.translation;
        d_next = (rb_t * (moved - cam_b.position)).normalized();
      } else {
        d_next = rb_t * d_world;  // point at infinity: rotation only
      }
      const SphericalCoord s1 = dir_to_spherical(d_next);
      const size_t i = f.index(x, y);
      f.u[i] = static_cast<float>(wrap_delta_theta(s1.theta - theta));
      f.v[i] = static_cast<float>(s1.phi - phi);
    }
  });
  return f;
}

Image occlusion_mask(const Scene& scene, int from, int to, const ProjectionSpec& spec) {
  if (spec.kind != Projection::Equirect)
    throw ConfigError("occlusion_mask: equirect target required");
  Image mask(spec.width, spec.height, 1);
  const CameraPose& cam_a = scene.camera[from];
  const CameraPose& cam_b = scene.camera[to];
  parallel_for(0, spec.height, [&](int y) {
    for (int x = 0; x < spec.width; ++x) {
      const auto d0 = chart_dir(spec, 0, x, y);
      const Vec3 d_world = cam_a.rotation * *d0;
      bool visible;
      if (const auto hit = trace(scene, from, cam_a.position, d_world)) {
        const SceneObject& obj = scene.objects[hit->object];
        const RigidMotion& pb = obj.poses[to];
        const Vec3 moved = pb.rotation * hit->point_local + pb.translation;
        const Vec3 delta = moved - cam_b.position;
        const double dist = delta.norm();
        visible = false;
        if (dist > 1e-9) {
          if (const auto vis = trace(scene, to, cam_b.position, delta / dist)) {
            visible = std::abs(vis->t - dist) <= std::max(1e-6, 1e-4 * dist);
          }
        }
      } else {
        // Sky point at infinity: translation is irrelevant, only the world
        // direction must stay unobstructed at the target frame.
        visible = !trace(scene, to, cam_b.position, d_world);
      }
      mask.at(x, y) = visible ? 1.0f : 0.0f;
    }
  });
  return mask;
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec3 random_unit(Rng& rng) {
  // Marsaglia rejection keeps the distribution uniform on the sphere.
  for (;;) {
    const double x = uniform(rng, -1, 1), y = uniform(rng, -1, 1), z = uniform(rng, -1, 1);
    const double n2 = x * x + y * y + z * z;
    if (n2 > 1e-6 && n2 <= 1.0) return Vec3{x, y, z} / std::sqrt(n2);
  }
}

Vec3 random_color(Rng& rng) {
  return {uniform(rng, 0.15, 0.95), uniform(rng, 0.15, 0.95), uniform(rng, 0.15, 0.95)};
}

ProceduralTexture random_texture(Rng& rng, double object_scale) {
  ProceduralTexture tex;
  tex.kind = uniform(rng, 0, 1) < 0.5 ? ProceduralTexture::Kind::Checker
                                      : ProceduralTexture::Kind::Noise;
  tex.scale = object_scale * uniform(rng, 0.25, 0.6);
  tex.color_a = random_color(rng);
  tex.color_b = random_color(rng);
  tex.seed = rng();
  return tex;
}

/// Linear-motion bounding check over the whole clip, with margin.
bool paths_clear(const Vec3& c0, const Vec3& v0, double r0, const Vec3& c1, const Vec3& v1,
                 double r1, int frames, double margin) {
  for (int t = 0; t < frames; ++t) {
    const Vec3 p0 = c0 + v0 * t, p1 = c1 + v1 * t;
    if ((p0 - p1).norm() < r0 + r1 + margin) return false;
  }
  return true;
}

}  // namespace

Scene make_city_scene(uint64_t seed, int frames, int objects, std::vector<Vec3>* euler_log) {
  Rng rng(derive_seed(seed, 0xC1717ULL));
  Scene scene;

  // Camera: height 1 above the ground, slow planar drift, orientation random
  // walk clamped to +-45 degrees on every axis.
  const Vec3 cam_drift{uniform(rng, -0.05, 0.05), 0.0, uniform(rng, -0.05, 0.05)};
  double yaw = 0, pitch = 0, roll = 0;
  const double bound = kPi / 4;
  if (euler_log) euler_log->clear();
  for (int t = 0; t < frames; ++t) {
    CameraPose cam;
    cam.position = Vec3{0, 1.0, 0} + cam_drift * t;
    cam.rotation = Mat3::rotation_y(yaw) * Mat3::rotation_z(pitch) * Mat3::rotation_x(roll);
    scene.camera.push_back(cam);
    if (euler_log) euler_log->push_back({yaw, pitch, roll});
    yaw = std::clamp(yaw + uniform(rng, -0.03, 0.03), -bound, bound);
    pitch = std::clamp(pitch + uniform(rng, -0.015, 0.015), -bound, bound);
    roll = std::clamp(roll + uniform(rng, -0.015, 0.015), -bound, bound);
  }

  SceneObject ground;
  ground.shape = SceneObject::Shape::GroundPlane;
  ground.texture.kind = ProceduralTexture::Kind::Noise;
  ground.texture.scale = 2.2;
  ground.texture.color_a = {0.3, 0.29, 0.27};
  ground.texture.color_b = {0.55, 0.52, 0.46};
  ground.texture.seed = rng();
  ground.poses.assign(frames, RigidMotion{});
  scene.objects.push_back(ground);

  struct Placed {
    Vec3 center, vel;
    double radius;
  };
  std::vector<Placed> placed;
  for (int k = 0; k < objects; ++k) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      SceneObject box;
      box.shape = SceneObject::Shape::Box;
      box.box_half = {uniform(rng, 0.25, 0.8), uniform(rng, 0.15, 0.5), uniform(rng, 0.3, 1.0)};
      const double rho = std::sqrt(uniform(rng, 2.5 * 2.5, 14.0 * 14.0));
      const double ang = uniform(rng, -kPi, kPi);
      const Vec3 center{rho * std::cos(ang), box.box_half.y, rho * std::sin(ang)};
      const double heading = uniform(rng, -kPi, kPi);
      const double speed = uniform(rng, 0.02, 0.12);
      const Vec3 vel{speed * std::cos(heading), 0, speed * std::sin(heading)};
      const double yaw_rate = uniform(rng, -0.01, 0.01);
      const double yaw0 = heading;  // vehicles face their travel direction
      const double rb = box.bounding_radius();

      bool ok = paths_clear(center, vel, rb, scene.camera[0].position, cam_drift, 0.0,
                            frames, 0.6);
      for (const auto& other : placed)
        if (ok) ok = paths_clear(center, vel, rb, other.center, other.vel, other.radius,
                                 frames, 0.25);
      if (!ok) continue;

      box.texture = random_texture(rng, std::max(box.box_half.x, box.box_half.z));
      for (int t = 0; t < frames; ++t) {
        RigidMotion m;
        m.rotation = Mat3::rotation_y(yaw0 + yaw_rate * t);
        m.translation = center + vel * t;
        box.poses.push_back(m);
      }
      scene.objects.push_back(box);
      placed.push_back({center, vel, rb});
      break;
    }
  }
  validate(scene);
  return scene;
}

Scene make_eft_scene(uint64_t seed, int frames, int objects, Vec3* rotation_axis,
                     double* rotation_rate) {
  Rng rng(derive_seed(seed, 0xEF7ULL));
  Scene scene;

  const Vec3 axis = random_unit(rng);
  const double rate = uniform(rng, 0.012, 0.03);
  if (rotation_axis) *rotation_axis = axis;
  if (rotation_rate) *rotation_rate = rate;
  Mat3 orient = Mat3::identity();
  for (int t = 0; t < frames; ++t) {
    scene.camera.push_back({orient, Vec3{0, 0, 0}});
    // Angular velocity sign flips whenever the NEXT frame index hits a
    // multiple of 20, i.e. velocity over [t, t+1) uses sign of floor(t/20).
    const double sign = (t / 20) % 2 == 0 ? 1.0 : -1.0;
    orient = Mat3::axis_angle(axis, sign * rate) * orient;
  }

  struct Placed {
    Vec3 center, vel;
    double radius;
  };
  std::vector<Placed> placed;
  for (int k = 0; k < objects; ++k) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      SceneObject obj;
      double rb;
      if (uniform(rng, 0, 1) < 0.5) {
        obj.shape = SceneObject::Shape::Sphere;
        obj.radius = uniform(rng, 0.25, 0.7);
        rb = obj.radius;
      } else {
        obj.shape = SceneObject::Shape::Box;
        obj.box_half = {uniform(rng, 0.15, 0.55), uniform(rng, 0.15, 0.55),
                        uniform(rng, 0.15, 0.55)};
        rb = obj.bounding_radius();
      }
      const Vec3 center = random_unit(rng) * uniform(rng, 2.0, 8.0);
      const Vec3 vel = random_unit(rng) * uniform(rng, 0.01, 0.12);

      bool ok = paths_clear(center, vel, rb, Vec3{0, 0, 0}, Vec3{0, 0, 0}, 0.0, frames, 0.8);
      for (const auto& other : placed)
        if (ok) ok = paths_clear(center, vel, rb, other.center, other.vel, other.radius,
                                 frames, 0.2);
      if (!ok) continue;

      obj.texture = random_texture(rng, rb);
      const Vec3 spin_axis = random_unit(rng);
      const double spin_rate = uniform(rng, 0.0, 0.035);
      const Mat3 base = Mat3::axis_angle(random_unit(rng), uniform(rng, -kPi, kPi));
      for (int t = 0; t < frames; ++t) {
        RigidMotion m;
        m.rotation = Mat3::axis_angle(spin_axis, spin_rate * t) * base;
        m.translation = center + vel * t;
        obj.poses.push_back(m);
      }
      scene.objects.push_back(obj);
      placed.push_back({center, vel, rb});
      break;
    }
  }
  validate(scene);
  return scene;
}

namespace {

nlohmann::json pose_json(const CameraPose& cam) {
  nlohmann::json j;
  j["rotation"] = cam.rotation.m;
  j["position"] = {cam.position.x, cam.position.y, cam.position.z};
  return j;
}

}  // namespace

GenerateResult generate_dataset(const GenerateConfig& cfg) {
  if (cfg.pairs < 1) throw ConfigError("generate: pairs must be >= 1");
  if (cfg.schedule != "city" && cfg.schedule != "eft")
    throw ConfigError("generate: unknown schedule '" + cfg.schedule + "'");
  validate(cfg.spec);
  if (cfg.spec.kind != Projection::Equirect)
    throw ConfigError("generate: dataset frames are equirect");

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.out_dir / "frames", ec);
  fs::create_directories(cfg.out_dir / "flows", ec);
  fs::create_directories(cfg.out_dir / "occ", ec);
  if (!fs::exists(cfg.out_dir / "occ"))
    throw DataError("generate: cannot create output directory " + cfg.out_dir.string());

  const int frames = cfg.pairs + 1;
  std::vector<Vec3> euler;
  Vec3 axis{0, 1, 0};
  double rate = 0;
  const Scene scene = cfg.schedule == "city"
                          ? make_city_scene(cfg.seed, frames, cfg.objects, &euler)
                          : make_eft_scene(cfg.seed, frames, cfg.objects, &axis, &rate);

  char name[64];
  std::vector<std::string> frame_paths;
  for (int t = 0; t < frames; ++t) {
    std::snprintf(name, sizeof name, "frames/%06d.png", t);
    write_png(render_frame(scene, t, cfg.spec), cfg.out_dir / name);
    frame_paths.push_back(name);
  }

  std::ofstream manifest(cfg.out_dir / "manifest.jsonl");
  if (!manifest) throw DataError("generate: cannot write manifest");
  for (int t = 0; t < cfg.pairs; ++t) {
    std::snprintf(name, sizeof name, "flows/%06d_fw.sfl1", t);
    const std::string fw = name;
    write_flow(ground_truth_flow(scene, t, t + 1, cfg.spec), cfg.out_dir / fw);
    std::string bw;
    if (cfg.backward_flows) {
      std::snprintf(name, sizeof name, "flows/%06d_bw.sfl1", t);
      bw = name;
      write_flow(ground_truth_flow(scene, t + 1, t, cfg.spec), cfg.out_dir / bw);
    }
    std::snprintf(name, sizeof name, "occ/%06d.pfm", t);
    const std::string occ = name;
    write_pfm(occlusion_mask(scene, t, t + 1, cfg.spec), cfg.out_dir / occ);

    nlohmann::json rec;
    rec["frame_a"] = frame_paths[t];
    rec["frame_b"] = frame_paths[t + 1];
    rec["flow_ab"] = fw;
    if (!bw.empty()) rec["flow_ba"] = bw;
    rec["occlusion"] = occ;
    rec["spec"] = to_string(cfg.spec);
    rec["seed"] = cfg.seed;
    rec["schedule"] = cfg.schedule;
    rec["camera_a"] = pose_json(scene.camera[t]);
    rec["camera_b"] = pose_json(scene.camera[t + 1]);
    if (cfg.schedule == "city") {
      rec["euler_a"] = {euler[t].x, euler[t].y, euler[t].z};
      rec["euler_b"] = {euler[t + 1].x, euler[t + 1].y, euler[t + 1].z};
    } else {
      rec["camera_axis"] = {axis.x, axis.y, axis.z};
      rec["camera_rate"] = rate;
    }
    manifest << rec.dump() << "\n";
  }
  manifest.close();
  return {cfg.out_dir / "manifest.jsonl", cfg.pairs};
}

}  // namespace panoflow
