#include "panoflow/projection.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include "panoflow/errors.hpp"
#include "panoflow/parallel.hpp"
#include "panoflow/util.hpp"

namespace panoflow {

namespace {

// Stacked Mercator bands: band 0 wraps the Y axis, band 1 the X axis,
// band 2 the Z axis. Matrices map band-local frames (cylinder axis = local
// +y) into world coordinates.
const std::array<Mat3, 3> kBandToWorld = {
    Mat3::identity(),
    Mat3{{0, 1, 0, -1, 0, 0, 0, 0, 1}},
    Mat3{{1, 0, 0, 0, 0, -1, 0, 1, 0}},
};

double mercator_h(double phi) { return std::asinh(std::tan(phi)); }
double mercator_phi(double h) { return 2.0 * std::atan(std::exp(h)) - kHalfPi; }

struct Face {
  Vec3 n, r, d;  // outward normal, image-right, image-down on the unit cube
};

// Cross layout: equator strip front/right/back/left plus top above and
// bottom below the front face. Adjacent faces share edges with matching
// orientation, so the strip and the vertical column are C0-continuous.
const std::array<Face, 6> kFaces = {{
    {{1, 0, 0}, {0, 0, 1}, {0, -1, 0}},    // front  (+x)
    {{0, 0, 1}, {-1, 0, 0}, {0, -1, 0}},   // right  (+z)
    {{-1, 0, 0}, {0, 0, -1}, {0, -1, 0}},  // back   (-x)
    {{0, 0, -1}, {1, 0, 0}, {0, -1, 0}},   // left   (-z)
    {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}},     // top    (+y)
    {{0, -1, 0}, {0, 0, 1}, {-1, 0, 0}},   // bottom (-y)
}};

void face_origin(const ProjectionSpec& spec, int face, int* x0, int* y0) {
  const int f = spec.face_size, p = spec.pad;
  switch (face) {
    case 0: *x0 = p; *y0 = p + f; break;
    case 1: *x0 = p + f; *y0 = p + f; break;
    case 2: *x0 = p + 2 * f; *y0 = p + f; break;
    case 3: *x0 = p + 3 * f; *y0 = p + f; break;
    case 4: *x0 = p; *y0 = p; break;
    default: *x0 = p; *y0 = p + 2 * f; break;
  }
}

double max_band_h(const ProjectionSpec& spec) {
  return mercator_h(spec.half_vfov);
}

}  // namespace

ProjectionSpec ProjectionSpec::equirect(int w, int h) {
  ProjectionSpec s;
  s.kind = Projection::Equirect;
  s.width = w;
  s.height = h;
  validate(s);
  return s;
}

ProjectionSpec ProjectionSpec::tri_cylinder(int w, int h_total, double half_vfov) {
  ProjectionSpec s;
  s.kind = Projection::TriCylinder;
  s.width = w;
  s.height = h_total;
  // quantized to f32 so in-memory specs match SFL1 round trips bit-exactly
  s.half_vfov = static_cast<float>(half_vfov);
  validate(s);
  return s;
}

ProjectionSpec ProjectionSpec::cube_padding(int face_size, int pad) {
  ProjectionSpec s;
  s.kind = Projection::CubePadding;
  s.face_size = face_size;
  s.pad = pad;
  s.width = 4 * face_size + 2 * pad;
  s.height = 3 * face_size + 2 * pad;
  validate(s);
  return s;
}

int ProjectionSpec::chart_count() const {
  switch (kind) {
    case Projection::Equirect: return 1;
    case Projection::TriCylinder: return 3;
    default: return 6;
  }
}

bool ProjectionSpec::operator==(const ProjectionSpec& o) const {
  if (kind != o.kind || width != o.width || height != o.height) return false;
  if (kind == Projection::TriCylinder && half_vfov != o.half_vfov) return false;
  if (kind == Projection::CubePadding && (face_size != o.face_size || pad != o.pad)) return false;
  return true;
}

void validate(const ProjectionSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) throw ConfigError("projection: non-positive size");
  switch (spec.kind) {
    case Projection::Equirect:
      if (spec.width != 2 * spec.height)
        throw ConfigError("equirect: width must be 2 x height");
      break;
    case Projection::TriCylinder: {
      if (spec.height % 3 != 0) throw ConfigError("tricyl: height must be divisible by 3");
      // Full sphere coverage needs every direction inside at least one
      // band: min over axes of |d.axis| <= 1/sqrt(3).
      const double min_fov = std::asin(1.0 / std::sqrt(3.0));
      if (spec.half_vfov < min_fov - 1e-12 || spec.half_vfov >= kHalfPi)
        throw ConfigError("tricyl: half FOV outside [asin(1/sqrt(3)), pi/2)");
      break;
    }
    case Projection::CubePadding:
      if (spec.face_size < 4) throw ConfigError("cubepad: face size too small");
      if (spec.pad < 0 || spec.pad >= spec.face_size)
        throw ConfigError("cubepad: pad must be in [0, face_size)");
      if (spec.width != 4 * spec.face_size + 2 * spec.pad ||
          spec.height != 3 * spec.face_size + 2 * spec.pad)
        throw ConfigError("cubepad: canvas size inconsistent with cross layout");
      break;
  }
}

ProjectionSpec parse_spec(const std::string& text) {
  const auto fail = [&] { throw ConfigError("bad projection spec: " + text); };
  std::vector<std::string> parts;
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t next = text.find(':', pos);
    parts.push_back(text.substr(pos, next == std::string::npos ? next : next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  if (parts.empty()) fail();
  const std::string& kind = parts[0];
  if (kind == "equirect" || kind == "tricyl") {
    if (parts.size() < 2) fail();
    int w = 0, h = 0;
    if (std::sscanf(parts[1].c_str(), "%dx%d", &w, &h) != 2) fail();
    if (kind == "equirect") {
      if (parts.size() > 2) fail();
      return ProjectionSpec::equirect(w, h);
    }
    double fov_deg = 45.0;
    if (parts.size() > 2) {
      if (std::sscanf(parts[2].c_str(), "fov=%lf", &fov_deg) != 1) fail();
      if (parts.size() > 3) fail();
    }
    return ProjectionSpec::tri_cylinder(w, h, fov_deg * kPi / 180.0);
  }
  if (kind == "cubepad") {
    if (parts.size() < 2) fail();
    int f = 0;
    if (std::sscanf(parts[1].c_str(), "%d", &f) != 1) fail();
    int p = f / 8;
    if (parts.size() > 2) {
      if (std::sscanf(parts[2].c_str(), "pad=%d", &p) != 1) fail();
      if (parts.size() > 3) fail();
    }
    return ProjectionSpec::cube_padding(f, p);
  }
  fail();
  return {};
}

std::string to_string(const ProjectionSpec& spec) {
  char buf[96];
  switch (spec.kind) {
    case Projection::Equirect:
      std::snprintf(buf, sizeof buf, "equirect:%dx%d", spec.width, spec.height);
      break;
    case Projection::TriCylinder:
      std::snprintf(buf, sizeof buf, "tricyl:%dx%d:fov=%.10g", spec.width, spec.height,
                    spec.half_vfov * 180.0 / kPi);
      break;
    case Projection::CubePadding:
      std::snprintf(buf, sizeof buf, "cubepad:%d:pad=%d", spec.face_size, spec.pad);
      break;
  }
  return buf;
}

int chart_at(const ProjectionSpec& spec, int x, int y) {
  if (x < 0 || y < 0 || x >= spec.width || y >= spec.height) return -1;
  switch (spec.kind) {
    case Projection::Equirect:
      return 0;
    case Projection::TriCylinder:
      return std::min(y / spec.band_height(), 2);
    case Projection::CubePadding: {
      const int f = spec.face_size, p = spec.pad;
      // Core squares take precedence; pads (one-edge overflow only) fill the
      // rest. Diagonal overflow would need content from two faces at once
      // and stays dead.
      for (int face = 0; face < 6; ++face) {
        int x0, y0;
        face_origin(spec, face, &x0, &y0);
        if (x >= x0 && x < x0 + f && y >= y0 && y < y0 + f) return face;
      }
      for (int face = 0; face < 6; ++face) {
        int x0, y0;
        face_origin(spec, face, &x0, &y0);
        if (x < x0 - p || x >= x0 + f + p || y < y0 - p || y >= y0 + f + p) continue;
        const bool core_x = x >= x0 && x < x0 + f;
        const bool core_y = y >= y0 && y < y0 + f;
        if (core_x || core_y) return face;
      }
      return -1;
    }
  }
  return -1;
}

std::optional<Vec3> chart_dir(const ProjectionSpec& spec, int chart, double x, double y) {
  switch (spec.kind) {
    case Projection::Equirect: {
      const double theta = (x + 0.5) / spec.width * kTwoPi - kPi;
      const double phi = kHalfPi - (y + 0.5) / spec.height * kPi;
      return spherical_to_dir({theta, phi});
    }
    case Projection::TriCylinder: {
      const int hb = spec.band_height();
      const double theta_c = (x + 0.5) / spec.width * kTwoPi - kPi;
      const double yin = y - chart * hb;
      const double h = max_band_h(spec) * (1.0 - 2.0 * (yin + 0.5) / hb);
      const Vec3 local = spherical_to_dir({theta_c, mercator_phi(h)});
      return kBandToWorld[chart] * local;
    }
    case Projection::CubePadding: {
      int x0, y0;
      face_origin(spec, chart, &x0, &y0);
      const int f = spec.face_size;
      const double a = 2.0 * ((x + 0.5) - x0) / f - 1.0;
      const double b = 2.0 * ((y + 0.5) - y0) / f - 1.0;
      const Face& fc = kFaces[chart];
      Vec3 p;
      if (std::abs(a) <= 1.0 && std::abs(b) <= 1.0) {
        p = fc.n + a * fc.r + b * fc.d;
      } else if (std::abs(a) > 1.0 && std::abs(b) > 1.0) {
        return std::nullopt;  // diagonal overflow: no single adjacent face
      } else if (std::abs(a) > 3.0 || std::abs(b) > 3.0) {
        return std::nullopt;  // beyond the adjacent face
      } else if (a > 1.0) {
        p = (2.0 - a) * fc.n + fc.r + b * fc.d;
      } else if (a < -1.0) {
        p = (2.0 + a) * fc.n - fc.r + b * fc.d;
      } else if (b > 1.0) {
        p = (2.0 - b) * fc.n + a * fc.r + fc.d;
      } else {
        p = (2.0 + b) * fc.n + a * fc.r - fc.d;
      }
      return p.normalized();
    }
  }
  return std::nullopt;
}

std::optional<Vec3> pixel_dir(const ProjectionSpec& spec, int x, int y) {
  const int c = chart_at(spec, x, y);
  if (c < 0) return std::nullopt;
  return chart_dir(spec, c, x, y);
}

int owning_chart(const ProjectionSpec& spec, const Vec3& d) {
  switch (spec.kind) {
    case Projection::Equirect:
      return 0;
    case Projection::TriCylinder: {
      const double dist[3] = {std::abs(d.y), std::abs(d.x), std::abs(d.z)};
      int best = 0;
      for (int b = 1; b < 3; ++b)
        if (dist[b] < dist[best]) best = b;
      return best;
    }
    case Projection::CubePadding: {
      int best = 0;
      double best_dot = kFaces[0].n.dot(d);
      for (int f = 1; f < 6; ++f) {
        const double t = kFaces[f].n.dot(d);
        if (t > best_dot) {
          best = f;
          best_dot = t;
        }
      }
      return best;
    }
  }
  return 0;
}

std::optional<ChartPos> chart_project(const ProjectionSpec& spec, int chart, const Vec3& d) {
  switch (spec.kind) {
    case Projection::Equirect: {
      const SphericalCoord s = dir_to_spherical(d);
      return ChartPos{(s.theta + kPi) / kTwoPi * spec.width - 0.5,
                      (kHalfPi - s.phi) / kPi * spec.height - 0.5, 0};
    }
    case Projection::TriCylinder: {
      const Vec3 l = kBandToWorld[chart].transposed() * d;
      const double rxz = std::hypot(l.x, l.z);
      if (rxz < 1e-12) return std::nullopt;  // cylinder pole
      const double phi_c = std::atan2(l.y, rxz);
      const double theta_c = std::atan2(l.z, l.x);
      const int hb = spec.band_height();
      const double h = mercator_h(phi_c);
      return ChartPos{(theta_c + kPi) / kTwoPi * spec.width - 0.5,
                      chart * hb + (1.0 - h / max_band_h(spec)) * hb / 2.0 - 0.5, chart};
    }
    case Projection::CubePadding: {
      // Inverse of chart_dir's extended map: the core square is gnomonic,
      // beyond an edge the plane unfolds onto the adjacent face, so the
      // inverse must use the same unfolded parameterization.
      const Face& fc = kFaces[chart];
      const double dn = fc.n.dot(d);
      const double dr = fc.r.dot(d);
      const double dd = fc.d.dot(d);
      double a, b;
      bool found = false;
      if (dn > 1e-12) {
        a = dr / dn;
        b = dd / dn;
        found = std::abs(a) <= 1.0 && std::abs(b) <= 1.0;
      }
      if (!found && dr > 1e-12) {  // right edge: P = (2-a) n + r + b d
        const double ua = 2.0 - dn / dr, ub = dd / dr;
        if (ua > 1.0 && ua <= 3.0 && std::abs(ub) <= 1.0) {
          a = ua;
          b = ub;
          found = true;
        }
      }
      if (!found && dr < -1e-12) {  // left edge: P = (2+a) n - r + b d
        const double ua = -2.0 - dn / dr, ub = dd / -dr;
        if (ua < -1.0 && ua >= -3.0 && std::abs(ub) <= 1.0) {
          a = ua;
          b = ub;
          found = true;
        }
      }
      if (!found && dd > 1e-12) {  // bottom edge: P = (2-b) n + a r + d
        const double ub = 2.0 - dn / dd, ua = dr / dd;
        if (ub > 1.0 && ub <= 3.0 && std::abs(ua) <= 1.0) {
          a = ua;
          b = ub;
          found = true;
        }
      }
      if (!found && dd < -1e-12) {  // top edge: P = (2+b) n + a r - d
        const double ub = -2.0 - dn / dd, ua = dr / -dd;
        if (ub < -1.0 && ub >= -3.0 && std::abs(ua) <= 1.0) {
          a = ua;
          b = ub;
          found = true;
        }
      }
      if (!found) return std::nullopt;
      int x0, y0;
      face_origin(spec, chart, &x0, &y0);
      const int f = spec.face_size;
      return ChartPos{x0 + (a + 1.0) * f / 2.0 - 0.5, y0 + (b + 1.0) * f / 2.0 - 0.5, chart};
    }
  }
  return std::nullopt;
}

std::optional<ChartPos> dir_to_pixel(const ProjectionSpec& spec, const Vec3& d) {
  return chart_project(spec, owning_chart(spec, d), d);
}

bool pixel_owned(const ProjectionSpec& spec, int x, int y) {
  switch (spec.kind) {
    case Projection::Equirect:
      return x >= 0 && y >= 0 && x < spec.width && y < spec.height;
    case Projection::TriCylinder: {
      const int c = chart_at(spec, x, y);
      if (c < 0) return false;
      const auto d = chart_dir(spec, c, x, y);
      return d && owning_chart(spec, *d) == c;
    }
    case Projection::CubePadding: {
      const int f = spec.face_size;
      for (int face = 0; face < 6; ++face) {
        int x0, y0;
        face_origin(spec, face, &x0, &y0);
        if (x >= x0 && x < x0 + f && y >= y0 && y < y0 + f) return true;
      }
      return false;
    }
  }
  return false;
}

double distortion_coord(const ProjectionSpec& spec, int chart, double x, double y) {
  switch (spec.kind) {
    case Projection::Equirect: {
      const double phi = kHalfPi - (y + 0.5) / spec.height * kPi;
      return std::clamp(std::abs(phi) / kHalfPi, 0.0, 1.0);
    }
    case Projection::TriCylinder: {
      const int hb = spec.band_height();
      const double yin = y - chart * hb;
      const double h = max_band_h(spec) * (1.0 - 2.0 * (yin + 0.5) / hb);
      return std::clamp(std::abs(mercator_phi(h)) / spec.half_vfov, 0.0, 1.0);
    }
    case Projection::CubePadding: {
      int x0, y0;
      face_origin(spec, chart, &x0, &y0);
      const int f = spec.face_size;
      const double a = 2.0 * ((x + 0.5) - x0) / f - 1.0;
      const double b = 2.0 * ((y + 0.5) - y0) / f - 1.0;
      return std::clamp(std::max(std::abs(a), std::abs(b)), 0.0, 1.0);
    }
  }
  return 0.0;
}

double ownership_margin(const ProjectionSpec& spec, const Vec3& d) {
  switch (spec.kind) {
    case Projection::Equirect:
      return kHalfPi - std::abs(dir_to_spherical(d).phi);
    case Projection::TriCylinder: {
      double e[3] = {std::abs(d.y), std::abs(d.x), std::abs(d.z)};
      std::sort(e, e + 3);
      return std::asin(std::clamp(e[1], 0.0, 1.0)) - std::asin(std::clamp(e[0], 0.0, 1.0));
    }
    case Projection::CubePadding: {
      double first = -2.0, second = -2.0;
      for (const Face& fc : kFaces) {
        const double t = fc.n.dot(d);
        if (t > first) {
          second = first;
          first = t;
        } else if (t > second) {
          second = t;
        }
      }
      return std::acos(std::clamp(second, -1.0, 1.0)) - std::acos(std::clamp(first, -1.0, 1.0));
    }
  }
  return 0.0;
}

WeightMap solid_angle_weights(const ProjectionSpec& spec) {
  validate(spec);
  WeightMap wm;
  wm.width = spec.width;
  wm.height = spec.height;
  wm.weight.assign(static_cast<size_t>(spec.width) * spec.height, 0.0f);
  wm.owned.assign(wm.weight.size(), 0);

  parallel_for(0, spec.height, [&](int y) {
    for (int x = 0; x < spec.width; ++x) {
      const int c = chart_at(spec, x, y);
      if (c < 0) continue;
      const auto pc = chart_dir(spec, c, x, y);
      if (!pc) continue;
      // Forward displacements; fall back to backward ones where the chart
      // extension ends (pad strip borders).
      auto pr = chart_dir(spec, c, x + 1.0, y);
      double sr = 1.0;
      if (!pr) {
        pr = chart_dir(spec, c, x - 1.0, y);
        sr = -1.0;
      }
      auto pd = chart_dir(spec, c, x, y + 1.0);
      double sd = 1.0;
      if (!pd) {
        pd = chart_dir(spec, c, x, y - 1.0);
        sd = -1.0;
      }
      if (!pr || !pd) continue;
      const Vec3 er = (*pr - *pc) * sr;
      const Vec3 ed = (*pd - *pc) * sd;
      const size_t i = static_cast<size_t>(y) * spec.width + x;
      wm.weight[i] = static_cast<float>(er.cross(ed).norm());
      wm.owned[i] = pixel_owned(spec, x, y) ? 1 : 0;
    }
  });
  return wm;
}

bool sample_bilinear(const Image& img, const ProjectionSpec& spec, int chart,
                     double x, double y, float* out) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  const double wts[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
  const int ys[4] = {y0, y0, y0 + 1, y0 + 1};

  int row_lo = 0, row_hi = img.height - 1;
  if (spec.kind == Projection::TriCylinder) {
    row_lo = chart * spec.band_height();
    row_hi = row_lo + spec.band_height() - 1;
  }

  for (int c = 0; c < img.channels; ++c) out[c] = 0.0f;
  double total = 0.0;
  for (int t = 0; t < 4; ++t) {
    if (wts[t] <= 0.0) continue;
    int xi = xs[t], yi = ys[t];
    if (spec.kind == Projection::CubePadding) {
      int ex0, ey0;
      face_origin(spec, chart, &ex0, &ey0);
      xi = std::clamp(xi, std::max(0, ex0 - spec.pad),
                      std::min(img.width - 1, ex0 + spec.face_size + spec.pad - 1));
      yi = std::clamp(yi, std::max(0, ey0 - spec.pad),
                      std::min(img.height - 1, ey0 + spec.face_size + spec.pad - 1));
      if (chart_at(spec, xi, yi) < 0) continue;  // dead corner pad
    } else {
      xi = static_cast<int>(posmod(xi, img.width));
      yi = std::clamp(yi, row_lo, row_hi);
    }
    for (int c = 0; c < img.channels; ++c)
      out[c] += static_cast<float>(wts[t]) * img.at(xi, yi, c);
    total += wts[t];
  }
  if (total <= 0.0) return false;
  if (total < 1.0 - 1e-12) {
    const float inv = static_cast<float>(1.0 / total);
    for (int c = 0; c < img.channels; ++c) out[c] *= inv;
  }
  return true;
}

Image resample(const ProjectionSpec& src_spec, const Image& src, const ProjectionSpec& dst_spec) {
  if (src.width != src_spec.width || src.height != src_spec.height)
    throw DataError("resample: image does not match source spec");
  Image out(dst_spec.width, dst_spec.height, src.channels);
  parallel_for(0, dst_spec.height, [&](int y) {
    std::vector<float> px(src.channels);
    for (int x = 0; x < dst_spec.width; ++x) {
      const int c = chart_at(dst_spec, x, y);
      if (c < 0) continue;
      const auto d = chart_dir(dst_spec, c, x, y);
      if (!d) continue;
      const auto sp = dir_to_pixel(src_spec, *d);
      if (!sp) continue;
      if (!sample_bilinear(src, src_spec, sp->chart, sp->x, sp->y, px.data())) continue;
      for (int ch = 0; ch < src.channels; ++ch) out.at(x, y, ch) = px[ch];
    }
  });
  return out;
}

}  // namespace panoflow
