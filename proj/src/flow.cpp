#include "panoflow/flow.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "panoflow/errors.hpp"
#include "panoflow/parallel.hpp"
#include "panoflow/util.hpp"

namespace panoflow {

static_assert(std::endian::native == std::endian::little,
              "SFL1/flo I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'S', 'F', 'L', '1'};
constexpr float kFloMagic = 202021.25f;
constexpr float kFloUnknown = 1e10f;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

double wrap_px(double d, int width) {
  double r = std::fmod(width / 2.0 - d, static_cast<double>(width));
  if (r < 0) r += width;
  return width / 2.0 - r;
}

}  // namespace

FlowField make_flow(const ProjectionSpec& spec) {
  validate(spec);
  FlowField f;
  f.spec = spec;
  const size_t n = static_cast<size_t>(spec.width) * spec.height;
  f.u.assign(n, 0.0f);
  f.v.assign(n, 0.0f);
  f.valid.assign(n, FlowField::kValid);
  if (spec.kind == Projection::CubePadding) {
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x)
        if (chart_at(spec, x, y) < 0) f.valid[f.index(x, y)] = 0;
  }
  return f;
}

void flow_to_pixel_delta(const ProjectionSpec& spec, double u, double v,
                         double* dx, double* dy) {
  if (spec.kind == Projection::Equirect) {
    *dx = u * spec.width / kTwoPi;
    *dy = -v * spec.height / kPi;
  } else {
    *dx = u;
    *dy = v;
  }
}

std::optional<Vec3> chart_flow_endpoint(const ProjectionSpec& spec, int chart,
                                        double x, double y, double fu, double fv,
                                        bool* saturated) {
  if (saturated) *saturated = false;
  switch (spec.kind) {
    case Projection::Equirect: {
      const double theta = (x + 0.5) / spec.width * kTwoPi - kPi + fu;
      double phi = kHalfPi - (y + 0.5) / spec.height * kPi + fv;
      if (phi < -kHalfPi || phi > kHalfPi) {
        phi = std::clamp(phi, -kHalfPi, kHalfPi);
        if (saturated) *saturated = true;
      }
      return spherical_to_dir({wrap_theta(theta), phi});
    }
    case Projection::TriCylinder: {
      const double ty = y + fv;
      const int hb = spec.band_height();
      if (saturated && (ty < chart * hb - 0.5 || ty > (chart + 1) * hb - 0.5))
        *saturated = true;
      return chart_dir(spec, chart, x + fu, ty);
    }
    case Projection::CubePadding: {
      const auto d = chart_dir(spec, chart, x + fu, y + fv);
      if (d && saturated && owning_chart(spec, *d) != chart) *saturated = true;
      return d;
    }
  }
  return std::nullopt;
}

std::optional<Vec3> endpoint_dir(const FlowField& f, int x, int y) {
  if (x < 0 || y < 0 || x >= f.spec.width || y >= f.spec.height) return std::nullopt;
  const size_t i = f.index(x, y);
  if (!(f.valid[i] & FlowField::kValid)) return std::nullopt;
  const int chart = chart_at(f.spec, x, y);
  if (chart < 0) return std::nullopt;
  return chart_flow_endpoint(f.spec, chart, x, y, f.u[i], f.v[i]);
}

bool sample_flow(const FlowField& f, int chart, double x, double y,
                 float* fu, float* fv, uint8_t* flags) {
  const ProjectionSpec& spec = f.spec;
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  const double wts[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
  const int ys[4] = {y0, y0, y0 + 1, y0 + 1};

  int row_lo = 0, row_hi = spec.height - 1;
  if (spec.kind == Projection::TriCylinder) {
    row_lo = chart * spec.band_height();
    row_hi = row_lo + spec.band_height() - 1;
  }

  double su = 0, sv = 0, total = 0;
  double ref_u = 0;
  bool have_ref = false;
  uint8_t fl = 0;
  for (int t = 0; t < 4; ++t) {
    if (wts[t] <= 0.0) continue;
    int xi = xs[t], yi = ys[t];
    if (spec.kind == Projection::CubePadding) {
      xi = std::clamp(xi, 0, spec.width - 1);
      yi = std::clamp(yi, 0, spec.height - 1);
    } else {
      xi = static_cast<int>(posmod(xi, spec.width));
      yi = std::clamp(yi, row_lo, row_hi);
    }
    const size_t i = f.index(xi, yi);
    if (!(f.valid[i] & FlowField::kValid)) continue;
    double tu = f.u[i];
    if (spec.kind == Projection::Equirect) {
      // blend longitude deltas on a common wrap branch
      if (!have_ref) {
        ref_u = tu;
        have_ref = true;
      } else {
        tu = ref_u + wrap_delta_theta(tu - ref_u);
      }
    }
    su += wts[t] * tu;
    sv += wts[t] * f.v[i];
    total += wts[t];
    fl |= f.valid[i];
  }
  if (total <= 0.0) return false;
  su /= total;
  sv /= total;
  if (spec.kind == Projection::Equirect) su = wrap_delta_theta(su);
  *fu = static_cast<float>(su);
  *fv = static_cast<float>(sv);
  if (flags) *flags = fl;
  return true;
}

FlowField reproject_flow(const FlowField& src, const ProjectionSpec& dst_spec) {
  validate(dst_spec);
  FlowField dst = make_flow(dst_spec);
  parallel_for(0, dst_spec.height, [&](int y) {
    for (int x = 0; x < dst_spec.width; ++x) {
      const size_t i = dst.index(x, y);
      const int chart = chart_at(dst_spec, x, y);
      if (chart < 0) {
        dst.valid[i] = 0;
        continue;
      }
      const auto d = chart_dir(dst_spec, chart, x, y);
      const auto sp = d ? dir_to_pixel(src.spec, *d) : std::nullopt;
      float fu = 0, fv = 0;
      uint8_t flags = 0;
      if (!sp || !sample_flow(src, sp->chart, sp->x, sp->y, &fu, &fv, &flags)) {
        dst.valid[i] = 0;
        continue;
      }
      bool saturated = false;
      const auto end = chart_flow_endpoint(src.spec, sp->chart, sp->x, sp->y, fu, fv, &saturated);
      if (!end) {
        dst.valid[i] = 0;
        continue;
      }
      if (dst_spec.kind == Projection::Equirect) {
        const double theta0 = (x + 0.5) / dst_spec.width * kTwoPi - kPi;
        const double phi0 = kHalfPi - (y + 0.5) / dst_spec.height * kPi;
        const SphericalCoord s1 = dir_to_spherical(*end);
        dst.u[i] = static_cast<float>(wrap_delta_theta(s1.theta - theta0));
        dst.v[i] = static_cast<float>(s1.phi - phi0);
      } else {
        const auto p1 = chart_project(dst_spec, chart, *end);
        if (!p1) {
          dst.valid[i] = 0;
          continue;
        }
        double du = p1->x - x;
        if (dst_spec.kind == Projection::TriCylinder) du = wrap_px(du, dst_spec.width);
        dst.u[i] = static_cast<float>(du);
        dst.v[i] = static_cast<float>(p1->y - y);
      }
      dst.valid[i] = FlowField::kValid;
      if (saturated || (flags & FlowField::kSaturated)) dst.valid[i] |= FlowField::kSaturated;
    }
  });
  return dst;
}

void write_flow(const FlowField& f, const std::filesystem::path& path) {
  validate(f.spec);
  const size_t n = static_cast<size_t>(f.spec.width) * f.spec.height;
  if (f.u.size() != n || f.v.size() != n || f.valid.size() != n)
    throw DataError("write_flow: field buffers do not match spec");
  for (size_t i = 0; i < n; ++i)
    if (!std::isfinite(f.u[i]) || !std::isfinite(f.v[i]))
      throw DataError("write_flow: non-finite flow component at index " + std::to_string(i));

  FilePtr out(std::fopen(path.string().c_str(), "wb"));
  if (!out) throw DataError("cannot open " + path.string());
  const auto put = [&](const void* p, size_t bytes) {
    if (std::fwrite(p, 1, bytes, out.get()) != bytes)
      throw DataError("write_flow: short write to " + path.string());
  };
  put(kMagic, 4);
  const uint32_t kind = static_cast<uint32_t>(f.spec.kind);
  const uint32_t w = static_cast<uint32_t>(f.spec.width);
  const uint32_t h = static_cast<uint32_t>(f.spec.height);
  put(&kind, 4);
  put(&w, 4);
  put(&h, 4);
  uint32_t params[3] = {0, 0, 0};
  uint32_t nparams = 0;
  if (f.spec.kind == Projection::TriCylinder) {
    const float fov = static_cast<float>(f.spec.half_vfov);
    std::memcpy(&params[0], &fov, 4);
    nparams = 1;
  } else if (f.spec.kind == Projection::CubePadding) {
    params[0] = static_cast<uint32_t>(f.spec.face_size);
    params[1] = static_cast<uint32_t>(f.spec.pad);
    nparams = 2;
  }
  put(&nparams, 4);
  put(params, 4 * nparams);
  std::vector<float> inter(n * 2);
  for (size_t i = 0; i < n; ++i) {
    inter[2 * i] = f.u[i];
    inter[2 * i + 1] = f.v[i];
  }
  put(inter.data(), inter.size() * 4);
  put(f.valid.data(), n);
}

FlowField read_flow(const std::filesystem::path& path) {
  FilePtr in(std::fopen(path.string().c_str(), "rb"));
  if (!in) throw DataError("cannot open " + path.string());
  const auto get = [&](void* p, size_t bytes) {
    if (std::fread(p, 1, bytes, in.get()) != bytes)
      throw DataError("read_flow: truncated file " + path.string());
  };
  char magic[4];
  get(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("read_flow: bad magic in " + path.string());
  uint32_t kind, w, h, nparams;
  get(&kind, 4);
  get(&w, 4);
  get(&h, 4);
  get(&nparams, 4);
  if (kind > 2 || nparams > 8) throw DataError("read_flow: bad header in " + path.string());
  uint32_t params[8] = {0};
  get(params, 4 * nparams);

  ProjectionSpec spec;
  spec.kind = static_cast<Projection>(kind);
  spec.width = static_cast<int>(w);
  spec.height = static_cast<int>(h);
  if (spec.kind == Projection::TriCylinder) {
    if (nparams != 1) throw DataError("read_flow: tricyl expects 1 param word");
    float fov;
    std::memcpy(&fov, &params[0], 4);
    spec.half_vfov = fov;
  } else if (spec.kind == Projection::CubePadding) {
    if (nparams != 2) throw DataError("read_flow: cubepad expects 2 param words");
    spec.face_size = static_cast<int>(params[0]);
    spec.pad = static_cast<int>(params[1]);
  } else if (nparams != 0) {
    throw DataError("read_flow: equirect expects 0 param words");
  }
  try {
    validate(spec);
  } catch (const ConfigError& e) {
    throw DataError(std::string("read_flow: ") + e.what());
  }

  FlowField f;
  f.spec = spec;
  const size_t n = static_cast<size_t>(spec.width) * spec.height;
  std::vector<float> inter(n * 2);
  get(inter.data(), inter.size() * 4);
  f.u.resize(n);
  f.v.resize(n);
  for (size_t i = 0; i < n; ++i) {
    f.u[i] = inter[2 * i];
    f.v[i] = inter[2 * i + 1];
  }
  f.valid.resize(n);
  get(f.valid.data(), n);
  return f;
}

void write_flo(const FlowField& f, const std::filesystem::path& path) {
  if (f.spec.kind != Projection::Equirect)
    throw DataError("write_flo: only equirect fields are supported");
  FilePtr out(std::fopen(path.string().c_str(), "wb"));
  if (!out) throw DataError("cannot open " + path.string());
  const int32_t w = f.spec.width, h = f.spec.height;
  std::fwrite(&kFloMagic, 4, 1, out.get());
  std::fwrite(&w, 4, 1, out.get());
  std::fwrite(&h, 4, 1, out.get());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t i = f.index(x, y);
      float uv[2];
      if (f.valid[i] & FlowField::kValid) {
        double dx, dy;
        flow_to_pixel_delta(f.spec, f.u[i], f.v[i], &dx, &dy);
        uv[0] = static_cast<float>(dx);
        uv[1] = static_cast<float>(dy);
      } else {
        uv[0] = uv[1] = kFloUnknown;
      }
      if (std::fwrite(uv, 4, 2, out.get()) != 2) throw DataError("write_flo: short write");
    }
}

FlowField read_flo(const std::filesystem::path& path) {
  FilePtr in(std::fopen(path.string().c_str(), "rb"));
  if (!in) throw DataError("cannot open " + path.string());
  float magic;
  int32_t w, h;
  if (std::fread(&magic, 4, 1, in.get()) != 1 || magic != kFloMagic)
    throw DataError("read_flo: bad magic in " + path.string());
  if (std::fread(&w, 4, 1, in.get()) != 1 || std::fread(&h, 4, 1, in.get()) != 1 ||
      w <= 0 || h <= 0)
    throw DataError("read_flo: bad dimensions");
  if (w != 2 * h)
    throw DataError("read_flo: expected 2:1 equirect dimensions, got " +
                    std::to_string(w) + "x" + std::to_string(h));
  FlowField f = make_flow(ProjectionSpec::equirect(w, h));
  const size_t n = static_cast<size_t>(w) * h;
  std::vector<float> inter(n * 2);
  if (std::fread(inter.data(), 4, n * 2, in.get()) != n * 2)
    throw DataError("read_flo: truncated payload");
  for (size_t i = 0; i < n; ++i) {
    const float px = inter[2 * i], py = inter[2 * i + 1];
    if (!std::isfinite(px) || !std::isfinite(py) || std::abs(px) > 1e9 || std::abs(py) > 1e9) {
      f.valid[i] = 0;
      continue;
    }
    f.u[i] = static_cast<float>(wrap_delta_theta(px * kTwoPi / w));
    f.v[i] = static_cast<float>(-py * kPi / h);
  }
  return f;
}

namespace {

void hsv_to_rgb(double h, double s, double v, float* rgb) {
  h = h - std::floor(h);
  const double c = v * s;
  const double hp = h * 6.0;
  const double xv = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp) % 6) {
    case 0: r = c; g = xv; break;
    case 1: r = xv; g = c; break;
    case 2: g = c; b = xv; break;
    case 3: g = xv; b = c; break;
    case 4: r = xv; b = c; break;
    default: r = c; b = xv; break;
  }
  const double m = v - c;
  rgb[0] = static_cast<float>(r + m);
  rgb[1] = static_cast<float>(g + m);
  rgb[2] = static_cast<float>(b + m);
}

}  // namespace

FlowColorResult flow_to_color(const FlowField& f, double max_magnitude) {
  Image img(f.spec.width, f.spec.height, 3);
  double max_mag = max_magnitude;
  if (max_mag <= 0.0) {
    for (int y = 0; y < f.spec.height; ++y)
      for (int x = 0; x < f.spec.width; ++x) {
        const size_t i = f.index(x, y);
        if (!(f.valid[i] & FlowField::kValid)) continue;
        double dx, dy;
        flow_to_pixel_delta(f.spec, f.u[i], f.v[i], &dx, &dy);
        max_mag = std::max(max_mag, std::hypot(dx, dy));
      }
    if (max_mag <= 0.0) max_mag = 1.0;
  }
  for (int y = 0; y < f.spec.height; ++y)
    for (int x = 0; x < f.spec.width; ++x) {
      const size_t i = f.index(x, y);
      if (!(f.valid[i] & FlowField::kValid)) continue;  // invalid stays black
      double dx, dy;
      flow_to_pixel_delta(f.spec, f.u[i], f.v[i], &dx, &dy);
      const double mag = std::hypot(dx, dy);
      const double hue = (std::atan2(dy, dx) + kPi) / kTwoPi;
      float rgb[3];
      hsv_to_rgb(hue, std::min(1.0, mag / max_mag), 1.0, rgb);
      img.at(x, y, 0) = rgb[0];
      img.at(x, y, 1) = rgb[1];
      img.at(x, y, 2) = rgb[2];
    }
  return {std::move(img), max_mag};
}

Image warp_by_flow(const Image& img, const FlowField& f) {
  if (img.width != f.spec.width || img.height != f.spec.height)
    throw DataError("warp_by_flow: image/flow dimension mismatch");
  Image out(img.width, img.height, img.channels);
  parallel_for(0, img.height, [&](int y) {
    std::vector<float> px(img.channels);
    for (int x = 0; x < img.width; ++x) {
      const size_t i = f.index(x, y);
      const int chart = chart_at(f.spec, x, y);
      if (!(f.valid[i] & FlowField::kValid) || chart < 0) {
        for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(x, y, c);
        continue;
      }
      double dx, dy;
      flow_to_pixel_delta(f.spec, f.u[i], f.v[i], &dx, &dy);
      if (sample_bilinear(img, f.spec, chart, x + dx, y + dy, px.data())) {
        for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = px[c];
      } else {
        for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(x, y, c);
      }
    }
  });
  return out;
}

}  // namespace panoflow
