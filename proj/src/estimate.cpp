#include "panoflow/estimate.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "panoflow/errors.hpp"
#include "panoflow/parallel.hpp"
#include "panoflow/util.hpp"

namespace panoflow {

void validate(const EstimatorConfig& cfg) {
  if (cfg.levels < 1 || cfg.levels > 8) throw ConfigError("estimator: levels must be 1..8");
  if (cfg.search_radius < 1 || cfg.search_radius > 32)
    throw ConfigError("estimator: search_radius must be 1..32");
  if (cfg.block < 3 || cfg.block > 31 || cfg.block % 2 == 0)
    throw ConfigError("estimator: block must be odd, 3..31");
  if (!(cfg.hs_alpha > 0)) throw ConfigError("estimator: hs_alpha must be > 0");
  if (cfg.hs_iterations < 1 || cfg.hs_iterations > 10000)
    throw ConfigError("estimator: hs_iterations must be 1..10000");
  if (cfg.pole_exclude < 0 || cfg.pole_exclude > 0.4)
    throw ConfigError("estimator: pole_exclude must be in [0, 0.4]");
  if (cfg.perturb.base_px < 0 || cfg.perturb.gain_px < 0 || cfg.perturb.noise < 0 ||
      !(cfg.perturb.power > 0))
    throw ConfigError("estimator: bad perturbation model");
}

EstimatorConfig parse_estimator_config(const std::string& text, EstimatorConfig base) {
  std::istringstream in(text);
  std::string line;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("estimator config: expected key = value: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const auto as_double = [&] {
      try {
        return std::stod(val);
      } catch (...) {
        throw ConfigError("estimator config: bad number for " + key);
      }
    };
    const auto as_int = [&] { return static_cast<int>(std::llround(as_double())); };
    if (key == "kind") {
      if (val == "blockmatch") base.kind = EstimatorKind::BlockMatch;
      else if (val == "hornschunck") base.kind = EstimatorKind::HornSchunck;
      else if (val == "perturbgt") base.kind = EstimatorKind::PerturbedGT;
      else throw ConfigError("estimator config: unknown kind " + val);
    } else if (key == "levels") base.levels = as_int();
    else if (key == "search_radius") base.search_radius = as_int();
    else if (key == "block") base.block = as_int();
    else if (key == "hs_alpha") base.hs_alpha = as_double();
    else if (key == "hs_iterations") base.hs_iterations = as_int();
    else if (key == "pole_exclude") base.pole_exclude = as_double();
    else if (key == "seed") {
      try {
        base.seed = static_cast<uint64_t>(std::stoull(val));
      } catch (...) {
        throw ConfigError("estimator config: bad number for seed");
      }
    }
    else if (key == "perturb.profile") {
      if (val == "uniform") base.perturb.profile = PerturbModel::Profile::Uniform;
      else if (val == "equator") base.perturb.profile = PerturbModel::Profile::EquatorFavoring;
      else if (val == "pole") base.perturb.profile = PerturbModel::Profile::PoleFavoring;
      else throw ConfigError("estimator config: unknown perturb.profile " + val);
    } else if (key == "perturb.base_px") base.perturb.base_px = as_double();
    else if (key == "perturb.gain_px") base.perturb.gain_px = as_double();
    else if (key == "perturb.power") base.perturb.power = as_double();
    else if (key == "perturb.noise") base.perturb.noise = as_double();
    else throw ConfigError("estimator config: unknown key " + key);
  }
  validate(base);
  return base;
}

namespace {

constexpr double kInfCost = std::numeric_limits<double>::infinity();

struct Level {
  Image a, b;                  // grayscale
  std::vector<uint8_t> valid;  // cube-padding dead zones
  int w = 0, h = 0;
};

std::vector<uint8_t> downsample_mask(const std::vector<uint8_t>& m, int w, int h) {
  const int w2 = std::max(1, w / 2), h2 = std::max(1, h / 2);
  std::vector<uint8_t> out(static_cast<size_t>(w2) * h2, 0);
  for (int y = 0; y < h2; ++y)
    for (int x = 0; x < w2; ++x) {
      int cnt = 0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const int xs = std::min(2 * x + dx, w - 1), ys = std::min(2 * y + dy, h - 1);
          cnt += m[static_cast<size_t>(ys) * w + xs];
        }
      out[static_cast<size_t>(y) * w2 + x] = cnt >= 2 ? 1 : 0;
    }
  return out;
}

std::vector<Level> build_pyramid(const Image& a, const Image& b, const ProjectionSpec& spec,
                                 int levels) {
  const bool wrap = spec.kind != Projection::CubePadding;
  std::vector<Level> pyr(1);
  pyr[0].a = to_gray(a);
  pyr[0].b = to_gray(b);
  pyr[0].w = a.width;
  pyr[0].h = a.height;
  pyr[0].valid.assign(static_cast<size_t>(a.width) * a.height, 1);
  if (spec.kind == Projection::CubePadding)
    for (int y = 0; y < a.height; ++y)
      for (int x = 0; x < a.width; ++x)
        if (chart_at(spec, x, y) < 0) pyr[0].valid[static_cast<size_t>(y) * a.width + x] = 0;
  for (int l = 1; l < levels; ++l) {
    const Level& prev = pyr.back();
    if (prev.w < 16 || prev.h < 16) break;
    Level next;
    next.a = downsample2(prev.a, wrap);
    next.b = downsample2(prev.b, wrap);
    next.w = next.a.width;
    next.h = next.a.height;
    next.valid = downsample_mask(prev.valid, prev.w, prev.h);
    pyr.push_back(std::move(next));
  }
  return pyr;
}

float fetch(const Image& img, bool wrap, int x, int y) {
  x = wrap ? static_cast<int>(posmod(x, img.width)) : std::clamp(x, 0, img.width - 1);
  y = std::clamp(y, 0, img.height - 1);
  return img.at(x, y);
}

uint8_t fetch_mask(const std::vector<uint8_t>& m, int w, int h, bool wrap, int x, int y) {
  x = wrap ? static_cast<int>(posmod(x, w)) : std::clamp(x, 0, w - 1);
  y = std::clamp(y, 0, h - 1);
  return m[static_cast<size_t>(y) * w + x];
}

/// Bilinear upsample of a coarser flow by 2x (values scaled by 2).
void upsample_flow(const std::vector<float>& cu, const std::vector<float>& cv, int cw, int ch,
                   std::vector<float>& fu, std::vector<float>& fv, int fw, int fh, bool wrap) {
  fu.assign(static_cast<size_t>(fw) * fh, 0.0f);
  fv.assign(fu.size(), 0.0f);
  for (int y = 0; y < fh; ++y)
    for (int x = 0; x < fw; ++x) {
      const double sx = (x - 0.5) / 2.0, sy = (y - 0.5) / 2.0;
      const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
      const double tx = sx - x0, ty = sy - y0;
      double su = 0, sv = 0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          int xi = x0 + dx, yi = std::clamp(y0 + dy, 0, ch - 1);
          xi = wrap ? static_cast<int>(posmod(xi, cw)) : std::clamp(xi, 0, cw - 1);
          const double w = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty);
          const size_t i = static_cast<size_t>(yi) * cw + xi;
          su += w * cu[i];
          sv += w * cv[i];
        }
      const size_t i = static_cast<size_t>(y) * fw + x;
      fu[i] = static_cast<float>(2.0 * su);
      fv[i] = static_cast<float>(2.0 * sv);
    }
}

void block_match_level(const Level& lv, bool wrap, const EstimatorConfig& cfg,
                       bool equirect, std::vector<float>& u, std::vector<float>& v,
                       std::vector<uint8_t>& ok) {
  const int r = cfg.search_radius, hb = cfg.block / 2;
  const int side = 2 * r + 1;
  const int excl = equirect ? static_cast<int>(std::lround(lv.h * cfg.pole_exclude)) : 0;
  const int row_lo = excl, row_hi = lv.h - excl;
  ok.assign(static_cast<size_t>(lv.w) * lv.h, 0);

  parallel_for(row_lo, row_hi, [&](int y) {
    std::vector<double> costs(static_cast<size_t>(side) * side);
    for (int x = 0; x < lv.w; ++x) {
      const size_t idx = static_cast<size_t>(y) * lv.w + x;
      if (!lv.valid[idx]) {
        u[idx] = v[idx] = 0;
        continue;
      }
      const int bu = static_cast<int>(std::lround(u[idx]));
      const int bv = static_cast<int>(std::lround(v[idx]));
      double best = kInfCost;
      double best_mag = kInfCost;
      int best_dx = 0, best_dy = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          double sad = 0;
          int taps = 0;
          for (int j = -hb; j <= hb; ++j)
            for (int i = -hb; i <= hb; ++i) {
              if (!wrap) {
                // cube canvas: skip dead taps on either side
                if (!fetch_mask(lv.valid, lv.w, lv.h, wrap, x + i, y + j) ||
                    !fetch_mask(lv.valid, lv.w, lv.h, wrap, x + bu + dx + i, y + bv + dy + j))
                  continue;
              }
              sad += std::abs(fetch(lv.a, wrap, x + i, y + j) -
                              fetch(lv.b, wrap, x + bu + dx + i, y + bv + dy + j));
              ++taps;
            }
          const int need = (cfg.block * cfg.block * 3) / 10;
          const double cost = taps > std::max(1, need) ? sad / taps : kInfCost;
          costs[static_cast<size_t>(dy + r) * side + (dx + r)] = cost;
          const double mag = static_cast<double>(bu + dx) * (bu + dx) +
                             static_cast<double>(bv + dy) * (bv + dy);
          if (cost < best || (cost == best && mag < best_mag)) {
            best = cost;
            best_mag = mag;
            best_dx = dx;
            best_dy = dy;
          }
        }
      if (best == kInfCost) {
        u[idx] = v[idx] = 0;
        continue;
      }
      double offx = 0, offy = 0;
      // a zero-cost match is exact; the parabola would only smear it
      if (best > 0 && best_dx > -r && best_dx < r) {
        const double cm = costs[static_cast<size_t>(best_dy + r) * side + (best_dx - 1 + r)];
        const double cp = costs[static_cast<size_t>(best_dy + r) * side + (best_dx + 1 + r)];
        const double c0 = best, den = cm - 2 * c0 + cp;
        if (std::isfinite(cm) && std::isfinite(cp) && den > 1e-12)
          offx = std::clamp(0.5 * (cm - cp) / den, -0.5, 0.5);
      }
      if (best > 0 && best_dy > -r && best_dy < r) {
        const double cm = costs[static_cast<size_t>(best_dy - 1 + r) * side + (best_dx + r)];
        const double cp = costs[static_cast<size_t>(best_dy + 1 + r) * side + (best_dx + r)];
        const double c0 = best, den = cm - 2 * c0 + cp;
        if (std::isfinite(cm) && std::isfinite(cp) && den > 1e-12)
          offy = std::clamp(0.5 * (cm - cp) / den, -0.5, 0.5);
      }
      u[idx] = static_cast<float>(bu + best_dx + offx);
      v[idx] = static_cast<float>(bv + best_dy + offy);
      ok[idx] = 1;
    }
  });

  // Pole bands excluded from matching are continued from the nearest
  // computed row.
  if (excl > 0 && row_hi > row_lo) {
    for (int y = 0; y < row_lo; ++y)
      for (int x = 0; x < lv.w; ++x) {
        const size_t d = static_cast<size_t>(y) * lv.w + x;
        const size_t s = static_cast<size_t>(row_lo) * lv.w + x;
        u[d] = u[s];
        v[d] = v[s];
        ok[d] = ok[s];
      }
    for (int y = row_hi; y < lv.h; ++y)
      for (int x = 0; x < lv.w; ++x) {
        const size_t d = static_cast<size_t>(y) * lv.w + x;
        const size_t s = static_cast<size_t>(row_hi - 1) * lv.w + x;
        u[d] = u[s];
        v[d] = v[s];
        ok[d] = ok[s];
      }
  }
}

/// Warp b backward by (u, v) pixels; plain image-space warp.
Image warp_px(const Image& b, const std::vector<float>& u, const std::vector<float>& v,
              bool wrap) {
  Image out(b.width, b.height, 1);
  for (int y = 0; y < b.height; ++y)
    for (int x = 0; x < b.width; ++x) {
      const size_t i = static_cast<size_t>(y) * b.width + x;
      const double sx = x + u[i], sy = y + v[i];
      const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
      const double tx = sx - x0, ty = sy - y0;
      double acc = 0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx)
          acc += (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * fetch(b, wrap, x0 + dx, y0 + dy);
      out.at(x, y) = static_cast<float>(acc);
    }
  return out;
}

void horn_schunck_level(const Level& lv, bool wrap, const EstimatorConfig& cfg,
                        std::vector<float>& u, std::vector<float>& v) {
  const int w = lv.w, h = lv.h;
  const Image bw = warp_px(lv.b, u, v, wrap);
  std::vector<float> ix(static_cast<size_t>(w) * h), iy(ix.size()), it(ix.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      const auto gx = [&](const Image& im) {
        return 0.5 * (fetch(im, wrap, x + 1, y) - fetch(im, wrap, x - 1, y));
      };
      const auto gy = [&](const Image& im) {
        return 0.5 * (fetch(im, wrap, x, y + 1) - fetch(im, wrap, x, y - 1));
      };
      ix[i] = static_cast<float>(0.5 * (gx(lv.a) + gx(bw)));
      iy[i] = static_cast<float>(0.5 * (gy(lv.a) + gy(bw)));
      it[i] = bw.at(x, y) - lv.a.at(x, y);
    }

  // Increment relative to the warped pair, solved by red-black Gauss-Seidel
  // on the exact per-pixel 2x2 system; block coordinate descent keeps the
  // energy non-increasing.
  std::vector<float> du(ix.size(), 0.0f), dv(ix.size(), 0.0f);
  const double a2 = cfg.hs_alpha * cfg.hs_alpha;
  for (int iter = 0; iter < cfg.hs_iterations; ++iter) {
    for (int color = 0; color < 2; ++color) {
      parallel_for(0, h, [&](int y) {
        for (int x = (y + color) & 1; x < w; x += 2) {
          const size_t i = static_cast<size_t>(y) * w + x;
          if (!lv.valid[i]) continue;
          double su = 0, sv = 0;
          int k = 0;
          const auto nb = [&](int xn, int yn) {
            if (yn < 0 || yn >= h) return;
            if (wrap) xn = static_cast<int>(posmod(xn, w));
            else if (xn < 0 || xn >= w) return;
            const size_t j = static_cast<size_t>(yn) * w + xn;
            if (!lv.valid[j]) return;
            su += du[j];
            sv += dv[j];
            ++k;
          };
          nb(x - 1, y);
          nb(x + 1, y);
          nb(x, y - 1);
          nb(x, y + 1);
          if (k == 0) continue;
          const double gx = ix[i], gy = iy[i], gt = it[i];
          const double a11 = gx * gx + k * a2, a22 = gy * gy + k * a2, a12 = gx * gy;
          const double b1 = a2 * su - gx * gt, b2 = a2 * sv - gy * gt;
          const double det = a11 * a22 - a12 * a12;
          du[i] = static_cast<float>((b1 * a22 - b2 * a12) / det);
          dv[i] = static_cast<float>((a11 * b2 - a12 * b1) / det);
        }
      });
    }
  }
  for (size_t i = 0; i < u.size(); ++i) {
    u[i] += du[i];
    v[i] += dv[i];
  }
}

FlowField chart_flow_from_px(const ProjectionSpec& spec, const std::vector<float>& u,
                             const std::vector<float>& v, const std::vector<uint8_t>& ok) {
  FlowField f = make_flow(spec);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      const size_t i = f.index(x, y);
      if (!(f.valid[i] & FlowField::kValid)) continue;
      if (!ok.empty() && !ok[i]) {
        f.valid[i] = 0;
        f.u[i] = f.v[i] = 0;
        continue;
      }
      if (spec.kind == Projection::Equirect) {
        const double phi = kHalfPi - (y + 0.5) / spec.height * kPi;
        const double ur = wrap_delta_theta(u[i] * kTwoPi / spec.width);
        double vr = -v[i] * kPi / spec.height;
        if (phi + vr > kHalfPi) {
          vr = kHalfPi - phi;
          f.valid[i] |= FlowField::kSaturated;
        } else if (phi + vr < -kHalfPi) {
          vr = -kHalfPi - phi;
          f.valid[i] |= FlowField::kSaturated;
        }
        f.u[i] = static_cast<float>(ur);
        f.v[i] = static_cast<float>(vr);
      } else {
        f.u[i] = u[i];
        f.v[i] = v[i];
      }
    }
  return f;
}

}  // namespace

double hs_energy(const Image& frame_a, const Image& frame_b, const ProjectionSpec& spec,
                 const std::vector<float>& u_px, const std::vector<float>& v_px, double alpha) {
  const bool wrap = spec.kind != Projection::CubePadding;
  const Image a = to_gray(frame_a), b = to_gray(frame_b);
  const int w = a.width, h = a.height;
  KahanSum e;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      const double gx = 0.5 * (0.5 * (fetch(a, wrap, x + 1, y) - fetch(a, wrap, x - 1, y)) +
                               0.5 * (fetch(b, wrap, x + 1, y) - fetch(b, wrap, x - 1, y)));
      const double gy = 0.5 * (0.5 * (fetch(a, wrap, x, y + 1) - fetch(a, wrap, x, y - 1)) +
                               0.5 * (fetch(b, wrap, x, y + 1) - fetch(b, wrap, x, y - 1)));
      const double gt = b.at(x, y) - a.at(x, y);
      const double resid = gx * u_px[i] + gy * v_px[i] + gt;
      e.add(resid * resid);
      // smoothness over right/down edges, each counted once
      if (wrap || x + 1 < w) {
        const size_t j = static_cast<size_t>(y) * w + (x + 1) % w;
        const double duu = u_px[i] - u_px[j], dvv = v_px[i] - v_px[j];
        e.add(alpha * alpha * (duu * duu + dvv * dvv));
      }
      if (y + 1 < h) {
        const size_t j = static_cast<size_t>(y + 1) * w + x;
        const double duu = u_px[i] - u_px[j], dvv = v_px[i] - v_px[j];
        e.add(alpha * alpha * (duu * duu + dvv * dvv));
      }
    }
  return e.value();
}

FlowField perturb_gt(const FlowField& gt, const PerturbModel& model, uint64_t seed) {
  FlowField out = gt;
  const ProjectionSpec& spec = gt.spec;
  const int w = spec.width, h = spec.height;

  // Smooth low-frequency bias fields for u and v, normalized to |bias| <= 1.
  struct Wave {
    double amp, fx, fy, phase;
  };
  std::mt19937_64 rng(derive_seed(seed, 0xB1A5ULL));
  std::uniform_real_distribution<double> uamp(-1.0, 1.0), uphase(0.0, kTwoPi);
  std::uniform_int_distribution<int> ufreq(1, 4);
  auto make_waves = [&] {
    std::array<Wave, 3> ws;
    double total = 0;
    for (auto& wv : ws) {
      wv.amp = uamp(rng);
      wv.fx = ufreq(rng);
      wv.fy = ufreq(rng);
      wv.phase = uphase(rng);
      total += std::abs(wv.amp);
    }
    for (auto& wv : ws) wv.amp /= std::max(total, 1e-9);
    return ws;
  };
  const auto waves_u = make_waves();
  const auto waves_v = make_waves();
  const auto bias = [&](const std::array<Wave, 3>& ws, int x, int y) {
    double s = 0;
    for (const auto& wv : ws)
      s += wv.amp * std::sin(kTwoPi * (wv.fx * (x + 0.5) / w + wv.fy * (y + 0.5) / h) + wv.phase);
    return s;
  };

  parallel_for(0, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = out.index(x, y);
      if (!(out.valid[i] & FlowField::kValid)) continue;
      const int chart = chart_at(spec, x, y);
      double s = distortion_coord(spec, chart, x, y);
      double ramp;
      switch (model.profile) {
        case PerturbModel::Profile::EquatorFavoring: ramp = std::pow(s, model.power); break;
        case PerturbModel::Profile::PoleFavoring: ramp = std::pow(1.0 - s, model.power); break;
        default: ramp = 1.0; break;
      }
      const double amp = model.base_px + model.gain_px * ramp;
      if (amp == 0.0) continue;
      const double du = amp * (bias(waves_u, x, y) + model.noise * hash_gauss(seed, x, y, 0));
      const double dv = amp * (bias(waves_v, x, y) + model.noise * hash_gauss(seed, x, y, 1));
      if (spec.kind == Projection::Equirect) {
        out.u[i] = static_cast<float>(wrap_delta_theta(out.u[i] + du * kTwoPi / w));
        const double phi = kHalfPi - (y + 0.5) / h * kPi;
        double vr = out.v[i] - dv * kPi / h;
        if (phi + vr > kHalfPi) {
          vr = kHalfPi - phi;
          out.valid[i] |= FlowField::kSaturated;
        } else if (phi + vr < -kHalfPi) {
          vr = -kHalfPi - phi;
          out.valid[i] |= FlowField::kSaturated;
        }
        out.v[i] = static_cast<float>(vr);
      } else {
        out.u[i] += static_cast<float>(du);
        out.v[i] += static_cast<float>(dv);
      }
    }
  });
  return out;
}

FlowField estimate(const Image& frame_a, const Image& frame_b, const ProjectionSpec& spec,
                   const EstimatorConfig& cfg, const FlowField* gt_equirect) {
  validate(cfg);
  validate(spec);
  if (cfg.kind == EstimatorKind::PerturbedGT) {
    if (!gt_equirect) throw DataError("estimate: PerturbedGT requires ground truth");
    const FlowField base =
        gt_equirect->spec == spec ? *gt_equirect : reproject_flow(*gt_equirect, spec);
    return perturb_gt(base, cfg.perturb, cfg.seed);
  }
  if (frame_a.width != spec.width || frame_a.height != spec.height ||
      frame_b.width != spec.width || frame_b.height != spec.height)
    throw DataError("estimate: frame dimensions do not match spec");

  const bool wrap = spec.kind != Projection::CubePadding;
  const bool equirect = spec.kind == Projection::Equirect;
  const auto pyr = build_pyramid(frame_a, frame_b, spec, cfg.levels);

  std::vector<float> u, v;
  std::vector<uint8_t> ok;
  for (int l = static_cast<int>(pyr.size()) - 1; l >= 0; --l) {
    const Level& lv = pyr[l];
    if (l == static_cast<int>(pyr.size()) - 1) {
      u.assign(static_cast<size_t>(lv.w) * lv.h, 0.0f);
      v.assign(u.size(), 0.0f);
    } else {
      std::vector<float> nu, nv;
      upsample_flow(u, v, pyr[l + 1].w, pyr[l + 1].h, nu, nv, lv.w, lv.h, wrap);
      u = std::move(nu);
      v = std::move(nv);
    }
    if (cfg.kind == EstimatorKind::BlockMatch)
      block_match_level(lv, wrap, cfg, equirect, u, v, ok);
    else
      horn_schunck_level(lv, wrap, cfg, u, v);
  }
  if (cfg.kind == EstimatorKind::HornSchunck) ok.clear();
  return chart_flow_from_px(spec, u, v, ok);
}

}  // namespace panoflow
