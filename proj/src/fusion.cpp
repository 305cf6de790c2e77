#include "panoflow/fusion.hpp"

#include <cmath>

#include "panoflow/errors.hpp"
#include "panoflow/parallel.hpp"

namespace panoflow {

namespace {

void require_equirect_pair(const FlowField& a, const FlowField& b, const char* who) {
  if (a.spec != b.spec) throw DataError(std::string(who) + ": spec mismatch");
  if (a.spec.kind != Projection::Equirect)
    throw DataError(std::string(who) + ": equirect fields required");
}

}  // namespace

FlowField blend(const FlowField& a, const FlowField& b, const ConfidenceMap& t) {
  require_equirect_pair(a, b, "blend");
  if (t.width != a.spec.width || t.height != a.spec.height || t.channels != 1)
    throw DataError("blend: confidence map does not match field");
  FlowField out = make_flow(a.spec);
  parallel_for(0, a.spec.height, [&](int y) {
    for (int x = 0; x < a.spec.width; ++x) {
      const size_t i = out.index(x, y);
      const bool va = a.valid[i] & FlowField::kValid;
      const bool vb = b.valid[i] & FlowField::kValid;
      if (!va && !vb) {
        out.valid[i] = 0;
        out.u[i] = out.v[i] = 0;
        continue;
      }
      if (va != vb) {
        const FlowField& src = va ? a : b;
        out.u[i] = src.u[i];
        out.v[i] = src.v[i];
        out.valid[i] = src.valid[i];
        continue;
      }
      const double w = std::clamp(static_cast<double>(t.at(x, y)), 0.0, 1.0);
      // Bring both longitude deltas onto the branch of a before mixing.
      const double ub = a.u[i] + wrap_delta_theta(b.u[i] - a.u[i]);
      out.u[i] = static_cast<float>(wrap_delta_theta(w * a.u[i] + (1.0 - w) * ub));
      out.v[i] = static_cast<float>(w * a.v[i] + (1.0 - w) * b.v[i]);
      out.valid[i] = a.valid[i] | b.valid[i];
    }
  });
  return out;
}

OracleBounds oracle_bounds(const FlowField& a, const FlowField& b, const FlowField& gt) {
  require_equirect_pair(a, b, "oracle_bounds");
  if (gt.spec != a.spec) throw DataError("oracle_bounds: gt spec mismatch");
  OracleBounds out{make_flow(a.spec), make_flow(a.spec)};
  parallel_for(0, a.spec.height, [&](int y) {
    for (int x = 0; x < a.spec.width; ++x) {
      const size_t i = out.lower.index(x, y);
      const auto pick = [&](const FlowField& src, FlowField& dst) {
        dst.u[i] = src.u[i];
        dst.v[i] = src.v[i];
        dst.valid[i] = src.valid[i];
      };
      const auto eg = endpoint_dir(gt, x, y);
      const auto ea = eg ? endpoint_dir(a, x, y) : std::nullopt;
      const auto eb = eg ? endpoint_dir(b, x, y) : std::nullopt;
      if (!eg || (!ea && !eb)) {
        out.lower.valid[i] = out.upper.valid[i] = 0;
        out.lower.u[i] = out.lower.v[i] = out.upper.u[i] = out.upper.v[i] = 0;
        continue;
      }
      if (!ea || !eb) {
        const FlowField& only = ea ? a : b;
        pick(only, out.lower);
        pick(only, out.upper);
        continue;
      }
      const double da = great_circle_angle(*ea, *eg);
      const double db = great_circle_angle(*eb, *eg);
      if (da <= db) {  // ties go to a
        pick(a, out.lower);
        pick(b, out.upper);
      } else {
        pick(b, out.lower);
        pick(a, out.upper);
      }
    }
  });
  return out;
}

FusionCues compute_cues(const ProjectionSpec& source_spec, const ProjectionSpec& eq_spec,
                        const FlowField* forward_eq, const FlowField* backward_eq) {
  validate(source_spec);
  validate(eq_spec);
  if (eq_spec.kind != Projection::Equirect)
    throw DataError("compute_cues: evaluation grid must be equirect");
  const WeightMap wm = solid_angle_weights(source_spec);
  const double ideal = 4.0 * kPi / (static_cast<double>(eq_spec.width) * eq_spec.height);

  FusionCues cues;
  cues.area_prior = Image(eq_spec.width, eq_spec.height, 1);
  cues.boundary_margin = Image(eq_spec.width, eq_spec.height, 1);
  cues.fb_error = Image(eq_spec.width, eq_spec.height, 1);
  const bool have_fb = forward_eq && backward_eq;

  parallel_for(0, eq_spec.height, [&](int y) {
    for (int x = 0; x < eq_spec.width; ++x) {
      const auto d = chart_dir(eq_spec, 0, x, y);
      const auto sp = dir_to_pixel(source_spec, *d);
      double area = 0;
      if (sp) {
        const int sx = std::clamp(static_cast<int>(std::lround(sp->x)), 0, source_spec.width - 1);
        const int sy = std::clamp(static_cast<int>(std::lround(sp->y)), 0, source_spec.height - 1);
        area = wm.at(sx, sy) / ideal;
      }
      cues.area_prior.at(x, y) = static_cast<float>(area);
      cues.boundary_margin.at(x, y) = static_cast<float>(ownership_margin(source_spec, *d));

      float fb = -1.0f;
      if (have_fb) {
        if (const auto e1 = endpoint_dir(*forward_eq, x, y)) {
          const auto p1 = chart_project(eq_spec, 0, *e1);
          float bu = 0, bv = 0;
          if (p1 && sample_flow(*backward_eq, 0, p1->x, p1->y, &bu, &bv)) {
            if (const auto e2 = chart_flow_endpoint(eq_spec, 0, p1->x, p1->y, bu, bv)) {
              fb = static_cast<float>(great_circle_angle(*e2, *d) * eq_spec.width / kTwoPi);
            }
          }
        }
      }
      cues.fb_error.at(x, y) = fb;
    }
  });
  return cues;
}

ConfidenceMap heuristic_confidence(const FusionCues& a, const FusionCues& b,
                                   const ConfidenceWeights& w) {
  const int width = a.area_prior.width, height = a.area_prior.height;
  if (b.area_prior.width != width || b.area_prior.height != height)
    throw DataError("heuristic_confidence: cue dimension mismatch");
  ConfidenceMap t(width, height, 1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double ca = w.area * a.area_prior.at(x, y) + w.margin * a.boundary_margin.at(x, y);
      double cb = w.area * b.area_prior.at(x, y) + w.margin * b.boundary_margin.at(x, y);
      const float fa = a.fb_error.at(x, y), fb = b.fb_error.at(x, y);
      if (fa >= 0.0f && fb >= 0.0f) {  // consistency cue only when both exist
        ca -= w.fb * fa;
        cb -= w.fb * fb;
      }
      t.at(x, y) = static_cast<float>(1.0 / (1.0 + std::exp(-w.gain * (ca - cb))));
    }
  return t;
}

}  // namespace panoflow
