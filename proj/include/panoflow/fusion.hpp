#pragma once

#include "panoflow/flow.hpp"

namespace panoflow {

/// Per-pixel blend weight t in [0, 1]; single-channel image.
using ConfidenceMap = Image;

/// P = t * a + (1 - t) * b, component-wise, with longitude deltas combined
/// on their shortest-arc branch. Where only one input is valid it is copied;
/// where neither is, the output is invalid. Equirect fields only.
FlowField blend(const FlowField& a, const FlowField& b, const ConfidenceMap& t);

struct OracleBounds {
  FlowField lower;  // per pixel: the prediction closer to ground truth
  FlowField upper;  // per pixel: the farther one
};

/// Per-pixel best/worst selection by great-circle endpoint error vs gt.
OracleBounds oracle_bounds(const FlowField& a, const FlowField& b, const FlowField& gt);

/// Per-pixel cues about one prediction, on the evaluation (equirect) grid.
struct FusionCues {
  Image area_prior;       // source-pixel solid angle / ideal uniform area
  Image boundary_margin;  // radians to the source chart's ownership boundary
  Image fb_error;         // forward-backward inconsistency in pixels; -1 = n/a
};

/// Derives cues for a prediction that was estimated in source_spec and
/// warped to eq_spec. Forward/backward equirect fields enable the
/// consistency term.
FusionCues compute_cues(const ProjectionSpec& source_spec, const ProjectionSpec& eq_spec,
                        const FlowField* forward_eq = nullptr,
                        const FlowField* backward_eq = nullptr);

struct ConfidenceWeights {
  double gain = 4.0;    // logistic steepness
  double area = 1.0;    // weight of the normalized solid-angle prior
  double margin = 1.0;  // weight of the boundary margin (per radian)
  double fb = 0.5;      // weight of the FB error (per pixel)
};

/// t = sigmoid(gain * (c_a - c_b)) with c = area_prior * w_area +
/// margin * w_margin - fb * w_fb. Equal cues give t = 0.5. The cues are
/// derived priors only; absolute pixel coordinates are deliberately not
/// an input.
ConfidenceMap heuristic_confidence(const FusionCues& a, const FusionCues& b,
                                   const ConfidenceWeights& w = {});

}  // namespace panoflow
