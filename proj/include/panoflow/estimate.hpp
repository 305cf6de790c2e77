#pragma once

#include <string>

#include "panoflow/flow.hpp"
#include "panoflow/image.hpp"

namespace panoflow {

enum class EstimatorKind { BlockMatch, HornSchunck, PerturbedGT };

/// Controlled error model for the perturbed ground-truth estimator. The
/// amplitude varies with a per-chart distortion coordinate: equirect uses
/// |latitude|, tri-cylinder the distance from the band equator, cube-padding
/// the distance from the face center. "EquatorFavoring" means the error
/// GROWS away from the chart's sweet spot (the chart is good at its
/// equator); "PoleFavoring" inverts the ramp.
struct PerturbModel {
  enum class Profile { Uniform, EquatorFavoring, PoleFavoring };
  Profile profile = Profile::Uniform;
  double base_px = 0.0;
  double gain_px = 0.0;
  double power = 1.0;
  double noise = 0.35;  // white-noise fraction of the amplitude
};

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::BlockMatch;
  int levels = 3;
  int search_radius = 4;
  int block = 7;
  double hs_alpha = 1.0;
  int hs_iterations = 100;
  double pole_exclude = 0.05;  // equirect BlockMatch: excluded row fraction
  PerturbModel perturb;
  uint64_t seed = 0;
};

/// Throws ConfigError on out-of-range parameters.
void validate(const EstimatorConfig& cfg);

/// key = value lines, '#' comments. Unknown keys are rejected. Applies onto
/// the given base config.
EstimatorConfig parse_estimator_config(const std::string& text, EstimatorConfig base = {});

/// Dense flow between two frames in the spec's chart coordinates (equirect
/// results are converted to spherical radians). PerturbedGT requires the
/// equirect ground truth. Deterministic given config + seed.
FlowField estimate(const Image& frame_a, const Image& frame_b, const ProjectionSpec& spec,
                   const EstimatorConfig& cfg, const FlowField* gt_equirect = nullptr);

/// Adds the model's chart-dependent smooth bias + noise to a flow field.
FlowField perturb_gt(const FlowField& gt, const PerturbModel& model, uint64_t seed);

/// Horn-Schunck objective (data + alpha^2 * smoothness) under the same
/// discretization the solver minimizes; flow in pixel units.
double hs_energy(const Image& frame_a, const Image& frame_b, const ProjectionSpec& spec,
                 const std::vector<float>& u_px, const std::vector<float>& v_px, double alpha);

}  // namespace panoflow
