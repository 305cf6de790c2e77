#pragma once

#include <string>
#include <vector>

#include "panoflow/flow.hpp"
#include "panoflow/projection.hpp"

namespace panoflow {

/// EPE (pixels) and spherical distance (pixel-equivalent: great-circle
/// radians scaled by W/2pi) between a prediction and ground truth.
struct EvalReport {
  double epe_mean = 0.0;
  double sd_mean = 0.0;
  double epe_weighted = 0.0;
  double sd_weighted = 0.0;
  long n_valid = 0;
  long n_masked = 0;
  Image epe_map;     // per pixel, 0 where excluded
  Image sd_map;
  Image valid_mask;  // 1 = included in the means
};

/// Both fields must be equirect on the same spec. weights: solid-angle
/// weighting for the *_weighted aggregates (null = uniform). include_mask:
/// optional visibility mask (>0.5 keeps the pixel).
EvalReport evaluate(const FlowField& pred, const FlowField& gt,
                    const WeightMap* weights = nullptr, const Image* include_mask = nullptr);

/// Debug-only mean EPE directly in a chart's pixel coordinates (any layout,
/// same spec). Tables always go through evaluate() on the equirect grid.
double chart_space_epe(const FlowField& pred, const FlowField& gt);

struct HeatmapResult {
  Image image;      // single channel in [0, 1]
  double max_used;  // normalization constant (record next to the file)
};

/// Normalizes an error map by its max (or the supplied max, enabling
/// cross-comparable renderings); excluded pixels are black.
HeatmapResult error_map_image(const Image& err_map, const Image* valid = nullptr,
                              double max_value = 0.0);

struct TableRow {
  std::string method;
  std::string dataset;
  double sd_mean = 0.0;
  double epe_mean = 0.0;
  double sd_weighted = 0.0;
  double epe_weighted = 0.0;
  long n_valid = 0;
};

/// Aligned "SD/EPE" table, methods as rows, datasets as columns, plus an
/// Average column (arithmetic mean over datasets).
std::string compare_table_text(const std::vector<TableRow>& rows);

/// CSV: method,dataset,sd_mean,epe_mean,sd_weighted,epe_weighted,n_valid.
std::string compare_table_csv(const std::vector<TableRow>& rows);
std::vector<TableRow> parse_table_csv(const std::string& csv);

}  // namespace panoflow
