#include "panoflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "panoflow/errors.hpp"
#include "panoflow/parallel.hpp"
#include "panoflow/util.hpp"

namespace panoflow {

EvalReport evaluate(const FlowField& pred, const FlowField& gt,
                    const WeightMap* weights, const Image* include_mask) {
  if (pred.spec != gt.spec) throw DataError("evaluate: spec mismatch");
  if (pred.spec.kind != Projection::Equirect)
    throw DataError("evaluate: equirect fields required");
  const int w = pred.spec.width, h = pred.spec.height;
  if (weights && (weights->width != w || weights->height != h))
    throw DataError("evaluate: weight map mismatch");
  if (include_mask && (include_mask->width != w || include_mask->height != h))
    throw DataError("evaluate: mask mismatch");

  EvalReport rep;
  rep.epe_map = Image(w, h, 1);
  rep.sd_map = Image(w, h, 1);
  rep.valid_mask = Image(w, h, 1);

  struct RowAcc {
    KahanSum epe, sd, wepe, wsd, wsum;
    long n = 0, masked = 0;
  };
  std::vector<RowAcc> acc(h);

  parallel_for(0, h, [&](int y) {
    RowAcc& ra = acc[y];
    for (int x = 0; x < w; ++x) {
      const size_t i = pred.index(x, y);
      const bool ok = (pred.valid[i] & FlowField::kValid) && (gt.valid[i] & FlowField::kValid) &&
                      (!include_mask || include_mask->at(x, y) > 0.5f);
      if (!ok) {
        ++ra.masked;
        continue;
      }
      const double du = wrap_delta_theta(pred.u[i] - gt.u[i]) * w / kTwoPi;
      const double dv = (pred.v[i] - gt.v[i]) * h / kPi;
      const double epe = std::hypot(du, dv);

      const auto ep = endpoint_dir(pred, x, y);
      const auto eg = endpoint_dir(gt, x, y);
      if (!ep || !eg) {
        ++ra.masked;
        continue;
      }
      const double sd = great_circle_angle(*ep, *eg) * w / kTwoPi;

      rep.epe_map.at(x, y) = static_cast<float>(epe);
      rep.sd_map.at(x, y) = static_cast<float>(sd);
      rep.valid_mask.at(x, y) = 1.0f;
      const double wt = weights ? weights->at(x, y) : 1.0;
      ra.epe.add(epe);
      ra.sd.add(sd);
      ra.wepe.add(wt * epe);
      ra.wsd.add(wt * sd);
      ra.wsum.add(wt);
      ++ra.n;
    }
  });

  // Rows are combined in a fixed order so results do not depend on the
  // parallel schedule.
  KahanSum epe, sd, wepe, wsd, wsum;
  for (const RowAcc& ra : acc) {
    epe.add(ra.epe.value());
    sd.add(ra.sd.value());
    wepe.add(ra.wepe.value());
    wsd.add(ra.wsd.value());
    wsum.add(ra.wsum.value());
    rep.n_valid += ra.n;
    rep.n_masked += ra.masked;
  }
  if (rep.n_valid > 0) {
    rep.epe_mean = epe.value() / rep.n_valid;
    rep.sd_mean = sd.value() / rep.n_valid;
  }
  if (wsum.value() > 0) {
    rep.epe_weighted = wepe.value() / wsum.value();
    rep.sd_weighted = wsd.value() / wsum.value();
  }
  return rep;
}

double chart_space_epe(const FlowField& pred, const FlowField& gt) {
  if (pred.spec != gt.spec) throw DataError("chart_space_epe: spec mismatch");
  const int w = pred.spec.width, h = pred.spec.height;
  KahanSum sum;
  long n = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t i = pred.index(x, y);
      if (!(pred.valid[i] & FlowField::kValid) || !(gt.valid[i] & FlowField::kValid)) continue;
      double pu, pv, gu, gv;
      flow_to_pixel_delta(pred.spec, pred.u[i], pred.v[i], &pu, &pv);
      flow_to_pixel_delta(gt.spec, gt.u[i], gt.v[i], &gu, &gv);
      double du = pu - gu;
      if (pred.spec.kind != Projection::CubePadding) {
        // periodic charts: difference on the short branch
        du = std::remainder(du, static_cast<double>(w));
      }
      sum.add(std::hypot(du, pv - gv));
      ++n;
    }
  return n > 0 ? sum.value() / n : 0.0;
}

HeatmapResult error_map_image(const Image& err_map, const Image* valid, double max_value) {
  double mx = max_value;
  if (mx <= 0.0) {
    for (int y = 0; y < err_map.height; ++y)
      for (int x = 0; x < err_map.width; ++x) {
        if (valid && valid->at(x, y) <= 0.5f) continue;
        mx = std::max(mx, static_cast<double>(err_map.at(x, y)));
      }
    if (mx <= 0.0) mx = 1.0;
  }
  Image out(err_map.width, err_map.height, 1);
  for (int y = 0; y < err_map.height; ++y)
    for (int x = 0; x < err_map.width; ++x) {
      if (valid && valid->at(x, y) <= 0.5f) continue;
      out.at(x, y) = static_cast<float>(std::min(1.0, err_map.at(x, y) / mx));
    }
  return {std::move(out), mx};
}

namespace {

struct Key {
  std::vector<std::string> order;
  int index_of(const std::string& s) {
    for (size_t i = 0; i < order.size(); ++i)
      if (order[i] == s) return static_cast<int>(i);
    order.push_back(s);
    return static_cast<int>(order.size()) - 1;
  }
};

}  // namespace

std::string compare_table_text(const std::vector<TableRow>& rows) {
  Key methods, datasets;
  std::map<std::pair<int, int>, const TableRow*> cells;
  for (const TableRow& r : rows)
    cells[{methods.index_of(r.method), datasets.index_of(r.dataset)}] = &r;

  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{"SD/EPE"};
  for (const auto& d : datasets.order) header.push_back(d);
  header.push_back("Average");
  grid.push_back(header);
  for (size_t m = 0; m < methods.order.size(); ++m) {
    std::vector<std::string> line{methods.order[m]};
    double ssd = 0, sepe = 0;
    int n = 0;
    char buf[64];
    for (size_t d = 0; d < datasets.order.size(); ++d) {
      const auto it = cells.find({static_cast<int>(m), static_cast<int>(d)});
      if (it == cells.end()) {
        line.push_back("-");
        continue;
      }
      std::snprintf(buf, sizeof buf, "%.3f/%.3f", it->second->sd_mean, it->second->epe_mean);
      line.push_back(buf);
      ssd += it->second->sd_mean;
      sepe += it->second->epe_mean;
      ++n;
    }
    if (n > 0) {
      std::snprintf(buf, sizeof buf, "%.3f/%.3f", ssd / n, sepe / n);
      line.push_back(buf);
    } else {
      line.push_back("-");
    }
    grid.push_back(line);
  }

  std::vector<size_t> widths(grid[0].size(), 0);
  for (const auto& line : grid)
    for (size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());
  std::ostringstream out;
  for (const auto& line : grid) {
    for (size_t c = 0; c < line.size(); ++c) {
      out << line[c] << std::string(widths[c] - line[c].size(), ' ');
      out << (c + 1 < line.size() ? "  " : "");
    }
    out << "\n";
  }
  return out.str();
}

std::string compare_table_csv(const std::vector<TableRow>& rows) {
  std::ostringstream out;
  out << "method,dataset,sd_mean,epe_mean,sd_weighted,epe_weighted,n_valid\n";
  char buf[256];
  for (const TableRow& r : rows) {
    if (r.method.find_first_of(",\n") != std::string::npos ||
        r.dataset.find_first_of(",\n") != std::string::npos)
      throw DataError("compare table CSV: labels must not contain ',' or newlines");
    std::snprintf(buf, sizeof buf, "%s,%s,%.9g,%.9g,%.9g,%.9g,%ld\n", r.method.c_str(),
                  r.dataset.c_str(), r.sd_mean, r.epe_mean, r.sd_weighted, r.epe_weighted,
                  r.n_valid);
    out << buf;
  }
  return out.str();
}

std::vector<TableRow> parse_table_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::vector<TableRow> rows;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("method,", 0) == 0) continue;
    }
    std::vector<std::string> cols;
    std::istringstream ls(line);
    std::string col;
    while (std::getline(ls, col, ',')) cols.push_back(col);
    if (cols.size() != 7) throw DataError("compare table CSV: bad row: " + line);
    TableRow r;
    r.method = cols[0];
    r.dataset = cols[1];
    r.sd_mean = std::stod(cols[2]);
    r.epe_mean = std::stod(cols[3]);
    r.sd_weighted = std::stod(cols[4]);
    r.epe_weighted = std::stod(cols[5]);
    r.n_valid = std::stol(cols[6]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace panoflow
