/**
 * Copyright 2026 The vidmatch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "vidmatch/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "vidmatch/common.hpp"

namespace vidmatch {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

// One panel of line plots in a W x H box at (x0, y0).
void panel(std::ostream& svg, double x0, double y0, double w, double h, const std::string& title,
           const std::vector<const MetricsSeries*>& runs, std::vector<double> MetricsSeries::*field) {
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto* r : runs)
    for (std::size_t i = 0; i < r->step.size(); ++i) {
      xmin = std::min(xmin, r->step[i]);
      xmax = std::max(xmax, r->step[i]);
      ymin = std::min(ymin, (r->*field)[i]);
      ymax = std::max(ymax, (r->*field)[i]);
    }
  if (!(xmax > xmin)) xmax = xmin + 1;
  if (!(ymax > ymin)) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double pl = 50, pr = 10, pt = 24, pb = 28;
  const double iw = w - pl - pr, ih = h - pt - pb;
  auto px = [&](double x) { return x0 + pl + (x - xmin) / (xmax - xmin) * iw; };
  auto py = [&](double y) { return y0 + pt + (1 - (y - ymin) / (ymax - ymin)) * ih; };
  svg << "<text x=\"" << x0 + w / 2 << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\" font-size=\"13\">" << title
      << "</text>\n";
  svg << "<rect x=\"" << x0 + pl << "\" y=\"" << y0 + pt << "\" width=\"" << iw << "\" height=\"" << ih
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
  svg << "<text x=\"" << x0 + pl - 4 << "\" y=\"" << y0 + pt + 10 << "\" text-anchor=\"end\" font-size=\"10\">"
      << fmt_short(ymax) << "</text>\n";
  svg << "<text x=\"" << x0 + pl - 4 << "\" y=\"" << y0 + pt + ih << "\" text-anchor=\"end\" font-size=\"10\">"
      << fmt_short(ymin) << "</text>\n";
  svg << "<text x=\"" << x0 + pl << "\" y=\"" << y0 + h - 10 << "\" font-size=\"10\">" << fmt_short(xmin) << "</text>\n";
  svg << "<text x=\"" << x0 + pl + iw << "\" y=\"" << y0 + h - 10 << "\" text-anchor=\"end\" font-size=\"10\">step "
      << fmt_short(xmax) << "</text>\n";
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto* r = runs[k];
    svg << "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" << kColors[k % 8] << "\" points=\"";
    for (std::size_t i = 0; i < r->step.size(); ++i) svg << fmt_short(px(r->step[i])) << "," << fmt_short(py((r->*field)[i])) << " ";
    svg << "\"/>\n";
    svg << "<text x=\"" << x0 + pl + 6 << "\" y=\"" << y0 + pt + 14 + 12 * static_cast<double>(k)
        << "\" font-size=\"10\" fill=\"" << kColors[k % 8] << "\">" << r->name << "</text>\n";
  }
}

}  // namespace

std::vector<std::string> dedupe_presets(const std::vector<std::string>& presets) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& p : presets) {
    if (!seen.insert(p).second) {
      std::cerr << "notice: preset '" << p << "' listed more than once, running it once\n";
      continue;
    }
    out.push_back(p);
  }
  return out;
}

std::vector<AblationRow> aggregate(const std::vector<AblationCell>& cells) {
  std::vector<AblationRow> rows;
  std::map<std::string, std::vector<const AblationCell*>> by;
  for (const auto& c : cells) {
    if (!by.count(c.preset)) rows.push_back({c.preset});
    by[c.preset].push_back(&c);
  }
  for (auto& row : rows) {
    std::vector<double> acc, mask;
    for (const auto* c : by[row.preset])
      if (c->ok) {
        acc.push_back(c->accuracy);
        mask.push_back(c->mean_mask_rate);
      }
    row.n_seeds = acc.size();
    if (acc.empty()) {
      row.mean_acc = row.std_acc = row.mean_mask_rate = NAN;
      continue;
    }
    double s = 0, m = 0;
    for (std::size_t i = 0; i < acc.size(); ++i) {
      s += acc[i];
      m += mask[i];
    }
    row.mean_acc = s / static_cast<double>(acc.size());
    row.mean_mask_rate = m / static_cast<double>(acc.size());
    double var = 0;
    for (double a : acc) var += (a - row.mean_acc) * (a - row.mean_acc);
    row.std_acc = acc.size() > 1 ? std::sqrt(var / static_cast<double>(acc.size() - 1)) : 0.0;
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string s = "preset,n_seeds,mean_acc,std_acc,mean_mask_rate\n";
  auto cell = [](double v) { return std::isnan(v) ? std::string() : fmt(v); };
  for (const auto& r : rows)
    s += r.preset + "," + std::to_string(r.n_seeds) + "," + cell(r.mean_acc) + "," + cell(r.std_acc) + "," +
         cell(r.mean_mask_rate) + "\n";
  return s;
}

std::optional<MetricsSeries> read_metrics(const fs::path& csv, const std::string& name) {
  std::ifstream in(csv);
  if (!in) {
    std::cerr << "notice: " << csv.string() << " not found, skipped\n";
    return std::nullopt;
  }
  MetricsSeries m;
  m.name = name;
  std::string line;
  if (!std::getline(in, line)) {
    std::cerr << "notice: " << csv.string() << " is empty, skipped\n";
    return std::nullopt;
  }
  m.header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < m.header.size(); ++i) col[m.header[i]] = i;
  for (const char* need : {"step", "L_match", "total", "tau_global", "mask_rate"})
    if (!col.count(need)) {
      std::cerr << "notice: " << csv.string() << " lacks column " << need << ", skipped\n";
      return std::nullopt;
    }
  std::vector<std::size_t> tau_cols;
  for (std::size_t i = 0; i < m.header.size(); ++i)
    if (m.header[i].rfind("tau_class_", 0) == 0) tau_cols.push_back(i);
  m.tau_class.resize(tau_cols.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != m.header.size()) {
      std::cerr << "notice: " << csv.string() << ":" << line_no << " has " << cells.size() << " cells, expected "
                << m.header.size() << "; file skipped\n";
      return std::nullopt;
    }
    auto num = [&](std::size_t c) {
      double v = 0;
      const auto& s = cells[c];
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc()) throw ValidationError("bad number");
      return v;
    };
    try {
      m.step.push_back(num(col["step"]));
      m.l_match.push_back(num(col["L_match"]));
      m.total.push_back(num(col["total"]));
      m.tau_global.push_back(num(col["tau_global"]));
      m.mask_rate.push_back(num(col["mask_rate"]));
      for (std::size_t k = 0; k < tau_cols.size(); ++k) m.tau_class[k].push_back(num(tau_cols[k]));
    } catch (const ValidationError&) {
      std::cerr << "notice: " << csv.string() << ":" << line_no << " is not numeric; file skipped\n";
      return std::nullopt;
    }
  }
  if (m.step.empty()) {
    std::cerr << "notice: " << csv.string() << " has zero steps, skipped\n";
    return std::nullopt;
  }
  return m;
}

std::vector<fs::path> write_report(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  std::vector<MetricsSeries> runs;
  for (const auto& dir : run_dirs) {
    const std::string name = fs::path(dir).lexically_normal().filename().empty()
                                 ? fs::path(dir).lexically_normal().parent_path().filename().string()
                                 : fs::path(dir).lexically_normal().filename().string();
    if (auto m = read_metrics(dir / "metrics.csv", name)) runs.push_back(std::move(*m));
  }
  if (runs.empty()) return {};
  std::string stem = "report";
  for (const auto& r : runs) stem += "_" + r.name;
  fs::create_directories(out_dir);
  const fs::path svg_path = out_dir / (stem + ".svg"), csv_path = out_dir / (stem + ".csv");

  std::vector<const MetricsSeries*> ptrs;
  for (const auto& r : runs) ptrs.push_back(&r);
  std::ofstream svg(svg_path);
  const double w = 420, h = 260;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * w << "\" height=\"" << 2 * h
      << "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  panel(svg, 0, 0, w, h, "unlabeled consistency loss L_match", ptrs, &MetricsSeries::l_match);
  panel(svg, w, 0, w, h, "total loss", ptrs, &MetricsSeries::total);
  panel(svg, 0, h, w, h, "global threshold tau", ptrs, &MetricsSeries::tau_global);
  panel(svg, w, h, w, h, "mask rate", ptrs, &MetricsSeries::mask_rate);
  svg << "</svg>\n";
  if (!svg) throw IoError("cannot write " + svg_path.string());

  std::ofstream csv(csv_path);
  csv << "run,step,L_match,total,tau_global,mask_rate\n";
  for (const auto& r : runs)
    for (std::size_t i = 0; i < r.step.size(); ++i)
      csv << r.name << "," << fmt(r.step[i]) << "," << fmt(r.l_match[i]) << "," << fmt(r.total[i]) << ","
          << fmt(r.tau_global[i]) << "," << fmt(r.mask_rate[i]) << "\n";
  if (!csv) throw IoError("cannot write " + csv_path.string());
  return {svg_path, csv_path};
}

}  // namespace vidmatch
