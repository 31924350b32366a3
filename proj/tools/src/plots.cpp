// Copyright 2026 The mpctune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Hand-emitted SVG: axes, ticks and polylines only.

#include "mpctune/harness/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace mpctune::harness {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::string color;
  bool dashed = false;
};

class Svg {
 public:
  Svg(double w, double h) : w_(w), h_(h) {}

  void text(double x, double y, const std::string& s, const char* anchor = "middle",
            int size = 12, double rotate = 0.0) {
    os_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size
        << "\" text-anchor=\"" << anchor << "\"";
    if (rotate != 0.0)
      os_ << " transform=\"rotate(" << num(rotate) << ' ' << num(x) << ' ' << num(y) << ")\"";
    os_ << ">" << escape(s) << "</text>\n";
  }

  void line(double x1, double y1, double x2, double y2, const char* stroke = "#000",
            double width = 1.0) {
    os_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
        << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width)
        << "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                bool dashed) {
    if (pts.empty()) return;
    os_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
    if (dashed) os_ << " stroke-dasharray=\"5,3\"";
    os_ << " points=\"";
    for (const auto& [x, y] : pts) os_ << num(x) << ',' << num(y) << ' ';
    os_ << "\"/>\n";
  }

  std::string str() const {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w_) << "\" height=\""
        << num(h_) << "\" viewBox=\"0 0 " << num(w_) << ' ' << num(h_) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << os_.str() << "</svg>\n";
    return out.str();
  }

 private:
  double w_, h_;
  std::ostringstream os_;
};

std::vector<double> linear_ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (raw <= step) break;
  }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step)
    t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return t;
}

// One framed panel; y is log10-scaled when logy. Non-positive points are
// dropped from log panels and split the polyline.
void panel(Svg& svg, double px, double py, double pw, double ph, const std::string& title,
           const std::string& xlabel, const std::string& ylabel, const std::vector<Series>& series,
           bool logy) {
  double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
  auto ty = [&](double y) { return logy ? std::log10(y) : y; };
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || (logy && s.y[i] <= 0.0)) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1.0;
  if (logy) {
    ymin = std::floor(ymin);
    ymax = std::max(std::ceil(ymax), ymin + 1.0);
  } else if (ymax == ymin) {
    ymin -= 1.0;
    ymax += 1.0;
  } else {
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
  }
  auto sx = [&](double x) { return px + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return py + ph - (y - ymin) / (ymax - ymin) * ph; };

  svg.text(px + pw / 2, py - 10, title, "middle", 14);
  svg.line(px, py + ph, px + pw, py + ph);
  svg.line(px, py, px, py + ph);
  for (double t : linear_ticks(xmin, xmax)) {
    svg.line(sx(t), py + ph, sx(t), py + ph + 4);
    svg.text(sx(t), py + ph + 16, num(t), "middle", 10);
  }
  if (logy) {
    for (double d = ymin; d <= ymax + 1e-9; d += 1.0) {
      svg.line(px - 4, sy(d), px, sy(d));
      svg.line(px, sy(d), px + pw, sy(d), "#e0e0e0", 0.5);
      svg.text(px - 6, sy(d) + 3, "1e" + num(d), "end", 10);
    }
  } else {
    for (double t : linear_ticks(ymin, ymax)) {
      svg.line(px - 4, sy(t), px, sy(t));
      svg.line(px, sy(t), px + pw, sy(t), "#e0e0e0", 0.5);
      svg.text(px - 6, sy(t) + 3, num(t), "end", 10);
    }
  }
  svg.text(px + pw / 2, py + ph + 34, xlabel, "middle", 12);
  svg.text(px - 48, py + ph / 2, ylabel, "middle", 12, -90.0);

  double ly = py + 12;
  for (const auto& s : series) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || (logy && s.y[i] <= 0.0)) {
        svg.polyline(pts, s.color, s.dashed);
        pts.clear();
        continue;
      }
      pts.emplace_back(sx(s.x[i]), sy(ty(s.y[i])));
    }
    svg.polyline(pts, s.color, s.dashed);
    svg.line(px + pw - 150, ly - 4, px + pw - 130, ly - 4, s.color.c_str(), 2.0);
    svg.text(px + pw - 126, ly, s.label, "start", 10);
    ly += 14;
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::IoError, "cannot write " + path.string());
  os << text;
}

}  // namespace

std::vector<std::pair<RunFileName, std::filesystem::path>> list_run_files(
    const std::filesystem::path& dir, const std::string& prefix) {
  std::vector<std::pair<RunFileName, std::filesystem::path>> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    if (auto n = parse_run_file_name(e.path().filename().string(), prefix))
      out.emplace_back(*n, e.path());
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first.variant, a.first.seed) < std::tie(b.first.variant, b.first.seed);
  });
  return out;
}

void render_plots(const std::filesystem::path& dir) {
  // Median across seeds per variant and iteration.
  std::map<std::string, std::vector<IterateFile>> by_variant;
  for (const auto& [name, path] : list_run_files(dir, "iterates"))
    by_variant[name.variant].push_back(read_iterates(path));
  require(!by_variant.empty(), ErrorCode::EmptyDirectory,
          "no iterate CSV files in " + dir.string());

  std::vector<Series> cost, pen;
  std::size_t color = 0;
  for (const auto& [variant, files] : by_variant) {
    Series c{variant, {}, {}, kPalette[color % 10]}, p = c;
    std::size_t len = 0;
    for (const auto& f : files) len = std::max(len, f.records.size());
    for (std::size_t k = 0; k < len; ++k) {
      std::vector<double> cs, ps;
      for (const auto& f : files) {
        if (k >= f.records.size()) continue;
        cs.push_back(f.records[k].cost);
        ps.push_back(f.records[k].penalty);
      }
      c.x.push_back(static_cast<double>(files.front().records.size() > k ? files.front().records[k].k
                                                                         : static_cast<long long>(k)));
      c.y.push_back(median(cs));
      p.x.push_back(c.x.back());
      p.y.push_back(median(ps));
    }
    cost.push_back(std::move(c));
    pen.push_back(std::move(p));
    ++color;
  }
  Svg conv(1000, 420);
  panel(conv, 80, 40, 380, 320, "cost C (median over seeds)", "iteration k", "C", cost, true);
  panel(conv, 580, 40, 380, 320, "penalty P (median over seeds)", "iteration k", "P", pen, true);
  write_file(dir / "convergence.svg", conv.str());

  // Final closed-loop trajectory of the first seed of each variant.
  std::map<std::string, Trajectory> traj;
  for (const auto& [name, path] : list_run_files(dir, "trajectory_final"))
    if (!traj.count(name.variant)) traj.emplace(name.variant, read_trajectory(path));
  if (traj.empty()) return;
  const Eigen::Index nx = traj.begin()->second.states.front().size();
  const bool quad = nx >= 9;
  std::vector<Series> left, right;
  const char* axis_names[] = {"x", "y", "z"};
  const char* angle_names[] = {"roll", "pitch", "yaw"};
  color = 0;
  for (const auto& [variant, tr] : traj) {
    const std::string col = kPalette[color++ % 10];
    const Eigen::Index n_left = quad ? 3 : 1;
    for (Eigen::Index i = 0; i < n_left; ++i) {
      Series s{variant + (quad ? std::string(" ") + axis_names[i] : ""), {}, {}, col, i > 0};
      for (std::size_t t = 0; t < tr.states.size(); ++t) {
        s.x.push_back(static_cast<double>(t));
        s.y.push_back(tr.states[t][i]);
      }
      left.push_back(std::move(s));
    }
    const Eigen::Index r0 = quad ? 6 : 1, r1 = quad ? 9 : nx;
    for (Eigen::Index i = r0; i < r1; ++i) {
      Series s{variant + (quad ? std::string(" ") + angle_names[i - r0]
                               : " x_" + std::to_string(i)),
               {}, {}, col, i > r0};
      for (std::size_t t = 0; t < tr.states.size(); ++t) {
        s.x.push_back(static_cast<double>(t));
        s.y.push_back(tr.states[t][i]);
      }
      right.push_back(std::move(s));
    }
  }
  Svg tsvg(1000, 420);
  panel(tsvg, 80, 40, 380, 320, quad ? "position" : "position x_0", "time step t",
        quad ? "m" : "x_0", left, false);
  panel(tsvg, 580, 40, 380, 320, quad ? "attitude" : "remaining states", "time step t",
        quad ? "rad" : "value", right, false);
  write_file(dir / "trajectory.svg", tsvg.str());
}

}  // namespace mpctune::harness
