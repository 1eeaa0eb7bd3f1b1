// Copyright 2026 The semer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "semer/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace semer {

namespace {

std::string Fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

struct Frame {
  double x, y, w, h;
};

class Svg {
 public:
  Svg(int width, int height) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
         << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }
  void Text(double x, double y, const std::string &s, const char *anchor = "middle", int size = 11) {
    out_ << "<text x=\"" << Fmt(x, 6) << "\" y=\"" << Fmt(y, 6) << "\" text-anchor=\"" << anchor
         << "\" font-size=\"" << size << "\">" << s << "</text>\n";
  }
  void Line(double x1, double y1, double x2, double y2, const char *stroke = "#444") {
    out_ << "<line x1=\"" << Fmt(x1, 6) << "\" y1=\"" << Fmt(y1, 6) << "\" x2=\"" << Fmt(x2, 6)
         << "\" y2=\"" << Fmt(y2, 6) << "\" stroke=\"" << stroke << "\"/>\n";
  }
  void Rect(double x, double y, double w, double h, const std::string &fill) {
    out_ << "<rect x=\"" << Fmt(x, 6) << "\" y=\"" << Fmt(y, 6) << "\" width=\"" << Fmt(w, 6)
         << "\" height=\"" << Fmt(h, 6) << "\" fill=\"" << fill << "\"/>\n";
  }
  void Polyline(const std::vector<std::pair<double, double>> &pts, const char *stroke) {
    out_ << "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" << stroke << "\" points=\"";
    for (const auto &[x, y] : pts) out_ << Fmt(x, 6) << ',' << Fmt(y, 6) << ' ';
    out_ << "\"/>\n";
  }
  void Circle(double x, double y, double r, const char *fill) {
    out_ << "<circle cx=\"" << Fmt(x, 6) << "\" cy=\"" << Fmt(y, 6) << "\" r=\"" << Fmt(r, 3)
         << "\" fill=\"" << fill << "\"/>\n";
  }
  std::string Finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  std::ostringstream out_;
};

// One line chart with axes, y ticks and an optional marked point.
void Chart(Svg &svg, const Frame &f, const std::vector<std::pair<double, double>> &series,
           const std::string &title, const char *color, int marked_index) {
  svg.Text(f.x + f.w / 2, f.y - 8, title, "middle", 12);
  svg.Line(f.x, f.y + f.h, f.x + f.w, f.y + f.h);
  svg.Line(f.x, f.y, f.x, f.y + f.h);
  if (series.empty()) return;
  double x0 = series.front().first, x1 = series.back().first;
  double y0 = series.front().second, y1 = y0;
  for (const auto &[x, y] : series) {
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return f.x + (x - x0) / (x1 - x0) * f.w; };
  auto py = [&](double y) { return f.y + f.h - (y - y0) / (y1 - y0) * f.h; };
  for (int t = 0; t <= 4; ++t) {
    const double v = y0 + (y1 - y0) * t / 4.0;
    svg.Line(f.x - 3, py(v), f.x, py(v));
    svg.Text(f.x - 5, py(v) + 4, Fmt(v), "end", 10);
  }
  svg.Text(f.x, f.y + f.h + 14, Fmt(x0), "middle", 10);
  svg.Text(f.x + f.w, f.y + f.h + 14, Fmt(x1), "middle", 10);
  svg.Text(f.x + f.w / 2, f.y + f.h + 28, "epoch", "middle", 10);
  std::vector<std::pair<double, double>> pts;
  for (const auto &[x, y] : series) pts.emplace_back(px(x), py(y));
  svg.Polyline(pts, color);
  if (marked_index >= 0 && marked_index < static_cast<int>(pts.size()))
    svg.Circle(pts[static_cast<std::size_t>(marked_index)].first,
               pts[static_cast<std::size_t>(marked_index)].second, 4, "#d62728");
}

}  // namespace

std::string LossCurveSvg(const TrainReport &report) {
  Svg svg(760, 300);
  svg.Text(380, 18, report.stage + " (stop: " + std::string(RenderStopReason(report.stop_reason)) +
                        ", best epoch " + std::to_string(report.best_epoch) + ")",
           "middle", 13);
  std::vector<std::pair<double, double>> loss, score;
  int marked = -1;
  for (const auto &e : report.epochs) {
    if (e.epoch > 0) loss.emplace_back(e.epoch, e.train_loss);
    if (e.epoch == report.best_epoch) marked = static_cast<int>(score.size());
    score.emplace_back(e.epoch, e.score);
  }
  Chart(svg, {70, 50, 280, 200}, loss, "train loss", "#1f77b4", -1);
  Chart(svg, {450, 50, 280, 200}, score, report.score_name, "#2ca02c", marked);
  return svg.Finish();
}

std::string ConfusionSvg(const EvalReport &report) {
  const double cell = 56, left = 110, top = 70;
  Svg svg(static_cast<int>(left + cell * kNumClasses + 30), static_cast<int>(top + cell * kNumClasses + 50));
  svg.Text(left + cell * kNumClasses / 2, 20, "confusion (WAF " + Fmt(report.waf, 4) + ", n " +
                                                  std::to_string(report.n) + ")",
           "middle", 13);
  svg.Text(left + cell * kNumClasses / 2, top - 30, "predicted", "middle", 11);
  for (int t = 0; t < kNumClasses; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    const int row_sum = std::max(1, report.support[ti]);
    svg.Text(left - 6, top + cell * t + cell / 2 + 4, std::string(RenderLabel(LabelFromIndex(t))), "end");
    svg.Text(left + cell * t + cell / 2, top - 8, std::string(RenderLabel(LabelFromIndex(t))), "middle", 10);
    for (int p = 0; p < kNumClasses; ++p) {
      const int count = report.confusion[ti][static_cast<std::size_t>(p)];
      const double share = static_cast<double>(count) / row_sum;
      const int shade = static_cast<int>(std::lround(255 * (1.0 - share)));
      char fill[16];
      std::snprintf(fill, sizeof fill, "#%02x%02xff", shade, shade);
      svg.Rect(left + cell * p, top + cell * t, cell - 1, cell - 1, fill);
      svg.Text(left + cell * p + cell / 2, top + cell * t + cell / 2 + 4, std::to_string(count));
    }
  }
  svg.Text(20, top + cell * kNumClasses / 2, "true", "middle", 11);
  return svg.Finish();
}

std::string ClassDistributionSvg(const PerClass<int> &gold, const PerClass<int> &pseudo,
                                 const PerClass<int> &duplicates) {
  const double left = 60, top = 50, height = 240, bar = 50, gap = 30;
  const double width = left + (bar + gap) * kNumClasses + 140;
  Svg svg(static_cast<int>(width), static_cast<int>(top + height + 50));
  svg.Text(width / 2, 20, "class distribution of training data", "middle", 13);
  int max_total = 1;
  for (std::size_t c = 0; c < kNumClasses; ++c)
    max_total = std::max(max_total, gold[c] + pseudo[c] + duplicates[c]);
  const double scale = height / max_total;
  svg.Line(left, top + height, left + (bar + gap) * kNumClasses, top + height);
  const char *colors[3] = {"#1f77b4", "#ff7f0e", "#9ca3af"};
  const char *names[3] = {"gold", "pseudo", "duplicate"};
  for (int c = 0; c < kNumClasses; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    const double x = left + gap / 2 + (bar + gap) * c;
    double y = top + height;
    const int parts[3] = {gold[ci], pseudo[ci], duplicates[ci]};
    for (int k = 0; k < 3; ++k) {
      const double h = parts[k] * scale;
      y -= h;
      if (parts[k] > 0) svg.Rect(x, y, bar, h, colors[k]);
    }
    std::string label = std::to_string(gold[ci]);
    if (pseudo[ci] > 0) label += "(+" + std::to_string(pseudo[ci]) + ")";
    svg.Text(x + bar / 2, y - 4, label, "middle", 10);
    svg.Text(x + bar / 2, top + height + 16, std::string(RenderLabel(LabelFromIndex(c))));
  }
  for (int k = 0; k < 3; ++k) {
    const double lx = left + (bar + gap) * kNumClasses + 20;
    svg.Rect(lx, top + 20 * k, 12, 12, colors[k]);
    svg.Text(lx + 18, top + 20 * k + 10, names[k], "start");
  }
  return svg.Finish();
}

}  // namespace semer
