#include "plot.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <stdexcept>

namespace nfseg::tools {

namespace {

cv::Scalar palette(int id) {
  static const cv::Scalar colors[] = {{60, 60, 230},  {60, 200, 60},  {230, 140, 40}, {40, 200, 230},
                                      {200, 60, 200}, {230, 230, 60}, {120, 80, 200}, {80, 160, 120}};
  return colors[static_cast<std::size_t>(id - 1) % std::size(colors)];
}

void write_png(const std::string& path, const cv::Mat& img) {
  if (!cv::imwrite(path, img)) throw std::runtime_error("cannot write '" + path + "'");
}

// One axis of the object-translation series.
void plot_axis(const EvalReport& report, int axis, const std::string& path) {
  const int w = 800, h = 400, margin = 50;
  cv::Mat img(h, w, CV_8UC3, cv::Scalar(255, 255, 255));

  std::map<int, std::vector<std::pair<int, double>>> est, gt;
  int max_frame = 1;
  double lo = 0.0, hi = 0.0;
  for (const auto& s : report.object_motion) {
    max_frame = std::max(max_frame, s.index);
    gt[s.object].push_back({s.index, s.gt[axis]});
    lo = std::min(lo, s.gt[axis]);
    hi = std::max(hi, s.gt[axis]);
    if (std::isfinite(s.est[axis])) {
      est[s.object].push_back({s.index, s.est[axis]});
      lo = std::min(lo, s.est[axis]);
      hi = std::max(hi, s.est[axis]);
    }
  }
  if (hi - lo < 1e-9) {
    lo -= 1.0;
    hi += 1.0;
  }
  auto to_px = [&](int frame, double v) {
    const double x = margin + (w - 2.0 * margin) * frame / max_frame;
    const double y = h - margin - (h - 2.0 * margin) * (v - lo) / (hi - lo);
    return cv::Point(static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y)));
  };

  cv::rectangle(img, {margin, margin}, {w - margin, h - margin}, cv::Scalar(0, 0, 0));
  cv::line(img, to_px(0, 0.0), to_px(max_frame, 0.0), cv::Scalar(200, 200, 200));
  const std::string title = std::string(axis == 0 ? "dX" : "dY") + " per frame  (solid: estimate, thin: ground truth)";
  cv::putText(img, title, {margin, margin - 15}, cv::FONT_HERSHEY_SIMPLEX, 0.5, cv::Scalar(0, 0, 0));
  char range[64];
  std::snprintf(range, sizeof range, "[%.3g, %.3g]", lo, hi);
  cv::putText(img, range, {margin, h - 15}, cv::FONT_HERSHEY_SIMPLEX, 0.45, cv::Scalar(0, 0, 0));

  for (const auto& [object, pts] : gt) {
    for (std::size_t i = 1; i < pts.size(); ++i) {
      cv::line(img, to_px(pts[i - 1].first, pts[i - 1].second), to_px(pts[i].first, pts[i].second), palette(object),
               1, cv::LINE_AA);
    }
  }
  for (const auto& [object, pts] : est) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      cv::circle(img, to_px(pts[i].first, pts[i].second), 3, palette(object), cv::FILLED, cv::LINE_AA);
      if (i > 0) {
        cv::line(img, to_px(pts[i - 1].first, pts[i - 1].second), to_px(pts[i].first, pts[i].second),
                 palette(object), 2, cv::LINE_AA);
      }
    }
  }
  write_png(path, img);
}

}  // namespace

void plot_series(const EvalReport& report, const std::string& dir) {
  const std::filesystem::path base(dir);
  plot_axis(report, 0, (base / "dx.png").string());
  plot_axis(report, 1, (base / "dy.png").string());
}

void plot_overlays(const Recording& recording, const RunOutputs& outputs, const std::string& dir) {
  const std::filesystem::path base(dir);
  const auto& K = recording.intrinsics;
  const std::size_t frames = std::min(recording.slices.size(), outputs.steps.size());
  for (std::size_t f = 0; f < frames; ++f) {
    const Slice& slice = recording.slices[f];
    const auto& labels = outputs.steps[f].labels;
    cv::Mat img(K.height, K.width, CV_8UC3, cv::Scalar(0, 0, 0));
    cv::Mat gt_mask(K.height, K.width, CV_8UC1, cv::Scalar(0));
    for (std::size_t i = 0; i < slice.size(); ++i) {
      const int x = static_cast<int>(slice.events[i].x);
      const int y = static_cast<int>(slice.events[i].y);
      if (x < 0 || y < 0 || x >= K.width || y >= K.height) continue;
      const int label = i < labels.size() ? labels[i] : 0;
      const cv::Scalar c = label > 0 ? palette(label) : cv::Scalar(110, 110, 110);
      img.at<cv::Vec3b>(y, x) = cv::Vec3b(static_cast<uchar>(c[0]), static_cast<uchar>(c[1]), static_cast<uchar>(c[2]));
      if (!slice.labels.empty() && slice.labels[i] > 0) gt_mask.at<uchar>(y, x) = 255;
    }
    cv::dilate(gt_mask, gt_mask, cv::getStructuringElement(cv::MORPH_ELLIPSE, {7, 7}));
    std::vector<std::vector<cv::Point>> contours;
    cv::findContours(gt_mask, contours, cv::RETR_EXTERNAL, cv::CHAIN_APPROX_SIMPLE);
    cv::drawContours(img, contours, -1, cv::Scalar(255, 255, 255), 1);
    char name[48];
    std::snprintf(name, sizeof name, "overlay_%03zu.png", f);
    write_png((base / name).string(), img);
  }
}

}  // namespace nfseg::tools
