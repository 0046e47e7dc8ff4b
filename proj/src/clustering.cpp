#include "nfseg/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nfseg {

std::vector<std::vector<int>> ClusterSet::members() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(static_cast<int>(i));
  return out;
}

ClusterSet over_segment(std::span<const Vec2> pixels, std::span<const Vec2> flow,
                        int k, double lambda, std::uint64_t seed, int max_iter, double tol) {
  if (pixels.empty()) throw EmptySlice();
  if (pixels.size() != flow.size()) {
    throw std::invalid_argument("over_segment: pixels and flow differ in length");
  }
  if (k < 2) throw std::invalid_argument("over_segment: k must be at least 2");

  FeatureMatrix features(static_cast<Eigen::Index>(pixels.size()), 4);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    features(r, 0) = pixels[i].x();
    features(r, 1) = pixels[i].y();
    features(r, 2) = lambda * flow[i].x();
    features(r, 3) = lambda * flow[i].y();
  }

  KMeansOptions opts;
  opts.k = k;
  opts.seed = seed;
  opts.max_iter = max_iter;
  opts.tol = tol;
  auto km = kmeans(features, opts);

  ClusterSet out;
  out.labels = std::move(km.labels);
  out.k = k;
  out.centroids = std::move(km.centroids);
  return out;
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (auto& v : kernel) v /= sum;
  return kernel;
}

int cell_of(double coord, int size) {
  const int c = static_cast<int>(std::floor(coord));
  return std::clamp(c, 0, size - 1);
}

}  // namespace

std::vector<double> gaussian_convolve(std::span<const double> values, int width,
                                      int height, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_convolve: sigma must be positive");
  if (values.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("gaussian_convolve: grid size mismatch");
  }
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);

  std::vector<double> tmp(values.size(), 0.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int j = -radius; j <= radius; ++j) {
        const int xx = x + j;
        if (xx < 0 || xx >= width) continue;
        acc += kernel[j + radius] * values[static_cast<std::size_t>(y) * width + xx];
      }
      tmp[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  std::vector<double> out(values.size(), 0.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int j = -radius; j <= radius; ++j) {
        const int yy = y + j;
        if (yy < 0 || yy >= height) continue;
        acc += kernel[j + radius] * tmp[static_cast<std::size_t>(yy) * width + x];
      }
      out[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  return out;
}

SmoothedResiduals smooth_residuals(std::span<const Vec2> pixels,
                                   std::span<const double> residuals, double sigma,
                                   int width, int height) {
  if (pixels.size() != residuals.size()) {
    throw std::invalid_argument("smooth_residuals: pixels and residuals differ in length");
  }
  const std::size_t cells = static_cast<std::size_t>(width) * height;
  std::vector<double> mass(cells, 0.0);
  std::vector<double> count(cells, 0.0);
  std::vector<std::size_t> cell_index(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const auto c = static_cast<std::size_t>(cell_of(pixels[i].y(), height)) * width +
                   static_cast<std::size_t>(cell_of(pixels[i].x(), width));
    cell_index[i] = c;
    mass[c] += std::abs(residuals[i]);
    count[c] += 1.0;
  }
  const auto smooth_mass = gaussian_convolve(mass, width, height, sigma);
  const auto smooth_count = gaussian_convolve(count, width, height, sigma);

  SmoothedResiduals out;
  out.grid.width = width;
  out.grid.height = height;
  out.grid.values.assign(cells, 0.0);
  for (std::size_t c = 0; c < cells; ++c) {
    if (smooth_count[c] > 1e-300) out.grid.values[c] = smooth_mass[c] / smooth_count[c];
  }
  out.per_event.resize(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) out.per_event[i] = out.grid.values[cell_index[i]];
  return out;
}

Segregation segregate_by_residual(std::span<const double> smoothed) {
  Segregation out;
  const std::size_t n = smoothed.size();
  auto all_background = [&] {
    out.background.resize(n);
    std::iota(out.background.begin(), out.background.end(), 0);
    out.foreground.clear();
    return out;
  };
  if (n < 2) return all_background();

  const auto [lo_it, hi_it] = std::minmax_element(smoothed.begin(), smoothed.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) return all_background();

  std::vector<char> is_fg(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    double sum_lo = 0.0, sum_hi = 0.0;
    std::size_t n_lo = 0, n_hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const char fg = std::abs(smoothed[i] - hi) < std::abs(smoothed[i] - lo) ? 1 : 0;
      if (fg != is_fg[i]) changed = true;
      is_fg[i] = fg;
      if (fg) {
        sum_hi += smoothed[i];
        ++n_hi;
      } else {
        sum_lo += smoothed[i];
        ++n_lo;
      }
    }
    if (n_lo == 0 || n_hi == 0) return all_background();
    lo = sum_lo / static_cast<double>(n_lo);
    hi = sum_hi / static_cast<double>(n_hi);
    if (!changed && iter > 0) break;
  }
  for (std::size_t i = 0; i < n; ++i) {
    (is_fg[i] ? out.foreground : out.background).push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace nfseg
