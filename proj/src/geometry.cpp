// Copyright 2026 The roadplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "roadplan/geometry.hpp"

#include "roadplan/csv.hpp"
#include "roadplan/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace roadplan
{

std::vector<double> chord_lengths(const Waypoints & points)
{
  if (points.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "at least two waypoints are required");
  }
  std::vector<double> s(points.size(), 0.0);
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double ds = (points[i] - points[i - 1]).norm();
    if (!(ds > 0.0)) {
      throw Error(
        ErrorCode::DuplicatePoint, "waypoints " + std::to_string(i - 1) + " and " +
                                     std::to_string(i) + " coincide");
    }
    s[i] = s[i - 1] + ds;
  }
  return s;
}

double point_segment_distance(
  const Eigen::Vector2d & p, const Eigen::Vector2d & a, const Eigen::Vector2d & b)
{
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double point_polyline_distance(const Eigen::Vector2d & p, const Waypoints & polyline)
{
  if (polyline.size() == 1) return (p - polyline.front()).norm();
  double best = INFINITY;
  for (std::size_t i = 1; i < polyline.size(); ++i) {
    best = std::min(best, point_segment_distance(p, polyline[i - 1], polyline[i]));
  }
  return best;
}

double polyline_length(const Waypoints & points)
{
  double len = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) len += (points[i] - points[i - 1]).norm();
  return len;
}

Waypoints thin(const Waypoints & points, double tolerance)
{
  if (tolerance < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "thinning tolerance must be non-negative");
  }
  if (tolerance == 0.0 || points.size() <= 2) return points;

  std::vector<bool> keep(points.size(), false);
  keep.front() = keep.back() = true;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, points.size() - 1}};
  while (!stack.empty()) {
    const auto [lo, hi] = stack.back();
    stack.pop_back();
    double worst = -1.0;
    std::size_t idx = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double d = point_segment_distance(points[i], points[lo], points[hi]);
      if (d > worst) {
        worst = d;
        idx = i;
      }
    }
    if (worst > tolerance) {
      keep[idx] = true;
      stack.emplace_back(lo, idx);
      stack.emplace_back(idx, hi);
    }
  }
  Waypoints out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (keep[i]) out.push_back(points[i]);
  }
  return out;
}

CubicSpline CubicSpline::interpolate(const Waypoints & points)
{
  CubicSpline sp;
  sp.s_ = chord_lengths(points);
  sp.p_ = points;
  const std::size_t n = points.size();
  sp.m_.assign(n, Eigen::Vector2d::Zero());
  if (n < 3) return sp;

  // Tridiagonal system for interior moments, natural ends M_0 = M_{n-1} = 0.
  const std::size_t k = n - 2;
  std::vector<double> sub(k), diag(k), sup(k);
  std::vector<Eigen::Vector2d> rhs(k);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = sp.s_[i] - sp.s_[i - 1];
    const double h1 = sp.s_[i + 1] - sp.s_[i];
    sub[i - 1] = h0;
    diag[i - 1] = 2.0 * (h0 + h1);
    sup[i - 1] = h1;
    rhs[i - 1] = 6.0 * ((points[i + 1] - points[i]) / h1 - (points[i] - points[i - 1]) / h0);
  }
  for (std::size_t i = 1; i < k; ++i) {
    const double f = sub[i] / diag[i - 1];
    diag[i] -= f * sup[i - 1];
    rhs[i] -= f * rhs[i - 1];
  }
  std::vector<Eigen::Vector2d> m(k);
  m[k - 1] = rhs[k - 1] / diag[k - 1];
  for (std::size_t i = k - 1; i-- > 0;) {
    m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
  }
  for (std::size_t i = 0; i < k; ++i) sp.m_[i + 1] = m[i];
  return sp;
}

std::size_t CubicSpline::locate(double & s, bool * clamped) const
{
  if (s_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "spline is empty");
  }
  bool out = false;
  if (!(s >= 0.0)) {
    s = 0.0;
    out = true;
  } else if (s > s_.back()) {
    s = s_.back();
    out = true;
  }
  if (clamped) *clamped = out;
  auto it = std::upper_bound(s_.begin(), s_.end(), s);
  std::size_t i = static_cast<std::size_t>(std::distance(s_.begin(), it));
  if (i == 0) i = 1;
  if (i >= s_.size()) i = s_.size() - 1;
  return i - 1;
}

Eigen::Vector2d CubicSpline::eval(double s, bool * clamped) const
{
  const std::size_t i = locate(s, clamped);
  const double h = s_[i + 1] - s_[i];
  const double a = (s_[i + 1] - s) / h;
  const double b = (s - s_[i]) / h;
  return a * p_[i] + b * p_[i + 1] +
         ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * (h * h / 6.0);
}

Eigen::Vector2d CubicSpline::eval_d(double s, bool * clamped) const
{
  const std::size_t i = locate(s, clamped);
  const double h = s_[i + 1] - s_[i];
  const double a = (s_[i + 1] - s) / h;
  const double b = (s - s_[i]) / h;
  return (p_[i + 1] - p_[i]) / h - (3.0 * a * a - 1.0) * h / 6.0 * m_[i] +
         (3.0 * b * b - 1.0) * h / 6.0 * m_[i + 1];
}

Eigen::Vector2d CubicSpline::eval_dd(double s, bool * clamped) const
{
  const std::size_t i = locate(s, clamped);
  const double h = s_[i + 1] - s_[i];
  const double a = (s_[i + 1] - s) / h;
  const double b = (s - s_[i]) / h;
  return a * m_[i] + b * m_[i + 1];
}

double CubicSpline::project(const Eigen::Vector2d & p, double hint, double window) const
{
  double lo = 0.0;
  double hi = length();
  if (hint >= 0.0 && window > 0.0) {
    lo = std::max(0.0, hint - window);
    hi = std::min(length(), hint + window);
  }
  const int samples = std::max(20, static_cast<int>((hi - lo) / 0.25));
  double best_s = lo;
  double best = INFINITY;
  for (int k = 0; k <= samples; ++k) {
    const double s = lo + (hi - lo) * k / samples;
    const double d = (eval(s) - p).squaredNorm();
    if (d < best) {
      best = d;
      best_s = s;
    }
  }
  // Newton refinement on the squared distance.
  double s = best_s;
  for (int it = 0; it < 20; ++it) {
    const Eigen::Vector2d r = eval(s) - p;
    const Eigen::Vector2d d1 = eval_d(s);
    const double g = r.dot(d1);
    const double hss = d1.squaredNorm() + r.dot(eval_dd(s));
    if (!(hss > 0.0)) break;
    const double next = std::clamp(s - g / hss, lo, hi);
    if (std::abs(next - s) < 1e-12) {
      s = next;
      break;
    }
    s = next;
  }
  return (eval(s) - p).squaredNorm() <= best ? s : best_s;
}

Waypoints read_waypoints_csv(const std::string & path)
{
  Waypoints pts;
  for (const auto & row : csv::read(path)) {
    if (row.size() != 2) {
      throw Error(ErrorCode::InvalidScenario, "waypoint rows need exactly two columns");
    }
    pts.emplace_back(row[0], row[1]);
  }
  return pts;
}

void write_waypoints_csv(const Waypoints & points, const std::string & path)
{
  std::vector<std::vector<double>> rows;
  for (const auto & p : points) rows.push_back({p.x(), p.y()});
  csv::write(path, {"x", "y"}, rows);
}

void write_spline_csv(const CubicSpline & spline, std::size_t count, const std::string & path)
{
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < count; ++k) {
    const double s = count > 1 ? spline.length() * static_cast<double>(k) / (count - 1) : 0.0;
    const Eigen::Vector2d p = spline.eval(s);
    const Eigen::Vector2d d = spline.eval_d(s);
    rows.push_back({s, p.x(), p.y(), d.x(), d.y()});
  }
  csv::write(path, {"s", "x", "y", "dx", "dy"}, rows);
}

}  // namespace roadplan
