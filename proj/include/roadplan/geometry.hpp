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


#ifndef ROADPLAN__GEOMETRY_HPP_
#define ROADPLAN__GEOMETRY_HPP_

#include <Eigen/Core>

#include <string>
#include <vector>

namespace roadplan
{

using Waypoints = std::vector<Eigen::Vector2d>;

/// Cumulative chord lengths, starting at zero. Throws DuplicatePoint on repeated points.
std::vector<double> chord_lengths(const Waypoints & points);

/// Douglas-Peucker thinning with perpendicular distance tolerance. Zero tolerance is a no-op.
Waypoints thin(const Waypoints & points, double tolerance);

/// Planar natural cubic spline parametrized by chord length.
class CubicSpline
{
public:
  CubicSpline() = default;

  static CubicSpline interpolate(const Waypoints & points);

  double length() const { return s_.empty() ? 0.0 : s_.back(); }
  const std::vector<double> & breakpoints() const { return s_; }
  const Waypoints & points() const { return p_; }
  /// Second derivatives at the breakpoints, one column per coordinate.
  const std::vector<Eigen::Vector2d> & moments() const { return m_; }

  /// Out-of-range parameters clamp to [0, L]; clamped is set when that happens.
  Eigen::Vector2d eval(double s, bool * clamped = nullptr) const;
  Eigen::Vector2d eval_d(double s, bool * clamped = nullptr) const;
  Eigen::Vector2d eval_dd(double s, bool * clamped = nullptr) const;

  /// Parameter of the point on the curve closest to p, searched near hint when given.
  double project(const Eigen::Vector2d & p, double hint = -1.0, double window = -1.0) const;

private:
  std::size_t locate(double & s, bool * clamped) const;

  std::vector<double> s_;
  Waypoints p_;
  std::vector<Eigen::Vector2d> m_;
};

/// Reads two columns x,y; a non-numeric first line is treated as header.
Waypoints read_waypoints_csv(const std::string & path);
void write_waypoints_csv(const Waypoints & points, const std::string & path);
/// Samples the spline at count equidistant parameters as s,x,y,dx,dy.
void write_spline_csv(const CubicSpline & spline, std::size_t count, const std::string & path);

double polyline_length(const Waypoints & points);
double point_segment_distance(
  const Eigen::Vector2d & p, const Eigen::Vector2d & a, const Eigen::Vector2d & b);
double point_polyline_distance(const Eigen::Vector2d & p, const Waypoints & polyline);

}  // namespace roadplan

#endif  // ROADPLAN__GEOMETRY_HPP_
