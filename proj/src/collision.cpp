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


#include "roadplan/collision.hpp"

#include "roadplan/error.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace roadplan
{
namespace
{
constexpr double kBox = 1e6;

Eigen::Matrix<double, 4, 2> sign_matrix()
{
  Eigen::Matrix<double, 4, 2> a;
  a << 1, 0, -1, 0, 0, 1, 0, -1;
  return a;
}

double cross(const Eigen::Vector2d & o, const Eigen::Vector2d & a, const Eigen::Vector2d & b)
{
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

}  // namespace

ConvexPolyhedron ConvexPolyhedron::make(
  const Eigen::Matrix<double, Eigen::Dynamic, 2> & C, const Eigen::VectorXd & d)
{
  if (C.rows() != d.size() || C.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "polyhedron needs one offset per row");
  }
  if (!C.allFinite() || !d.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "polyhedron data must be finite");
  }
  // Feasibility of C y + s = d with y boxed and s >= 0.
  const auto q = C.rows();
  BoxedLp lp;
  lp.c = Eigen::VectorXd::Zero(2 + q);
  lp.E.resize(q, 2 + q);
  lp.E.leftCols(2) = C;
  lp.E.rightCols(q).setIdentity();
  lp.rhs = d;
  lp.lower.resize(2 + q);
  lp.upper.resize(2 + q);
  lp.lower.head(2).setConstant(-kBox);
  lp.upper.head(2).setConstant(kBox);
  for (Eigen::Index i = 0; i < q; ++i) {
    lp.lower[2 + i] = 0.0;
    lp.upper[2 + i] = std::abs(d[i]) + 2.0 * kBox * C.row(i).cwiseAbs().sum() + 1.0;
  }
  LpSolver solver;
  if (solver.solve(lp).status != LpStatus::Optimal) {
    throw Error(ErrorCode::InvalidArgument, "polyhedron is empty");
  }
  return ConvexPolyhedron{C, d};
}

ConvexPolyhedron ConvexPolyhedron::from_vertices(const Waypoints & vertices)
{
  Waypoints pts = vertices;
  std::sort(pts.begin(), pts.end(), [](const auto & a, const auto & b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) {
    throw Error(ErrorCode::InvalidArgument, "a polygon needs at least three distinct vertices");
  }
  Waypoints hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto & p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) {
    throw Error(ErrorCode::InvalidArgument, "polygon vertices are collinear");
  }
  Eigen::Matrix<double, Eigen::Dynamic, 2> C(hull.size(), 2);
  Eigen::VectorXd d(hull.size());
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Eigen::Vector2d e = hull[(i + 1) % hull.size()] - hull[i];
    const Eigen::Vector2d n = Eigen::Vector2d(e.y(), -e.x()).normalized();
    C.row(static_cast<Eigen::Index>(i)) = n.transpose();
    d[static_cast<Eigen::Index>(i)] = n.dot(hull[i]);
  }
  return ConvexPolyhedron{C, d};
}

bool ConvexPolyhedron::contains(const Eigen::Vector2d & p, double tol) const
{
  return ((C * p - d).array() <= tol).all();
}

Waypoints ConvexPolyhedron::vertices() const
{
  Waypoints out;
  const auto q = C.rows();
  for (Eigen::Index i = 0; i < q; ++i) {
    for (Eigen::Index j = i + 1; j < q; ++j) {
      Eigen::Matrix2d M;
      M << C.row(i), C.row(j);
      const double det = M.determinant();
      if (std::abs(det) < 1e-12) continue;
      const Eigen::Vector2d p = M.inverse() * Eigen::Vector2d(d[i], d[j]);
      if (!contains(p, 1e-9)) continue;
      bool dup = false;
      for (const auto & o : out) dup = dup || (o - p).norm() < 1e-9;
      if (!dup) out.push_back(p);
    }
  }
  if (out.empty()) return out;
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto & p : out) c += p;
  c /= static_cast<double>(out.size());
  std::sort(out.begin(), out.end(), [&](const auto & a, const auto & b) {
    return std::atan2(a.y() - c.y(), a.x() - c.x()) < std::atan2(b.y() - c.y(), b.x() - c.x());
  });
  return out;
}

ConvexPolyhedron transform(const ConvexPolyhedron & part, const RigidTransform & tf)
{
  const Eigen::Matrix2d Rt = rotation(tf.angle).transpose();
  ConvexPolyhedron out;
  out.C = part.C * Rt;
  out.d = part.d + out.C * tf.offset;
  return out;
}

std::vector<ConvexPolyhedron> Obstacle::at(double t) const
{
  if (!motion) return parts;
  const RigidTransform tf = motion(t);
  std::vector<ConvexPolyhedron> out;
  out.reserve(parts.size());
  for (const auto & p : parts) out.push_back(transform(p, tf));
  return out;
}

Waypoints VehicleRect::corners() const
{
  const Eigen::Matrix2d R = rotation(psi);
  Waypoints out;
  for (const auto & c : {Eigen::Vector2d(1, 1), Eigen::Vector2d(-1, 1), Eigen::Vector2d(-1, -1),
                         Eigen::Vector2d(1, -1)}) {
    out.push_back(center + R * Eigen::Vector2d(0.5 * length * c.x(), 0.5 * width * c.y()));
  }
  return out;
}

double point_polyhedron_distance(const Eigen::Vector2d & p, const ConvexPolyhedron & part)
{
  if (part.contains(p)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const auto q = part.C.rows();
  for (Eigen::Index i = 0; i < q; ++i) {
    const Eigen::Vector2d n = part.C.row(i).transpose();
    const double nn = n.squaredNorm();
    if (nn == 0.0) continue;
    // Facet i is the part of the line n'y = d_i admitted by the other rows.
    const Eigen::Vector2d base = p - (n.dot(p) - part.d[i]) / nn * n;
    const Eigen::Vector2d dir(-n.y(), n.x());
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool empty = false;
    for (Eigen::Index j = 0; j < q && !empty; ++j) {
      if (j == i) continue;
      const double a = part.C.row(j).dot(dir);
      const double r = part.d[j] - part.C.row(j).dot(base);
      if (std::abs(a) < 1e-14) {
        empty = r < -1e-12;
      } else if (a > 0.0) {
        hi = std::min(hi, r / a);
      } else {
        lo = std::max(lo, r / a);
      }
    }
    if (empty || lo > hi + 1e-12) continue;
    const double t = std::clamp(0.0, lo, std::max(lo, hi));
    best = std::min(best, (base + t * dir - p).norm());
  }
  return best;
}

double circle_clear(const Eigen::Vector2d & ca, double ra, const Eigen::Vector2d & cb, double rb)
{
  return (ca - cb).squaredNorm() - (ra + rb) * (ra + rb);
}

double ellipse_constraint(const Eigen::Vector2d & p, const Ellipse & e)
{
  return ellipse_value(p.x(), p.y(), e.center.x(), e.center.y(), e.psi, e.rx, e.ry);
}

VehicleRect vehicle_halfspaces(
  const Eigen::Vector2d & center, double psi, double length, double width)
{
  VehicleRect r;
  r.A = sign_matrix() * rotation(psi).transpose();
  r.b = Eigen::Vector4d(0.5 * length, 0.5 * length, 0.5 * width, 0.5 * width) + r.A * center;
  r.center = center;
  r.psi = psi;
  r.length = length;
  r.width = width;
  return r;
}

VehicleRect vehicle_halfspaces(const VehicleState & state, const VehicleParams & params)
{
  return vehicle_halfspaces(roadplan::center(state, params), state.psi, params.wheelbase, params.width);
}

Separation separation_value(const VehicleRect & rect, const ConvexPolyhedron & part, LpSolver & lp)
{
  const auto q = part.C.rows();
  BoxedLp prob;
  prob.c.resize(4 + q);
  prob.c << rect.b, part.d;
  prob.E.resize(2, 4 + q);
  prob.E.leftCols(4) = rect.A.transpose();
  prob.E.rightCols(q) = part.C.transpose();
  prob.rhs = Eigen::Vector2d::Zero();
  prob.lower = Eigen::VectorXd::Zero(4 + q);
  prob.upper = Eigen::VectorXd::Ones(4 + q);
  const LpResult res = lp.solve(prob);
  if (res.status != LpStatus::Optimal) {
    throw Error(ErrorCode::SolverFailure, "separation LP did not reach optimality");
  }
  return Separation{res.value, res.w};
}

ClearanceReport trajectory_clear(
  const std::vector<TimedState> & trajectory, const VehicleParams & params,
  const std::vector<Obstacle> & obstacles, double eps, int refine)
{
  if (!(eps > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "clearance margin must be positive");
  }
  ClearanceReport report;
  if (obstacles.empty() || trajectory.empty()) return report;
  LpSolver lp;
  auto check = [&](double t, const VehicleState & s) {
    const VehicleRect rect = vehicle_halfspaces(s, params);
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
      const auto parts = obstacles[i].at(t);
      for (std::size_t j = 0; j < parts.size(); ++j) {
        const double z = separation_value(rect, parts[j], lp).zeta;
        if (z > report.worst_zeta) {
          report.worst_zeta = z;
          report.worst_t = t;
          report.worst_obstacle = static_cast<int>(i);
          report.worst_part = static_cast<int>(j);
        }
      }
    }
  };
  for (std::size_t k = 0; k + 1 < trajectory.size(); ++k) {
    const auto & a = trajectory[k];
    const auto & b = trajectory[k + 1];
    for (int j = 0; j <= refine; ++j) {
      const double f = static_cast<double>(j) / (refine + 1);
      VehicleState s;
      s.x = a.state.x + f * (b.state.x - a.state.x);
      s.y = a.state.y + f * (b.state.y - a.state.y);
      s.psi = a.state.psi + f * (b.state.psi - a.state.psi);
      s.v = a.state.v + f * (b.state.v - a.state.v);
      s.delta = a.state.delta + f * (b.state.delta - a.state.delta);
      check(a.t + f * (b.t - a.t), s);
    }
  }
  check(trajectory.back().t, trajectory.back().state);
  report.clear = report.worst_zeta <= -eps;
  return report;
}

}  // namespace roadplan
