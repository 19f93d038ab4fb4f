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

#ifndef ROADPLAN__AUTODIFF_HPP_
#define ROADPLAN__AUTODIFF_HPP_

/**
 * @file
 * @brief Forward-mode dual numbers that nest cleanly.
 *
 * Dual<double, N> carries a value and N directional derivatives. Nesting
 * Dual<Dual<double, N>, N> yields exact second derivatives, which the
 * interior-point solver and the KKT sensitivity analysis need. Every
 * operator accepts plain double operands at any nesting depth, so model code
 * templated on the scalar type can freely mix in literal constants.
 */

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>

namespace roadplan::ad
{

template <class V, int N>
struct Dual
{
  V a{};
  std::array<V, N> d{};

  Dual() { d.fill(V(0.0)); }
  Dual(double value) : a(value) { d.fill(V(0.0)); }  // NOLINT: implicit by design of AD scalars
  template <class W = V, std::enable_if_t<!std::is_same_v<W, double>, int> = 0>
  explicit Dual(const V & value) : a(value)
  {
    d.fill(V(0.0));
  }

  Dual & operator+=(const Dual & o)
  {
    a += o.a;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual & operator-=(const Dual & o)
  {
    a -= o.a;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual & operator*=(const Dual & o) { return *this = *this * o; }
  Dual & operator/=(const Dual & o) { return *this = *this / o; }
  Dual & operator+=(double s)
  {
    a += s;
    return *this;
  }
  Dual & operator-=(double s)
  {
    a -= s;
    return *this;
  }
  Dual & operator*=(double s)
  {
    a *= s;
    for (int i = 0; i < N; ++i) d[i] *= s;
    return *this;
  }
};

template <class T>
struct is_dual : std::false_type
{
};
template <class V, int N>
struct is_dual<Dual<V, N>> : std::true_type
{
};

inline double real(double x) { return x; }
template <class V, int N>
double real(const Dual<V, N> & x)
{
  return real(x.a);
}

// Chain rule helper: result value f, first derivative df (of inner type V).
template <class V, int N>
Dual<V, N> chain(const Dual<V, N> & x, const V & f, const V & df)
{
  Dual<V, N> r;
  r.a = f;
  for (int i = 0; i < N; ++i) r.d[i] = df * x.d[i];
  return r;
}

template <class V, int N>
Dual<V, N> operator-(const Dual<V, N> & x)
{
  Dual<V, N> r;
  r.a = -x.a;
  for (int i = 0; i < N; ++i) r.d[i] = -x.d[i];
  return r;
}
template <class V, int N>
Dual<V, N> operator+(const Dual<V, N> & x)
{
  return x;
}

template <class V, int N>
Dual<V, N> operator+(Dual<V, N> x, const Dual<V, N> & y)
{
  return x += y;
}
template <class V, int N>
Dual<V, N> operator-(Dual<V, N> x, const Dual<V, N> & y)
{
  return x -= y;
}
template <class V, int N>
Dual<V, N> operator+(Dual<V, N> x, double s)
{
  return x += s;
}
template <class V, int N>
Dual<V, N> operator+(double s, Dual<V, N> x)
{
  return x += s;
}
template <class V, int N>
Dual<V, N> operator-(Dual<V, N> x, double s)
{
  return x -= s;
}
template <class V, int N>
Dual<V, N> operator-(double s, const Dual<V, N> & x)
{
  Dual<V, N> r = -x;
  r.a += s;
  return r;
}

template <class V, int N>
Dual<V, N> operator*(const Dual<V, N> & x, const Dual<V, N> & y)
{
  Dual<V, N> r;
  r.a = x.a * y.a;
  for (int i = 0; i < N; ++i) r.d[i] = x.a * y.d[i] + x.d[i] * y.a;
  return r;
}
template <class V, int N>
Dual<V, N> operator*(Dual<V, N> x, double s)
{
  return x *= s;
}
template <class V, int N>
Dual<V, N> operator*(double s, Dual<V, N> x)
{
  return x *= s;
}

template <class V, int N>
Dual<V, N> reciprocal(const Dual<V, N> & x)
{
  const V inv = 1.0 / x.a;
  return chain(x, inv, -(inv * inv));
}
template <class V, int N>
Dual<V, N> operator/(const Dual<V, N> & x, const Dual<V, N> & y)
{
  return x * reciprocal(y);
}
template <class V, int N>
Dual<V, N> operator/(Dual<V, N> x, double s)
{
  return x *= (1.0 / s);
}
template <class V, int N>
Dual<V, N> operator/(double s, const Dual<V, N> & y)
{
  return s * reciprocal(y);
}

// Comparisons look at the value only; branches in model code use them.
template <class V, int N>
bool operator<(const Dual<V, N> & x, double s)
{
  return real(x) < s;
}
template <class V, int N>
bool operator>(const Dual<V, N> & x, double s)
{
  return real(x) > s;
}
template <class V, int N>
bool operator<=(const Dual<V, N> & x, double s)
{
  return real(x) <= s;
}
template <class V, int N>
bool operator>=(const Dual<V, N> & x, double s)
{
  return real(x) >= s;
}
template <class V, int N>
bool operator<(const Dual<V, N> & x, const Dual<V, N> & y)
{
  return real(x) < real(y);
}
template <class V, int N>
bool operator>(const Dual<V, N> & x, const Dual<V, N> & y)
{
  return real(x) > real(y);
}

template <class V, int N>
Dual<V, N> sin(const Dual<V, N> & x)
{
  using std::cos;
  using std::sin;
  return chain(x, V(sin(x.a)), V(cos(x.a)));
}
template <class V, int N>
Dual<V, N> cos(const Dual<V, N> & x)
{
  using std::cos;
  using std::sin;
  return chain(x, V(cos(x.a)), V(-sin(x.a)));
}
template <class V, int N>
Dual<V, N> tan(const Dual<V, N> & x)
{
  using std::tan;
  const V t = tan(x.a);
  return chain(x, t, V(1.0 + t * t));
}
template <class V, int N>
Dual<V, N> atan(const Dual<V, N> & x)
{
  using std::atan;
  return chain(x, V(atan(x.a)), V(1.0 / (1.0 + x.a * x.a)));
}
template <class V, int N>
Dual<V, N> atan2(const Dual<V, N> & y, const Dual<V, N> & x)
{
  using std::atan2;
  const V r2 = x.a * x.a + y.a * y.a;
  Dual<V, N> r;
  r.a = atan2(y.a, x.a);
  const V cx = -y.a / r2;
  const V cy = x.a / r2;
  for (int i = 0; i < N; ++i) r.d[i] = cx * x.d[i] + cy * y.d[i];
  return r;
}
template <class V, int N>
Dual<V, N> sqrt(const Dual<V, N> & x)
{
  using std::sqrt;
  const V s = sqrt(x.a);
  return chain(x, s, V(0.5 / s));
}
template <class V, int N>
Dual<V, N> exp(const Dual<V, N> & x)
{
  using std::exp;
  const V e = exp(x.a);
  return chain(x, e, e);
}
template <class V, int N>
Dual<V, N> log(const Dual<V, N> & x)
{
  using std::log;
  return chain(x, V(log(x.a)), V(1.0 / x.a));
}
template <class V, int N>
Dual<V, N> abs(const Dual<V, N> & x)
{
  return real(x) < 0.0 ? -x : x;
}
template <class V, int N>
Dual<V, N> pow(const Dual<V, N> & x, double e)
{
  using std::pow;
  return chain(x, V(pow(x.a, e)), V(e * pow(x.a, e - 1.0)));
}

template <class S>
S square(const S & x)
{
  return x * x;
}

}  // namespace roadplan::ad

#endif  // ROADPLAN__AUTODIFF_HPP_
