#include "evagg/eta.hpp"

#include <cmath>
#include <stdexcept>

#include "evagg/normal.hpp"

namespace evagg {

namespace {

// Golden-section search for the unimodal map t -> t * Phi(-t + a) on
// [0, max(a, 0) + 10]; the maximizer always lies in this bracket.
EtaPoint maximize_eta_objective(double a) {
  const double golden = 0.61803398874989484820;
  double lo = 0.0;
  double hi = (a > 0.0 ? a : 0.0) + 10.0;
  auto f = [a](double t) { return t * normal_cdf(-t + a); };
  double c = hi - golden * (hi - lo);
  double d = lo + golden * (hi - lo);
  double fc = f(c), fd = f(d);
  while (hi - lo > 1e-12) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - golden * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + golden * (hi - lo);
      fd = f(d);
    }
  }
  const double t = 0.5 * (lo + hi);
  return EtaPoint{f(t), t};
}

}  // namespace

namespace detail {

EtaPoint eta_point_unchecked(double a) {
  if (!std::isfinite(a)) throw std::domain_error("eta: argument must be finite");
  return maximize_eta_objective(a);
}

}  // namespace detail

EtaPoint eta_point(double a) {
  if (!(a >= 0.0)) throw std::domain_error("eta: argument must be >= 0");
  return detail::eta_point_unchecked(a);
}

double eta(double a) {
  return eta_point(a).value;
}

double eta_slope(double a) {
  const EtaPoint p = eta_point(a);
  return normal_cdf(-p.t_star + a);
}

EtaTable::EtaTable(double a_max, double spacing, std::vector<double> values, double slope_tail)
    : a_max_(a_max), spacing_(spacing), slope_tail_(slope_tail), values_(std::move(values)) {
  if (!(a_max_ > 0.0) || !(spacing_ > 0.0))
    throw std::domain_error("eta table: a_max and spacing must be positive");
  if (values_.size() < 2) throw std::domain_error("eta table: needs at least two nodes");
  if (!(slope_tail_ > 0.0 && slope_tail_ <= 1.0))
    throw std::domain_error("eta table: tail slope must lie in (0, 1]");
  for (std::size_t i = 1; i < values_.size(); ++i)
    if (!(values_[i] > values_[i - 1]))
      throw std::domain_error("eta table: values must be strictly increasing");
  for (std::size_t i = 1; i + 1 < values_.size(); ++i)
    if (values_[i + 1] - 2.0 * values_[i] + values_[i - 1] < -1e-12)
      throw std::domain_error("eta table: interpolant must be convex");
}

double EtaTable::operator()(double a) const {
  if (!(a >= 0.0)) throw std::domain_error("eta table: argument must be >= 0");
  if (a >= a_max_) return values_.back() + slope_tail_ * (a - a_max_);
  const double pos = a / spacing_;
  std::size_t i = static_cast<std::size_t>(pos);
  if (i + 1 >= values_.size()) i = values_.size() - 2;
  const double frac = pos - static_cast<double>(i);
  return values_[i] + frac * (values_[i + 1] - values_[i]);
}

EtaTable build_eta_table(double a_max, double spacing) {
  if (!(a_max > 0.0) || !(spacing > 0.0))
    throw std::domain_error("eta table: a_max and spacing must be positive");
  const int n = static_cast<int>(std::lround(a_max / spacing));
  std::vector<double> values(n + 1);
  for (int i = 0; i <= n; ++i) values[i] = eta(std::min(i * spacing, a_max));
  return EtaTable(a_max, spacing, std::move(values), eta_slope(a_max));
}

}  // namespace evagg
