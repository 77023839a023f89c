#ifndef EVAGG_ETA_HPP
#define EVAGG_ETA_HPP

#include <vector>

namespace evagg {

// The regret kernel eta(a) = max_{t >= 0} t * Phi(-t + a) and its maximizer.
// The maximum regret of a linear aggregation rule with maximum bias b and
// standard deviation s is s * eta(b / s).

struct EtaPoint {
  double value = 0.0;   // eta(a)
  double t_star = 0.0;  // argmax of t * Phi(-t + a)
};

// Requires a >= 0.
EtaPoint eta_point(double a);
double eta(double a);

// eta'(a) = Phi(-t*(a) + a).
double eta_slope(double a);

namespace detail {
// Same maximization without the sign restriction on a; used by the
// confidence-region branch values, which can be negative.
EtaPoint eta_point_unchecked(double a);
}  // namespace detail

// Piecewise-linear interpolant of eta on a uniform grid over [0, a_max],
// extrapolated linearly beyond a_max with slope eta'(a_max). Immutable.
class EtaTable {
 public:
  EtaTable(double a_max, double spacing, std::vector<double> values, double slope_tail);

  double operator()(double a) const;

  double a_max() const { return a_max_; }
  double spacing() const { return spacing_; }
  double slope_tail() const { return slope_tail_; }
  const std::vector<double>& values() const { return values_; }

 private:
  double a_max_;
  double spacing_;
  double slope_tail_;
  std::vector<double> values_;
};

EtaTable build_eta_table(double a_max = 10.0, double spacing = 0.01);

}  // namespace evagg

#endif  // EVAGG_ETA_HPP
