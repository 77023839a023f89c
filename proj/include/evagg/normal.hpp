#ifndef EVAGG_NORMAL_HPP
#define EVAGG_NORMAL_HPP

namespace evagg {

// Standard normal CDF, absolute error below 1e-14.
double normal_cdf(double x);

// Standard normal density.
double normal_pdf(double x);

// Inverse of normal_cdf on (0, 1).
double normal_quantile(double p);

// CDF of the chi-square distribution with dof degrees of freedom.
double chi_square_cdf(double x, int dof);

// p-th quantile of the chi-square distribution with dof degrees of freedom.
double chi_square_quantile(double p, int dof);

}  // namespace evagg

#endif  // EVAGG_NORMAL_HPP
