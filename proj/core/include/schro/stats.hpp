#pragma once

#include <functional>
#include <vector>

namespace schro {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;   // unbiased
  double std_error = 0.0;  // sqrt(variance / n)
};

Moments moments(const std::vector<double>& x);

double normal_cdf(double x, double mean = 0.0, double sd = 1.0);

/// sup_x |F_n(x) - F(x)| for a continuous reference F. Throws EmptySample.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

/// sup_x |F_a(x) - F_b(x)|; ties are handled by stepping past equal values
/// in both samples together. Throws EmptySample.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Least-squares slope of y on x. NaN when x has no spread or a value is
/// not finite.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace schro
