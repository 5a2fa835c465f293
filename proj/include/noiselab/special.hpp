#pragma once

namespace noiselab {

double normal_cdf(double x);        // Phi
double normal_upper(double x);      // 1 - Phi, accurate in the upper tail
double normal_quantile(double p);
double log_normal_cdf(double x);

namespace testing {
// Fault injection for the acceptance negative control: adds `shift` to every Phi evaluation.
void set_cdf_fault(double shift);
double cdf_fault();
}

} // namespace noiselab
