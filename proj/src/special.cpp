#include "noiselab/special.hpp"

#include <atomic>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace noiselab {

namespace {
std::atomic<double> g_fault{0.0};
}

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2) + g_fault.load(std::memory_order_relaxed);
}

double normal_upper(double x)
{
    return 0.5 * std::erfc(x / std::numbers::sqrt2) - g_fault.load(std::memory_order_relaxed);
}

double normal_quantile(double p)
{
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double log_normal_cdf(double x)
{
    if (x > -30.0)
        return std::log(normal_cdf(x));
    // asymptotic expansion of the lower tail
    double x2 = x * x;
    return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) +
           std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

namespace testing {
void set_cdf_fault(double shift) { g_fault.store(shift); }
double cdf_fault() { return g_fault.load(); }
}

} // namespace noiselab
