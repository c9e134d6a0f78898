#pragma once

#include <utility>
#include <vector>

#include "opdyn/measure.hpp"

namespace opdyn {

// Self-consistent stationary opinion profile in unit-sigma variables.
// g solves alpha + (theta - 1) g - g^(p+1) = 0 on the grid, with
// alpha = integral of g against the conviction marginal.
struct SteadyProfile {
    explicit SteadyProfile(ConvictionMarginal marginal) : pi(std::move(marginal)) {}

    ConvictionMarginal pi;
    double p = 1.0;
    double alpha = 0.0;

    std::vector<double> thetas;    // increasing grid spanning the support
    std::vector<double> g;
    std::vector<double> g_prime;
    std::vector<double> g_second;
    std::vector<double> g_at_pi;   // separate inner solves at the marginal atoms

    double residual = 0.0;         // worst steady-equation residual seen
    bool unique_condition = false; // sufficient condition for a unique alpha
    std::vector<double> alpha_candidates;  // every root located by the scan
};

// Positive root of alpha + (theta - 1) g - g^(p+1) = 0.  Bracket expansion
// from g = 1, bisection, then Newton polish to machine precision.
double solve_g_given_alpha(double theta, double alpha, double p);

// Outer fixed point on alpha, then the profile on a uniform conviction grid.
// A 256-point scan of the bracket records every sign change of the fixed-point
// residual as an alpha candidate; more than one flags non-uniqueness.
SteadyProfile solve_profile(const ConvictionMarginal& pi, double p, int grid_n = 1001);

// Worst violation of g(theta)^p >= theta + pi([theta, inf)) - 1 over the grid
// (negative values mean the bound holds with margin).
double refined_lower_bound_check(const SteadyProfile& profile);

// Violations of theta_min <= g_min^p and g_max^p <= theta_max at the grid
// endpoints, returned as (lower, upper); nonpositive = satisfied.
std::pair<double, double> extreme_value_check(const SteadyProfile& profile);

// dg/dtheta = g / (1 - theta + (p+1) g^p); the denominator is positive along
// admissible profiles and a nonpositive value is rejected.
double g_prime(double theta, double g, double p);

// d2g/dtheta2 = (2(1-theta) g + (2+p-p^2) g^(p+1)) / (1 - theta + (p+1) g^p)^3.
double g_second(double theta, double g, double p);

// Convexity switches of the profile: empty for p <= 1, at most one for p > 2.
std::vector<double> inflection_points(const SteadyProfile& profile);

// Sufficient condition for a unique self-consistent alpha (unit sigma):
// theta_min > (p+1)/p or theta_max/theta_min < p+1.
bool uniqueness_condition(const ConvictionMarginal& pi, double p);

// Family of passive profiles g(theta; alpha) with alpha swept externally.
struct FigureRow {
    double alpha;
    double theta;
    double g;
};
std::vector<FigureRow> figure_curves(double p, const std::vector<double>& alphas,
                                     const std::vector<double>& theta_grid);

}  // namespace opdyn
