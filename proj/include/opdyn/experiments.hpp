#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opdyn/dynamics.hpp"
#include "opdyn/measure.hpp"
#include "opdyn/steady.hpp"

namespace opdyn {

// Least-squares exponential rate over the trailing window of a series.
struct RateFit {
    double window_start = 0.0;
    double slope = 0.0;      // per unit time, negative means decay
    double intercept = 0.0;  // fitted log value extrapolated to t = 0
    double r_squared = 0.0;
    int n_points = 0;
};

// Outcome of one numerical study.  series is (time-or-size, value); an
// advisory report documents a run outside the guaranteed parameter region
// and is ignored by the verify gate.
struct StudyReport {
    std::string name;
    std::string inputs;
    std::vector<std::pair<double, double>> series;
    std::optional<RateFit> fit;
    bool pass = false;
    bool advisory = false;
    std::string notes;
};

// Fits log(value) against t over the trailing tail_fraction of the points
// (at least three).  Window values must be strictly positive; a constant
// window reports slope 0 with r_squared 1 by convention.
RateFit fit_exponential_rate(const std::vector<std::pair<double, double>>& series,
                             double tail_fraction);

// Deterministic n-atom equal-weight coarsening: atoms are allocated to the
// conviction groups by largest remainder (at least one each) and placed at
// mid-level quantiles of each group's opinion distribution.
EmpiricalMeasure quantile_subsample(const EmpiricalMeasure& mu, int n);

// Distance from every conviction slice to its predicted point limit, over
// time.  Passes when the decay is cleanly exponential and the final sup
// distance is below 1e-6.
StudyReport mono_opinion_study(const EmpiricalMeasure& mu0, const ModelParams& prm,
                               const SimConfig& cfg);

// Propagation of coarsening error: for each subsample size the distance to
// the reference run at t_final must stay proportional to the distance at
// t = 0, with the proportionality stable across sizes.
StudyReport mean_field_study(const EmpiricalMeasure& mu_limit, const std::vector<int>& sizes,
                             const ModelParams& prm, const SimConfig& cfg);

// Contraction between two runs sharing a conviction marginal exactly.
StudyReport uniqueness_study(const EmpiricalMeasure& mu0_a, const EmpiricalMeasure& mu0_b,
                             const ModelParams& prm, const SimConfig& cfg);

// Response of the stationary profile to a uniform conviction shift, measured
// across a halving ladder of perturbation sizes; the ratio of profile change
// to marginal displacement must stay within a factor of two along the ladder.
StudyReport marginal_stability_study(const ConvictionMarginal& pi, double perturbation_eps,
                                     double p);

// Energy descent along a run, plus first-order consistency of the discrete
// energy balance against the dissipation under step halving.
StudyReport energy_descent_study(const EmpiricalMeasure& mu0, const ModelParams& prm,
                                 const SimConfig& cfg);

}  // namespace opdyn
