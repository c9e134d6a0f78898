#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "opdyn/measure.hpp"

namespace opdyn {

// sigma: conviction coupling strength, p: friction exponent.  Simulation and
// rescaling require both positive; velocity tolerates sigma = 0 so the pure
// alignment field can be probed in tests.
struct ModelParams {
    double sigma = 1.0;
    double p = 1.0;
};

enum class Integrator { rk4, euler };

struct SimConfig {
    double t_final = 1.0;
    double dt = 1e-3;
    int snapshot_stride = 100;
    Integrator integrator = Integrator::rk4;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<EmpiricalMeasure> states;       // one per snapshot
    std::vector<double> energies;               // aligned with times
    std::vector<double> dissipations;           // aligned with times
};

// Transport field at (y, theta): (mean of mu) - y + sigma (theta - y^p) y.
double velocity(const EmpiricalMeasure& mu, double y, double theta, const ModelParams& prm);

// Fixed-step integration of the coupled atom system.  Convictions and weights
// are never written; opinions must stay positive and finite or an
// IntegrationError is raised with the step time and atom index.
Trajectory simulate(const EmpiricalMeasure& mu0, const ModelParams& prm, const SimConfig& cfg);

// Interaction energy plus conviction potential; decreases along solutions.
double energy(const EmpiricalMeasure& mu, const ModelParams& prm);

// sum_i w_i u(y_i, theta_i)^2 = -dE/dt along exact solutions.
double dissipation(const EmpiricalMeasure& mu, const ModelParams& prm);

// Game-theoretic payoff of agent i in the equal-weight N-agent system.
double payoff(std::size_t i, const std::vector<double>& ys, const std::vector<double>& thetas,
              const ModelParams& prm);

// max_i |dy_i/dt|: zero exactly at Nash equilibria of the payoff system.
double nash_residual(const std::vector<double>& ys, const std::vector<double>& thetas,
                     const ModelParams& prm);

struct Envelope {
    double lower;
    double upper;
};

// Closed-form logistic comparison bounds enclosing every opinion at time t,
// reported in the caller's original variables.
Envelope bound_y_envelope(double t, const EmpiricalMeasure& mu0, const ModelParams& prm);

// Lower comparison bound for the slice at conviction theta > 1 in unit-sigma
// variables, ignoring the nonnegative coupling term.
double bound_slice_lower(double t, double theta, double y0, double p);

// Change of variables (y, theta) -> (sigma^(1/p) y, sigma theta) taking the
// system to sigma = 1 without touching the time variable.
std::pair<EmpiricalMeasure, ModelParams> rescale_to_unit_sigma(const EmpiricalMeasure& mu,
                                                               const ModelParams& prm);

// Inverse of rescale_to_unit_sigma for mapping unit-sigma states back.
EmpiricalMeasure rescale_from_unit_sigma(const EmpiricalMeasure& hat_mu,
                                         const ModelParams& original);

}  // namespace opdyn
