#include "opdyn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "opdyn/util.hpp"

namespace opdyn {

namespace {

void check_params(const ModelParams& prm) {
    if (!(prm.sigma > 0.0) || !std::isfinite(prm.sigma))
        throw std::invalid_argument("params: sigma must be positive");
    if (!(prm.p > 0.0) || !std::isfinite(prm.p))
        throw std::invalid_argument("params: p must be positive");
}

void check_config(const SimConfig& cfg) {
    if (!(cfg.dt > 0.0) || !(cfg.t_final > cfg.dt))
        throw std::invalid_argument("sim config: need 0 < dt < t_final");
    if (cfg.snapshot_stride < 1)
        throw std::invalid_argument("sim config: snapshot_stride must be >= 1");
}

// Stable form of the logistic orbit of z' = p z (c - z) through z0 at t = 0.
// Written with exp(-pct) so large horizons saturate instead of overflowing.
double logistic_power(double z0, double c, double p, double t) {
    const double decay = std::exp(-p * c * t);
    return c * z0 / (z0 + (c - z0) * decay);
}

double weighted_mean(const std::vector<double>& ys, const std::vector<double>& ws) {
    return util::pairwise_sum_f(0, ys.size(), [&](std::size_t i) { return ws[i] * ys[i]; });
}

}  // namespace

double velocity(const EmpiricalMeasure& mu, double y, double theta, const ModelParams& prm) {
    return mu.mean_y() - y + prm.sigma * (theta - std::pow(y, prm.p)) * y;
}

Trajectory simulate(const EmpiricalMeasure& mu0, const ModelParams& prm, const SimConfig& cfg) {
    check_params(prm);
    check_config(cfg);

    const std::size_t n = mu0.size();
    std::vector<double> ys(n), thetas(n), ws(n);
    for (std::size_t i = 0; i < n; ++i) {
        ys[i] = mu0.atoms()[i].y;
        thetas[i] = mu0.atoms()[i].theta;
        ws[i] = mu0.atoms()[i].weight;
    }

    // The coupling mean is computed once per stage and shared by all atoms.
    auto deriv = [&](const std::vector<double>& y, std::vector<double>& dy) {
        const double mean = weighted_mean(y, ws);
        for (std::size_t i = 0; i < n; ++i)
            dy[i] = mean - y[i] + prm.sigma * (thetas[i] - std::pow(y[i], prm.p)) * y[i];
    };

    std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n);

    Trajectory traj;
    auto record = [&](double t) {
        std::vector<Atom> atoms(n);
        for (std::size_t i = 0; i < n; ++i) atoms[i] = {ys[i], thetas[i], ws[i]};
        EmpiricalMeasure state(std::move(atoms));
        traj.times.push_back(t);
        traj.energies.push_back(energy(state, prm));
        traj.dissipations.push_back(dissipation(state, prm));
        traj.states.push_back(std::move(state));
    };
    record(0.0);

    const long n_steps = static_cast<long>(std::ceil(cfg.t_final / cfg.dt - 1e-9));
    for (long k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        const double t_next = (k + 1 == n_steps) ? cfg.t_final : static_cast<double>(k + 1) * cfg.dt;
        const double h = t_next - t;

        deriv(ys, k1);
        if (cfg.integrator == Integrator::rk4) {
            for (std::size_t i = 0; i < n; ++i) stage[i] = ys[i] + 0.5 * h * k1[i];
            deriv(stage, k2);
            for (std::size_t i = 0; i < n; ++i) stage[i] = ys[i] + 0.5 * h * k2[i];
            deriv(stage, k3);
            for (std::size_t i = 0; i < n; ++i) stage[i] = ys[i] + h * k3[i];
            deriv(stage, k4);
            for (std::size_t i = 0; i < n; ++i)
                ys[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        } else {
            for (std::size_t i = 0; i < n; ++i) ys[i] += h * k1[i];
        }

        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(ys[i]) || ys[i] <= 0.0)
                throw IntegrationError(t_next, i,
                                       "simulate: atom " + std::to_string(i) +
                                           " left the positive quadrant at t = " +
                                           util::format_double(t_next));
        }
        if ((k + 1) % cfg.snapshot_stride == 0 || k + 1 == n_steps) record(t_next);
    }
    return traj;
}

double energy(const EmpiricalMeasure& mu, const ModelParams& prm) {
    const auto& atoms = mu.atoms();
    const std::size_t n = atoms.size();
    double interaction = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double d = atoms[i].y - atoms[j].y;
            interaction += atoms[i].weight * atoms[j].weight * d * d;
        }
    const double potential = util::pairwise_sum_f(0, n, [&](std::size_t i) {
        const double y = atoms[i].y;
        return atoms[i].weight *
               (0.5 * atoms[i].theta * y * y - std::pow(y, prm.p + 2.0) / (prm.p + 2.0));
    });
    return 0.25 * interaction - prm.sigma * potential;
}

double dissipation(const EmpiricalMeasure& mu, const ModelParams& prm) {
    const double mean = mu.mean_y();
    return util::pairwise_sum_f(0, mu.size(), [&](std::size_t i) {
        const Atom& a = mu.atoms()[i];
        const double u = mean - a.y + prm.sigma * (a.theta - std::pow(a.y, prm.p)) * a.y;
        return a.weight * u * u;
    });
}

double payoff(std::size_t i, const std::vector<double>& ys, const std::vector<double>& thetas,
              const ModelParams& prm) {
    if (ys.size() != thetas.size())
        throw std::invalid_argument("payoff: ys and thetas disagree in length");
    if (i >= ys.size()) throw std::out_of_range("payoff: agent index out of range");
    const double n = static_cast<double>(ys.size());
    const double mean = util::pairwise_sum(ys.data(), ys.size()) / n;
    const double y = ys[i];
    const double gap = mean - y;
    return prm.sigma * (0.5 * thetas[i] * y * y - std::pow(y, prm.p + 2.0) / (prm.p + 2.0)) -
           0.5 * gap * gap;
}

double nash_residual(const std::vector<double>& ys, const std::vector<double>& thetas,
                     const ModelParams& prm) {
    if (ys.size() != thetas.size())
        throw std::invalid_argument("nash_residual: ys and thetas disagree in length");
    if (ys.empty()) throw std::invalid_argument("nash_residual: empty system");
    const double n = static_cast<double>(ys.size());
    const double mean = util::pairwise_sum(ys.data(), ys.size()) / n;
    double worst = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double rhs =
            mean - ys[i] + prm.sigma * (thetas[i] - std::pow(ys[i], prm.p)) * ys[i];
        worst = std::max(worst, std::abs(rhs));
    }
    return worst;
}

Envelope bound_y_envelope(double t, const EmpiricalMeasure& mu0, const ModelParams& prm) {
    if (!(t >= 0.0)) throw std::invalid_argument("bound_y_envelope: t must be nonnegative");
    check_params(prm);

    // Work in unit-sigma variables, map the bounds back at the end.
    const double scale = std::pow(prm.sigma, 1.0 / prm.p);
    double y_lo = mu0.atoms()[0].y * scale, y_hi = y_lo;
    double th_lo = mu0.atoms()[0].theta * prm.sigma, th_hi = th_lo;
    for (const Atom& a : mu0.atoms()) {
        y_lo = std::min(y_lo, a.y * scale);
        y_hi = std::max(y_hi, a.y * scale);
        th_lo = std::min(th_lo, a.theta * prm.sigma);
        th_hi = std::max(th_hi, a.theta * prm.sigma);
    }
    const double upper_p = logistic_power(std::pow(y_hi, prm.p), th_hi, prm.p, t);
    const double lower_p = logistic_power(std::pow(y_lo, prm.p), th_lo, prm.p, t);
    return {std::pow(lower_p, 1.0 / prm.p) / scale, std::pow(upper_p, 1.0 / prm.p) / scale};
}

double bound_slice_lower(double t, double theta, double y0, double p) {
    if (!(theta > 1.0))
        throw std::invalid_argument("bound_slice_lower: defined only for theta > 1");
    if (!(t >= 0.0) || !(y0 > 0.0) || !(p > 0.0))
        throw std::invalid_argument("bound_slice_lower: need t >= 0, y0 > 0, p > 0");
    return std::pow(logistic_power(std::pow(y0, p), theta - 1.0, p, t), 1.0 / p);
}

std::pair<EmpiricalMeasure, ModelParams> rescale_to_unit_sigma(const EmpiricalMeasure& mu,
                                                               const ModelParams& prm) {
    check_params(prm);
    const double scale = std::pow(prm.sigma, 1.0 / prm.p);
    std::vector<Atom> atoms = mu.atoms();
    for (Atom& a : atoms) {
        a.y *= scale;
        a.theta *= prm.sigma;
    }
    return {EmpiricalMeasure(std::move(atoms)), ModelParams{1.0, prm.p}};
}

EmpiricalMeasure rescale_from_unit_sigma(const EmpiricalMeasure& hat_mu,
                                         const ModelParams& original) {
    check_params(original);
    const double scale = std::pow(original.sigma, 1.0 / original.p);
    std::vector<Atom> atoms = hat_mu.atoms();
    for (Atom& a : atoms) {
        a.y /= scale;
        a.theta /= original.sigma;
    }
    return EmpiricalMeasure(std::move(atoms));
}

}  // namespace opdyn
