#include "opdyn/steady.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "opdyn/util.hpp"

namespace opdyn {

namespace {

double steady_residual(double g, double theta, double alpha, double p) {
    return alpha + (theta - 1.0) * g - std::pow(g, p + 1.0);
}

// The residual is positive below the root and negative above it: the cubic-
// like map rises from alpha > 0 to at most one interior maximum and then
// falls, so there is exactly one positive root.
double bisect_then_polish(double lo, double hi, double theta, double alpha, double p) {
    double flo = steady_residual(lo, theta, alpha, p);
    if (flo == 0.0) return lo;
    for (int it = 0; it < 200; ++it) {
        if (hi - lo <= 1e-14) break;
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double fm = steady_residual(mid, theta, alpha, p);
        if (fm == 0.0) return mid;
        if ((flo > 0.0) == (fm > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    double g = 0.5 * (lo + hi);
    for (int it = 0; it < 16; ++it) {
        const double f = steady_residual(g, theta, alpha, p);
        const double df = (theta - 1.0) - (p + 1.0) * std::pow(g, p);
        if (df == 0.0) break;
        const double step = f / df;
        const double next = g - step;
        if (!(next > 0.0) || !std::isfinite(next)) break;
        g = next;
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * g) break;
    }
    return g;
}

}  // namespace

double solve_g_given_alpha(double theta, double alpha, double p) {
    if (!(theta > 0.0) || !(alpha > 0.0) || !(p > 0.0))
        throw std::invalid_argument("solve_g_given_alpha: need theta, alpha, p > 0");

    double lo = 1.0, hi = 1.0;
    const double f1 = steady_residual(1.0, theta, alpha, p);
    if (f1 > 0.0) {
        hi = 2.0;
        while (steady_residual(hi, theta, alpha, p) > 0.0) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e120) throw SolveError("solve_g_given_alpha: upper bracket diverged");
        }
    } else if (f1 < 0.0) {
        lo = 0.5;
        while (steady_residual(lo, theta, alpha, p) < 0.0) {
            hi = lo;
            lo *= 0.5;
            if (lo < 1e-300) throw SolveError("solve_g_given_alpha: lower bracket collapsed");
        }
    } else {
        return 1.0;
    }
    return bisect_then_polish(lo, hi, theta, alpha, p);
}

bool uniqueness_condition(const ConvictionMarginal& pi, double p) {
    const double lo = pi.theta_min(), hi = pi.theta_max();
    return lo > (p + 1.0) / p || hi / lo < p + 1.0;
}

SteadyProfile solve_profile(const ConvictionMarginal& pi, double p, int grid_n) {
    if (!(p > 0.0)) throw std::invalid_argument("solve_profile: p must be positive");
    if (grid_n < 2) throw std::invalid_argument("solve_profile: grid needs at least two points");

    const auto& atoms = pi.atoms();
    auto fixed_point_gap = [&](double alpha) {
        double s = 0.0;
        for (const auto& [theta, mass] : atoms) s += mass * solve_g_given_alpha(theta, alpha, p);
        return s - alpha;
    };

    // Expanding bracket on alpha.  The gap is positive at the bottom of the
    // range and eventually negative because g grows sublinearly in alpha.
    const double alpha_lo = 1e-12;
    if (!(fixed_point_gap(alpha_lo) > 0.0))
        throw SolveError("solve_profile: no positive gap at the lower bracket");
    double lo = alpha_lo, hi = 1.0;
    while (fixed_point_gap(hi) >= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > std::ldexp(1.0, 60)) throw SolveError("solve_profile: alpha bracket cap reached");
    }
    const double scan_lo = alpha_lo, scan_hi = hi;

    double blo = lo, bhi = hi;
    double fblo = fixed_point_gap(blo);
    if (fblo == 0.0) {
        // The expanding bracket landed on the root exactly.
        bhi = blo;
    } else {
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (blo + bhi);
            if (mid == blo || mid == bhi) break;
            const double fm = fixed_point_gap(mid);
            if (fm == 0.0) {
                blo = bhi = mid;
                break;
            }
            if ((fblo > 0.0) == (fm > 0.0)) {
                blo = mid;
                fblo = fm;
            } else {
                bhi = mid;
            }
        }
    }
    const double alpha = 0.5 * (blo + bhi);

    SteadyProfile profile(pi);
    profile.p = p;
    profile.alpha = alpha;
    profile.unique_condition = uniqueness_condition(pi, p);

    // Sign-change scan across the whole bracket; every root becomes a
    // candidate, whether or not the sufficient uniqueness condition holds.
    {
        const int scan_n = 256;
        double prev_a = scan_lo, prev_f = fixed_point_gap(scan_lo);
        for (int k = 1; k < scan_n; ++k) {
            const double a =
                scan_lo + (scan_hi - scan_lo) * static_cast<double>(k) / (scan_n - 1);
            const double f = fixed_point_gap(a);
            if (prev_f == 0.0) {
                profile.alpha_candidates.push_back(prev_a);
            } else if ((prev_f > 0.0) != (f > 0.0)) {
                double rlo = prev_a, rhi = a, rflo = prev_f;
                for (int it = 0; it < 200; ++it) {
                    const double mid = 0.5 * (rlo + rhi);
                    if (mid == rlo || mid == rhi) break;
                    const double fm = fixed_point_gap(mid);
                    if (fm == 0.0) {
                        rlo = rhi = mid;
                        break;
                    }
                    if ((rflo > 0.0) == (fm > 0.0)) {
                        rlo = mid;
                        rflo = fm;
                    } else {
                        rhi = mid;
                    }
                }
                profile.alpha_candidates.push_back(0.5 * (rlo + rhi));
            }
            prev_a = a;
            prev_f = f;
        }
        profile.alpha_candidates.push_back(alpha);
        std::sort(profile.alpha_candidates.begin(), profile.alpha_candidates.end());
        // A root can be reported twice when it sits on a scan point; merge
        // anything tighter than the scan's own resolution.
        std::vector<double> merged;
        for (const double a : profile.alpha_candidates)
            if (merged.empty() || a - merged.back() > 1e-9 * std::max(1.0, a))
                merged.push_back(a);
        profile.alpha_candidates = std::move(merged);
    }

    // Conviction grid over the support; a single-atom marginal gets a narrow
    // symmetric window so the grid stays strictly increasing.
    double t_lo = pi.theta_min(), t_hi = pi.theta_max();
    if (t_lo == t_hi) {
        t_lo *= 0.99;
        t_hi *= 1.01;
    }
    profile.thetas.resize(grid_n);
    profile.g.resize(grid_n);
    profile.g_prime.resize(grid_n);
    profile.g_second.resize(grid_n);
    for (int k = 0; k < grid_n; ++k)
        profile.thetas[k] = t_lo + (t_hi - t_lo) * static_cast<double>(k) / (grid_n - 1);
    profile.thetas.back() = t_hi;

    util::parallel_for(static_cast<std::size_t>(grid_n), [&](std::size_t a, std::size_t b) {
        for (std::size_t k = a; k < b; ++k) {
            const double g = solve_g_given_alpha(profile.thetas[k], alpha, p);
            profile.g[k] = g;
            profile.g_prime[k] = g_prime(profile.thetas[k], g, p);
            profile.g_second[k] = g_second(profile.thetas[k], g, p);
        }
    });

    profile.g_at_pi.resize(atoms.size());
    double pushforward = 0.0, worst = 0.0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
        profile.g_at_pi[j] = solve_g_given_alpha(atoms[j].first, alpha, p);
        pushforward += atoms[j].second * profile.g_at_pi[j];
        worst = std::max(worst,
                         std::abs(steady_residual(profile.g_at_pi[j], atoms[j].first, alpha, p)));
    }
    for (int k = 0; k < grid_n; ++k)
        worst = std::max(worst,
                         std::abs(steady_residual(profile.g[k], profile.thetas[k], alpha, p)));
    profile.residual = worst;

    if (std::abs(pushforward - alpha) > 1e-10)
        throw SolveError("solve_profile: self-consistency drift above 1e-10");
    return profile;
}

double refined_lower_bound_check(const SteadyProfile& profile) {
    const auto& atoms = profile.pi.atoms();
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < profile.thetas.size(); ++k) {
        const double theta = profile.thetas[k];
        double tail = 0.0;
        for (const auto& [t, m] : atoms)
            if (t >= theta) tail += m;
        const double bound = theta + tail - 1.0;
        worst = std::max(worst, bound - std::pow(profile.g[k], profile.p));
    }
    return worst;
}

std::pair<double, double> extreme_value_check(const SteadyProfile& profile) {
    const double gp_lo = std::pow(profile.g.front(), profile.p);
    const double gp_hi = std::pow(profile.g.back(), profile.p);
    return {profile.thetas.front() - gp_lo, gp_hi - profile.thetas.back()};
}

double g_prime(double theta, double g, double p) {
    if (!(g > 0.0)) throw std::invalid_argument("g_prime: g must be positive");
    const double denom = 1.0 - theta + (p + 1.0) * std::pow(g, p);
    if (denom <= 0.0)
        throw std::domain_error("g_prime: nonpositive denominator, point is off the profile");
    return g / denom;
}

double g_second(double theta, double g, double p) {
    if (!(g > 0.0)) throw std::invalid_argument("g_second: g must be positive");
    const double denom = 1.0 - theta + (p + 1.0) * std::pow(g, p);
    if (denom <= 0.0)
        throw std::domain_error("g_second: nonpositive denominator, point is off the profile");
    const double num = 2.0 * (1.0 - theta) * g + (2.0 + p - p * p) * std::pow(g, p + 1.0);
    return num / (denom * denom * denom);
}

std::vector<double> inflection_points(const SteadyProfile& profile) {
    const double p = profile.p;
    if (p <= 1.0) return {};  // profile is convex throughout

    // Sign of the curvature numerator, with the positive factor g removed.
    auto curvature_sign = [&](double theta) {
        const double g = solve_g_given_alpha(theta, profile.alpha, p);
        return 2.0 * (1.0 - theta) - (p * p - p - 2.0) * std::pow(g, p);
    };

    std::vector<double> roots;
    double prev_t = profile.thetas.front();
    double prev_s = 2.0 * (1.0 - prev_t) - (p * p - p - 2.0) * std::pow(profile.g.front(), p);
    for (std::size_t k = 1; k < profile.thetas.size(); ++k) {
        const double t = profile.thetas[k];
        const double s = 2.0 * (1.0 - t) - (p * p - p - 2.0) * std::pow(profile.g[k], p);
        if (prev_s == 0.0) {
            roots.push_back(prev_t);
        } else if ((prev_s > 0.0) != (s > 0.0)) {
            double lo = prev_t, hi = t, flo = prev_s;
            while (hi - lo > 1e-10) {
                const double mid = 0.5 * (lo + hi);
                if (mid == lo || mid == hi) break;
                const double fm = curvature_sign(mid);
                if (fm == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if ((flo > 0.0) == (fm > 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev_t = t;
        prev_s = s;
    }
    if (prev_s == 0.0) roots.push_back(prev_t);
    return roots;
}

std::vector<FigureRow> figure_curves(double p, const std::vector<double>& alphas,
                                     const std::vector<double>& theta_grid) {
    if (alphas.empty() || theta_grid.empty())
        throw std::invalid_argument("figure_curves: empty sweep");
    for (const double a : alphas)
        if (!(a > 0.0)) throw std::invalid_argument("figure_curves: alpha must be positive");
    for (const double t : theta_grid)
        if (!(t > 0.0)) throw std::invalid_argument("figure_curves: theta must be positive");

    std::vector<FigureRow> rows(alphas.size() * theta_grid.size());
    util::parallel_for(rows.size(), [&](std::size_t a, std::size_t b) {
        for (std::size_t k = a; k < b; ++k) {
            const double alpha = alphas[k / theta_grid.size()];
            const double theta = theta_grid[k % theta_grid.size()];
            rows[k] = {alpha, theta, solve_g_given_alpha(theta, alpha, p)};
        }
    });
    return rows;
}

}  // namespace opdyn
