#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace opdyn {

// One atom of an empirical measure on the opinion/conviction quadrant.
// y: opinion (> 0), theta: conviction (> 0), weight: mass (> 0).
struct Atom {
    double y;
    double theta;
    double weight;
};

// (position, weight) pairs of a one-dimensional atomic measure.
using WeightedPoints = std::vector<std::pair<double, double>>;

// Atomic probability measure.  Atom order is preserved from construction so
// that an atom keeps its identity along a trajectory; atoms sharing a
// conviction (exact floating-point equality) are indexed into theta groups.
class EmpiricalMeasure {
  public:
    explicit EmpiricalMeasure(std::vector<Atom> atoms);

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }

    // Ascending distinct convictions and, parallel to them, the atom indices
    // of each group in original order.
    const std::vector<double>& distinct_thetas() const { return thetas_; }
    const std::vector<std::vector<std::size_t>>& groups() const { return groups_; }

    double mean_y() const;  // sum_i w_i y_i, deterministic reduction

  private:
    std::vector<Atom> atoms_;
    std::vector<double> thetas_;
    std::vector<std::vector<std::size_t>> groups_;
};

// Distribution of conviction values: (theta, mass), theta strictly increasing,
// masses summing to one.
class ConvictionMarginal {
  public:
    explicit ConvictionMarginal(WeightedPoints atoms);

    const WeightedPoints& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    double theta_min() const { return atoms_.front().first; }
    double theta_max() const { return atoms_.back().first; }

  private:
    WeightedPoints atoms_;
};

// Conditional opinion distribution at a fixed conviction, renormalized to
// total mass one.  Atoms keep the parent measure's relative order.
struct SliceMeasure {
    double theta;
    WeightedPoints atoms;
};

ConvictionMarginal conviction_marginal(const EmpiricalMeasure& mu);

// Extracts the slice at an exactly matching conviction value; throws
// std::invalid_argument if theta is not in the support.
SliceMeasure slice(const EmpiricalMeasure& mu, double theta);

// Exact 1-Wasserstein distance between two normalized atomic measures on the
// line, via the CDF-difference integral over merged breakpoints.
double wasserstein1_1d(const WeightedPoints& a, const WeightedPoints& b);
double wasserstein1_1d(const SliceMeasure& a, const SliceMeasure& b);

// Exact 1-Wasserstein distance on the quadrant with ground metric
// |dy| + |dtheta|, solved as a transportation problem on the atom graph.
// Refuses instances with more than 5000 combined atoms.
double wasserstein1_joint(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// max over shared convictions of the sliced 1-D distance; requires both
// measures to have identical distinct conviction sets.
double sup_slice_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

}  // namespace opdyn
