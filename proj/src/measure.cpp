#include "opdyn/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>

#include "opdyn/util.hpp"

namespace opdyn {

namespace {

void check_normalized(const WeightedPoints& pts, const char* what) {
    if (pts.empty()) throw std::invalid_argument(std::string(what) + ": empty measure");
    double total = 0.0;
    for (const auto& [x, w] : pts) {
        if (!std::isfinite(x) || !std::isfinite(w))
            throw std::invalid_argument(std::string(what) + ": non-finite atom");
        if (w <= 0.0) throw std::invalid_argument(std::string(what) + ": nonpositive weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument(std::string(what) + ": weights sum to " +
                                    util::format_double(total) + ", expected 1");
}

// ---------------------------------------------------------------------------
// Transportation simplex.  Basis is a spanning tree over m row nodes and n
// column nodes; potentials are recomputed from the tree every pivot, the
// entering cell is the most negative reduced cost, the leaving arc the first
// minimizer along the alternating cycle.  Deterministic throughout.
// ---------------------------------------------------------------------------

struct BasicCell {
    std::size_t i, j;
    double flow;
};

double transport_min_cost(const std::vector<double>& supply,
                          const std::vector<double>& demand,
                          const std::vector<double>& cost /* m*n row-major */) {
    const std::size_t m = supply.size(), n = demand.size();
    const std::size_t nodes = m + n;
    auto c = [&](std::size_t i, std::size_t j) { return cost[i * n + j]; };

    double cmax = 1.0;
    for (double v : cost) cmax = std::max(cmax, std::abs(v));
    const double enter_tol = -1e-13 * cmax;

    // Northwest-corner start: exactly m+n-1 basic cells, possibly degenerate.
    std::vector<BasicCell> basis;
    basis.reserve(nodes - 1);
    {
        std::vector<double> ar = supply, br = demand;
        std::size_t i = 0, j = 0;
        for (std::size_t k = 0; k + 1 < nodes; ++k) {
            const double q = std::min(ar[i], br[j]);
            basis.push_back({i, j, q});
            ar[i] -= q;
            br[j] -= q;
            if (k + 2 == nodes) break;
            if (i + 1 < m && (ar[i] <= br[j] || j + 1 == n))
                ++i;
            else
                ++j;
        }
    }

    std::vector<char> is_basic(m * n, 0);
    for (const auto& b : basis) is_basic[b.i * n + b.j] = 1;

    std::vector<double> u(m), v(n);
    std::vector<std::vector<std::size_t>> adj(nodes);  // node -> basis indices
    std::vector<std::size_t> parent(nodes), parent_arc(nodes);
    std::vector<char> seen(nodes);

    const std::size_t max_pivots = 200 * nodes + 2000;
    for (std::size_t pivot = 0;; ++pivot) {
        if (pivot > max_pivots)
            throw SolveError("transport: pivot cap exceeded, instance may be cycling");

        // Potentials from the basis tree, rooted at row 0.
        for (auto& a : adj) a.clear();
        for (std::size_t b = 0; b < basis.size(); ++b) {
            adj[basis[b].i].push_back(b);
            adj[m + basis[b].j].push_back(b);
        }
        std::fill(seen.begin(), seen.end(), 0);
        std::queue<std::size_t> bfs;
        bfs.push(0);
        seen[0] = 1;
        u[0] = 0.0;
        while (!bfs.empty()) {
            const std::size_t node = bfs.front();
            bfs.pop();
            for (const std::size_t b : adj[node]) {
                const std::size_t row = basis[b].i, col = m + basis[b].j;
                const std::size_t other = (node == row) ? col : row;
                if (seen[other]) continue;
                seen[other] = 1;
                if (other == col)
                    v[basis[b].j] = c(basis[b].i, basis[b].j) - u[basis[b].i];
                else
                    u[basis[b].i] = c(basis[b].i, basis[b].j) - v[basis[b].j];
                bfs.push(other);
            }
        }

        // Entering cell.
        double best = enter_tol;
        std::size_t ei = 0, ej = 0;
        bool found = false;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (is_basic[i * n + j]) continue;
                const double r = c(i, j) - u[i] - v[j];
                if (r < best) {
                    best = r;
                    ei = i;
                    ej = j;
                    found = true;
                }
            }
        if (!found) break;

        // Tree path from row ei to column ej.
        std::fill(seen.begin(), seen.end(), 0);
        seen[ei] = 1;
        std::queue<std::size_t> q2;
        q2.push(ei);
        while (!q2.empty()) {
            const std::size_t node = q2.front();
            q2.pop();
            if (node == m + ej) break;
            for (const std::size_t b : adj[node]) {
                const std::size_t row = basis[b].i, col = m + basis[b].j;
                const std::size_t other = (node == row) ? col : row;
                if (seen[other]) continue;
                seen[other] = 1;
                parent[other] = node;
                parent_arc[other] = b;
                q2.push(other);
            }
        }

        // Arcs along the cycle, entering first; signs alternate -,+,-,...
        std::vector<std::size_t> path;
        for (std::size_t node = m + ej; node != ei; node = parent[node])
            path.push_back(parent_arc[node]);
        std::reverse(path.begin(), path.end());

        double delta = std::numeric_limits<double>::infinity();
        std::size_t leave_pos = 0;
        for (std::size_t q = 0; q < path.size(); q += 2) {
            if (basis[path[q]].flow < delta) {
                delta = basis[path[q]].flow;
                leave_pos = q;
            }
        }
        for (std::size_t q = 0; q < path.size(); ++q) {
            if (q % 2 == 0)
                basis[path[q]].flow -= delta;
            else
                basis[path[q]].flow += delta;
        }
        const std::size_t leave = path[leave_pos];
        is_basic[basis[leave].i * n + basis[leave].j] = 0;
        is_basic[ei * n + ej] = 1;
        basis[leave] = {ei, ej, delta};
    }

    double total = 0.0;
    for (const auto& b : basis) total += b.flow * c(b.i, b.j);
    return total;
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw std::invalid_argument("measure: needs at least one atom");
    double total = 0.0;
    for (const Atom& a : atoms_) {
        if (!std::isfinite(a.y) || !std::isfinite(a.theta) || !std::isfinite(a.weight))
            throw std::invalid_argument("measure: non-finite atom");
        if (a.y <= 0.0 || a.theta <= 0.0 || a.weight <= 0.0)
            throw std::invalid_argument("measure: atoms need y > 0, theta > 0, weight > 0");
        total += a.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("measure: weights sum to " + util::format_double(total) +
                                    ", expected 1");

    // Group atoms by exact conviction value, ascending, original order kept
    // inside each group.
    std::vector<std::size_t> order(atoms_.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return atoms_[a].theta < atoms_[b].theta;
    });
    for (const std::size_t idx : order) {
        if (thetas_.empty() || atoms_[idx].theta != thetas_.back()) {
            thetas_.push_back(atoms_[idx].theta);
            groups_.emplace_back();
        }
        groups_.back().push_back(idx);
    }
}

double EmpiricalMeasure::mean_y() const {
    return util::pairwise_sum_f(0, atoms_.size(),
                                [&](std::size_t i) { return atoms_[i].weight * atoms_[i].y; });
}

ConvictionMarginal::ConvictionMarginal(WeightedPoints atoms) : atoms_(std::move(atoms)) {
    check_normalized(atoms_, "conviction marginal");
    for (std::size_t k = 0; k + 1 < atoms_.size(); ++k)
        if (!(atoms_[k].first < atoms_[k + 1].first))
            throw std::invalid_argument("conviction marginal: thetas must be strictly increasing");
    for (const auto& [t, w] : atoms_)
        if (t <= 0.0) throw std::invalid_argument("conviction marginal: theta must be positive");
}

ConvictionMarginal conviction_marginal(const EmpiricalMeasure& mu) {
    WeightedPoints out;
    out.reserve(mu.distinct_thetas().size());
    for (std::size_t g = 0; g < mu.distinct_thetas().size(); ++g) {
        double mass = 0.0;
        for (const std::size_t idx : mu.groups()[g]) mass += mu.atoms()[idx].weight;
        out.emplace_back(mu.distinct_thetas()[g], mass);
    }
    return ConvictionMarginal(std::move(out));
}

SliceMeasure slice(const EmpiricalMeasure& mu, double theta) {
    const auto& thetas = mu.distinct_thetas();
    const auto it = std::lower_bound(thetas.begin(), thetas.end(), theta);
    if (it == thetas.end() || *it != theta)
        throw std::invalid_argument("slice: conviction " + util::format_double(theta) +
                                    " not in the support");
    const std::size_t g = static_cast<std::size_t>(it - thetas.begin());
    double mass = 0.0;
    for (const std::size_t idx : mu.groups()[g]) mass += mu.atoms()[idx].weight;
    SliceMeasure s;
    s.theta = theta;
    s.atoms.reserve(mu.groups()[g].size());
    for (const std::size_t idx : mu.groups()[g])
        s.atoms.emplace_back(mu.atoms()[idx].y, mu.atoms()[idx].weight / mass);
    return s;
}

double wasserstein1_1d(const WeightedPoints& a, const WeightedPoints& b) {
    check_normalized(a, "wasserstein1_1d lhs");
    check_normalized(b, "wasserstein1_1d rhs");
    WeightedPoints sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());

    // Integral of |F_a - F_b| over the merged breakpoints.
    double fa = 0.0, fb = 0.0, dist = 0.0;
    double prev = 0.0;
    bool have_prev = false;
    std::size_t i = 0, j = 0;
    while (i < sa.size() || j < sb.size()) {
        double x;
        if (j == sb.size() || (i < sa.size() && sa[i].first <= sb[j].first))
            x = sa[i].first;
        else
            x = sb[j].first;
        if (have_prev && x > prev) dist += std::abs(fa - fb) * (x - prev);
        while (i < sa.size() && sa[i].first == x) fa += sa[i++].second;
        while (j < sb.size() && sb[j].first == x) fb += sb[j++].second;
        prev = x;
        have_prev = true;
    }
    return dist;
}

double wasserstein1_1d(const SliceMeasure& a, const SliceMeasure& b) {
    return wasserstein1_1d(a.atoms, b.atoms);
}

double wasserstein1_joint(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    const std::size_t m = mu.size(), n = nu.size();
    if (m + n > 5000)
        throw std::invalid_argument(
            "wasserstein1_joint: more than 5000 combined atoms; subsample the inputs first");

    std::vector<double> supply(m), demand(n), cost(m * n);
    for (std::size_t i = 0; i < m; ++i) supply[i] = mu.atoms()[i].weight;
    for (std::size_t j = 0; j < n; ++j) demand[j] = nu.atoms()[j].weight;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            cost[i * n + j] = std::abs(mu.atoms()[i].y - nu.atoms()[j].y) +
                              std::abs(mu.atoms()[i].theta - nu.atoms()[j].theta);
    return transport_min_cost(supply, demand, cost);
}

double sup_slice_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.distinct_thetas() != nu.distinct_thetas())
        throw std::invalid_argument("sup_slice_distance: conviction supports differ");
    double worst = 0.0;
    for (const double t : mu.distinct_thetas())
        worst = std::max(worst, wasserstein1_1d(slice(mu, t), slice(nu, t)));
    return worst;
}

}  // namespace opdyn
