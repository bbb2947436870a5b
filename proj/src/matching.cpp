#include "ots/matching.hpp"

#include "ots/assignment.hpp"
#include "ots/error.hpp"
#include "ots/seed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace ots {

namespace {

void check_ensemble(const std::vector<ParticleCloud>& clouds)
{
    if (clouds.empty()) throw Error(ErrorCode::EmptyEnsemble, "matching needs at least one cloud");
    const int n = clouds.front().size();
    for (const auto& c : clouds)
        if (c.size() != n) throw Error(ErrorCode::SizeMismatch, "all clouds must hold the same number of particles");
}

Permutation identity(int n)
{
    Permutation p(n);
    std::iota(p.begin(), p.end(), 0);
    return p;
}

Eigen::MatrixXd squared_distances(const Centers& rows, const Centers& cols)
{
    const Eigen::Index n = rows.rows();
    Eigen::MatrixXd c(n, cols.rows());
    for (Eigen::Index j = 0; j < cols.rows(); ++j)
        for (Eigen::Index i = 0; i < n; ++i) {
            const double dx = rows(i, 0) - cols(j, 0);
            const double dy = rows(i, 1) - cols(j, 1);
            c(i, j) = dx * dx + dy * dy;
        }
    return c;
}

struct Individual {
    std::vector<Permutation> perms;  // perms[0] is the identity
    double cost = 0.0;
};

// Relabels rows so that cloud 0 is read in its own order.
void anchor_first(std::vector<Permutation>& perms)
{
    const Permutation first = perms[0];
    for (auto& perm : perms) {
        Permutation relabeled(perm.size());
        for (std::size_t n = 0; n < perm.size(); ++n) relabeled[first[n]] = perm[n];
        perm = std::move(relabeled);
    }
}

std::vector<Permutation> chained_pairwise(const std::vector<ParticleCloud>& clouds)
{
    const int n = clouds.front().size();
    std::vector<Permutation> perms{identity(n)};
    ParticleCloud previous = clouds.front();
    for (std::size_t p = 1; p < clouds.size(); ++p) {
        Assignment a = match_pair(previous, clouds[p]);
        previous = clouds[p].reordered(a.permutation);
        perms.push_back(std::move(a.permutation));
    }
    return perms;
}

// Block coordinate descent: each cloud in turn is optimally assigned to the
// row-wise barycenter of all the others, which never increases the cost.
std::vector<Permutation> barycentric_refinement(const std::vector<ParticleCloud>& clouds,
                                                std::vector<Permutation> perms, int sweeps)
{
    const int P = static_cast<int>(clouds.size());
    const int n = clouds.front().size();
    double cost = ensemble_cost(clouds, perms);
    Centers sum = Centers::Zero(n, 2);
    for (int p = 0; p < P; ++p)
        for (int r = 0; r < n; ++r) sum.row(r) += clouds[p].centers().row(perms[p][r]);

    for (int s = 0; s < sweeps; ++s) {
        for (int p = 0; p < P; ++p) {
            Centers others = sum;
            for (int r = 0; r < n; ++r) others.row(r) -= clouds[p].centers().row(perms[p][r]);
            others /= static_cast<double>(P - 1);
            const LapSolution lap = solve_lap(squared_distances(others, clouds[p].centers()));
            perms[p] = lap.col_of_row;
            for (int r = 0; r < n; ++r) sum.row(r) = others.row(r) * static_cast<double>(P - 1) + clouds[p].centers().row(perms[p][r]);
        }
        const double updated = ensemble_cost(clouds, perms);
        const bool stalled = !(updated < cost - 1e-12 * std::max(1.0, cost));
        cost = std::min(cost, updated);
        if (stalled) break;
    }
    anchor_first(perms);
    return perms;
}

// Order crossover: keep a slice of the first parent, fill the rest in the
// second parent's cyclic order.
Permutation order_crossover(const Permutation& a, const Permutation& b, std::mt19937_64& rng,
                            std::vector<char>& used)
{
    const int n = static_cast<int>(a.size());
    if (n < 2) return a;
    std::uniform_int_distribution<int> pos(0, n - 1);
    int lo = pos(rng);
    int hi = pos(rng);
    if (lo > hi) std::swap(lo, hi);
    Permutation child(n);
    used.assign(n, 0);
    for (int i = lo; i <= hi; ++i) {
        child[i] = a[i];
        used[a[i]] = 1;
    }
    int write = (hi + 1) % n;
    for (int k = 0; k < n; ++k) {
        const int v = b[(hi + 1 + k) % n];
        if (used[v]) continue;
        child[write] = v;
        write = (write + 1) % n;
    }
    return child;
}

void swap_mutation(Permutation& perm, double rate, std::mt19937_64& rng)
{
    const int n = static_cast<int>(perm.size());
    if (n < 2) return;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> pos(0, n - 1);
    for (int i = 0; i < n; ++i)
        if (coin(rng) < rate) std::swap(perm[i], perm[pos(rng)]);
}

const Individual& tournament_pick(const std::vector<Individual>& pop, int k, std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> pick(0, static_cast<int>(pop.size()) - 1);
    int best = pick(rng);
    for (int t = 1; t < k; ++t) {
        const int c = pick(rng);
        if (pop[c].cost < pop[best].cost || (pop[c].cost == pop[best].cost && c < best)) best = c;
    }
    return pop[best];
}

}  // namespace

bool is_permutation_of_range(const Permutation& perm)
{
    std::vector<char> seen(perm.size(), 0);
    for (int v : perm) {
        if (v < 0 || v >= static_cast<int>(perm.size()) || seen[v]) return false;
        seen[v] = 1;
    }
    return true;
}

double pairwise_cost(const ParticleCloud& a, const ParticleCloud& b, const Permutation& perm)
{
    if (a.size() != b.size() || static_cast<int>(perm.size()) != a.size())
        throw Error(ErrorCode::SizeMismatch, "pairwise cost needs equal cloud sizes and a full permutation");
    double sum = 0.0;
    for (int n = 0; n < a.size(); ++n) sum += (a.centers().row(n) - b.centers().row(perm[n])).squaredNorm();
    return sum;
}

double ensemble_cost(const std::vector<ParticleCloud>& clouds, const std::vector<Permutation>& perms)
{
    check_ensemble(clouds);
    if (perms.size() != clouds.size()) throw Error(ErrorCode::SizeMismatch, "one ordering per cloud expected");
    const int P = static_cast<int>(clouds.size());
    const int n = clouds.front().size();
    double total = 0.0;
    for (int r = 0; r < n; ++r) {
        double mx = 0.0, my = 0.0;
        for (int p = 0; p < P; ++p) {
            mx += clouds[p].centers()(perms[p][r], 0);
            my += clouds[p].centers()(perms[p][r], 1);
        }
        mx /= P;
        my /= P;
        for (int p = 0; p < P; ++p) {
            const double dx = clouds[p].centers()(perms[p][r], 0) - mx;
            const double dy = clouds[p].centers()(perms[p][r], 1) - my;
            total += dx * dx + dy * dy;
        }
    }
    return P * total;
}

Assignment match_pair(const ParticleCloud& a, const ParticleCloud& b)
{
    if (a.size() != b.size()) throw Error(ErrorCode::SizeMismatch, "matched clouds must have equal particle counts");
    const LapSolution lap = solve_lap_lexicographic(squared_distances(a.centers(), b.centers()));
    Assignment out{lap.col_of_row, 0.0};
    out.cost = pairwise_cost(a, b, out.permutation);
    return out;
}

MatchedEnsemble make_ensemble(const std::vector<ParticleCloud>& clouds, std::vector<Permutation> orderings)
{
    check_ensemble(clouds);
    if (orderings.size() + 1 != clouds.size())
        throw Error(ErrorCode::SizeMismatch, "expected one ordering per cloud after the first");
    MatchedEnsemble out;
    std::vector<Permutation> perms{identity(clouds.front().size())};
    out.clouds.push_back(clouds.front());
    for (std::size_t p = 1; p < clouds.size(); ++p) {
        out.clouds.push_back(clouds[p].reordered(orderings[p - 1]));
        perms.push_back(orderings[p - 1]);
    }
    out.total_cost = ensemble_cost(clouds, perms);
    out.orderings = std::move(orderings);
    return out;
}

MatchedEnsemble match_multi(const std::vector<ParticleCloud>& clouds, const MatchOptions& options)
{
    check_ensemble(clouds);
    const int P = static_cast<int>(clouds.size());
    const int n = clouds.front().size();
    if (P == 1) return make_ensemble(clouds, {});
    if (P == 2) {
        Assignment a = match_pair(clouds[0], clouds[1]);
        return make_ensemble(clouds, {std::move(a.permutation)});
    }

    // Seeds: identity, chained pairwise, and its barycentric refinement.
    std::vector<Individual> pop;
    pop.push_back({std::vector<Permutation>(P, identity(n)), 0.0});
    pop.push_back({chained_pairwise(clouds), 0.0});
    pop.push_back({barycentric_refinement(clouds, pop.back().perms, options.refinement_sweeps), 0.0});
    for (auto& ind : pop) ind.cost = ensemble_cost(clouds, ind.perms);

    const int pop_size = std::max(options.population, static_cast<int>(pop.size()));
    const double rate = std::min(1.0, options.mutation_scale / n);
    for (int i = static_cast<int>(pop.size()); i < pop_size; ++i) {
        std::mt19937_64 rng(derive_seed(options.seed, 0, static_cast<std::uint64_t>(i)));
        Individual ind = pop[1 + i % 2];
        for (int p = 1; p < P; ++p) swap_mutation(ind.perms[p], rate, rng);
        ind.cost = ensemble_cost(clouds, ind.perms);
        pop.push_back(std::move(ind));
    }

    auto by_cost = [](const Individual& a, const Individual& b) { return a.cost < b.cost; };
    std::stable_sort(pop.begin(), pop.end(), by_cost);
    const double initial = pop.front().cost;
    std::vector<double> history{initial};
    const int elites = std::clamp(options.elitism, 1, pop_size);

    std::vector<char> scratch;
    for (int gen = 1; gen <= options.max_generations; ++gen) {
        if (history.back() <= 0.0) break;
        std::vector<Individual> next(pop.begin(), pop.begin() + elites);
        for (int i = elites; i < pop_size; ++i) {
            std::mt19937_64 rng(derive_seed(options.seed, static_cast<std::uint64_t>(gen), static_cast<std::uint64_t>(i)));
            const Individual& a = tournament_pick(pop, options.tournament, rng);
            const Individual& b = tournament_pick(pop, options.tournament, rng);
            Individual child;
            child.perms.reserve(P);
            child.perms.push_back(identity(n));
            for (int p = 1; p < P; ++p) {
                Permutation perm = order_crossover(a.perms[p], b.perms[p], rng, scratch);
                swap_mutation(perm, rate, rng);
                child.perms.push_back(std::move(perm));
            }
            child.cost = ensemble_cost(clouds, child.perms);
            next.push_back(std::move(child));
        }
        std::stable_sort(next.begin(), next.end(), by_cost);
        pop = std::move(next);
        history.push_back(pop.front().cost);

        if (gen >= options.stall_generations) {
            const double gained = history[gen - options.stall_generations] - history[gen];
            if (gained < options.absolute_threshold || gained < options.relative_threshold * initial) break;
        }
    }

    Individual& best = pop.front();
    std::vector<Permutation> orderings(best.perms.begin() + 1, best.perms.end());
    MatchedEnsemble out = make_ensemble(clouds, std::move(orderings));
    out.cost_history = std::move(history);
    return out;
}

MatchedEnsemble brute_force_match(const std::vector<ParticleCloud>& clouds)
{
    check_ensemble(clouds);
    const int P = static_cast<int>(clouds.size());
    const int n = clouds.front().size();
    double factorial = 1.0;
    for (int k = 2; k <= n; ++k) factorial *= k;
    if (std::pow(factorial, P - 1) > 1e7)
        throw Error(ErrorCode::TooLarge, "exhaustive matching limited to 1e7 candidate orderings");

    std::vector<Permutation> perms(P, identity(n));
    std::vector<Permutation> best = perms;
    double best_cost = ensemble_cost(clouds, perms);
    // Odometer over the P-1 free orderings, each in lexicographic order.
    while (true) {
        int p = P - 1;
        while (p >= 1 && !std::next_permutation(perms[p].begin(), perms[p].end())) --p;
        if (p < 1) break;
        const double c = ensemble_cost(clouds, perms);
        if (c < best_cost) {
            best_cost = c;
            best = perms;
        }
    }
    return make_ensemble(clouds, std::vector<Permutation>(best.begin() + 1, best.end()));
}

}  // namespace ots
