#pragma once

#include "ots/splat.hpp"

#include <cstdint>
#include <vector>

namespace ots {

/// Bijection pairing row n of one cloud with row permutation[n] of another.
struct Assignment {
    Permutation permutation;
    double cost = 0.0;
};

/// Clouds whose rows correspond: row n of every cloud is the same particle.
struct MatchedEnsemble {
    std::vector<ParticleCloud> clouds;
    /// orderings[p - 1] maps matched row n to the original row of cloud p;
    /// cloud 0 keeps its own order.
    std::vector<Permutation> orderings;
    /// Sum over all cloud pairs of the squared distances between matched rows.
    double total_cost = 0.0;
    /// Best cost after each generation of the heuristic (empty for exact paths).
    std::vector<double> cost_history;
};

bool is_permutation_of_range(const Permutation& perm);

/// sum_n |a_n - b_perm[n]|^2.
double pairwise_cost(const ParticleCloud& a, const ParticleCloud& b, const Permutation& perm);

/// Total multimarginal cost when cloud p is read in the order perms[p].
/// Evaluated through the per-row barycenter identity
/// sum_{p<q} |x_p - x_q|^2 = P sum_p |x_p - mean|^2.
double ensemble_cost(const std::vector<ParticleCloud>& clouds, const std::vector<Permutation>& perms);

/// Exact optimal bijection under squared Euclidean cost; ties resolve to the
/// lexicographically smallest permutation.
Assignment match_pair(const ParticleCloud& a, const ParticleCloud& b);

struct MatchOptions {
    int population = 64;
    int tournament = 3;
    int elitism = 2;
    /// Per-position swap probability is mutation_scale / N.
    double mutation_scale = 2.0;
    int max_generations = 500;
    /// Stop when the best cost improved by less than either threshold over
    /// the last stall_generations generations.
    double absolute_threshold = 1e2;
    double relative_threshold = 1e-4;
    int stall_generations = 20;
    /// Coordinate-descent sweeps (match each cloud to the barycenter of the
    /// others) used to build one of the seeded individuals.
    int refinement_sweeps = 5;
    std::uint64_t seed = 0;
};

/// Heuristic multimarginal matching (genetic algorithm over P-1 orderings).
/// P = 2 is solved exactly.
MatchedEnsemble match_multi(const std::vector<ParticleCloud>& clouds, const MatchOptions& options = {});

/// Exhaustive search over all (N!)^(P-1) orderings. Guarded to 1e7 candidates.
MatchedEnsemble brute_force_match(const std::vector<ParticleCloud>& clouds);

/// Reorders the clouds by the given orderings (cloud 0 untouched) and fills
/// the cost.
MatchedEnsemble make_ensemble(const std::vector<ParticleCloud>& clouds, std::vector<Permutation> orderings);

}  // namespace ots
