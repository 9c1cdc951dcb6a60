#pragma once

#include "mtirl/mdp.hpp"
#include "mtirl/priors.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

namespace mtirl {

/// Action indices of the chain task.
inline constexpr std::size_t kAdvance = 0;
inline constexpr std::size_t kReset = 1;

struct ChainSpec {
    std::size_t n_states = 5;
    double slip = 0.2;
    Vector rewards; ///< empty means (0.2, 0, ..., 0, 1)
    double discount = 0.95;
};

/// A known environment with one task's reward attached.
struct Task {
    std::shared_ptr<const Cmp> cmp;
    RewardFunction reward;
    double discount;

    Mdp mdp() const { return Mdp(cmp, reward, discount); }
};

/**
 * Chain kernel. "advance" moves to the next state with probability 1 - slip
 * and skips one state ahead with probability slip (both capped at the last
 * state, which loops on itself); "reset" returns to the first state.
 */
Cmp chain_cmp(std::size_t n_states, double slip);

/// Default chain rewards: 0.2 at the first state, 1 at the last, 0 elsewhere.
Vector default_chain_rewards(std::size_t n_states);

Task make_chain(const ChainSpec& spec);

/// Chain kernel with a Dirichlet-sampled reward.
Task make_generalized_chain(std::size_t n_states, double slip, double discount, const DirichletRewardPrior& prior,
                            Rng& rng);

/// Actions of the two-state task.
inline constexpr std::size_t kStay = 0;
inline constexpr std::size_t kSwitch = 1;

/// Two states, deterministic "stay" and "switch" actions.
Cmp two_state_cmp();

enum class DemonstratorKind { softmax, eps_greedy };

struct DemonstratorSpec {
    DemonstratorKind kind = DemonstratorKind::eps_greedy;
    double parameter = 1e-2; ///< eta for softmax, epsilon for eps-greedy
};

/// Softmax(eta) on Q*, or the greedy optimal policy mixed with uniform
/// exploration of total mass epsilon.
StationaryPolicy make_demonstrator(const DemonstratorSpec& spec, const Mdp& mdp);

struct RandomMdpSpec {
    std::size_t n_states = 8;
    std::size_t n_actions = 2;
    double transition_concentration = 1.0; ///< Dirichlet(c, ..., c) per kernel row
    double hyper_shape = 1.0;
    double hyper_rate = 10.0;
    std::size_t n_tasks = 20;
    std::size_t demo_length = 50;
    double eta_min = 2.0;
    double eta_max = 8.0;
    double discount = 0.95;
};

struct Population {
    std::shared_ptr<const Cmp> cmp;
    Vector concentration;
    std::vector<RewardFunction> rewards;
    std::vector<double> etas;
    std::vector<StationaryPolicy> demonstrators;
    double discount = 0.95;

    Task task(std::size_t m) const { return Task{cmp, rewards.at(m), discount}; }
};

/**
 * Random CMP shared by all tasks, one concentration vector from the Gamma
 * product, task rewards i.i.d. from the resulting Dirichlet, and per-task
 * softmax demonstrators with eta uniform in [eta_min, eta_max].
 *
 * Task m draws only from substream (seed, task, m), so a population of M
 * tasks is a prefix of any larger population with the same seed.
 */
Population make_random_mdp_population(const RandomMdpSpec& spec, std::uint64_t seed);

} // namespace mtirl
