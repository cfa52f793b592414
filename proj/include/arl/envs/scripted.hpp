#pragma once

#include <string>
#include <vector>

#include "arl/core/rng.hpp"
#include "arl/data/dataset.hpp"
#include "arl/envs/maze.hpp"

namespace arl {

/// Greedy steering down a flood-fill distance field, mixed with
/// epsilon-uniform noise. Continuous actions head for the center of the best
/// neighboring cell; discrete actions pick the lowest-index best move.
Vec scripted_action(const MazeSpec& spec, const EnvState& s,
                    const std::vector<int>& dist_to_target, double noise, Rng& rng);

/// Offline corpus generator. style "navigate": long rollouts toward far
/// random goals, re-picked on arrival. style "stitch": short local hops,
/// targets 1..3 cells away and kept within 4 cells of the trajectory's start
/// anchor so no single trajectory spans distant regions.
Dataset generate_dataset(const MazeSpec& spec, const std::string& style, int n_traj,
                         int horizon, double noise, uint64_t seed);

}  // namespace arl
