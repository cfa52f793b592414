#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "arl/core/types.hpp"

namespace arl {

/// One rollout: H+1 observation rows and H action rows.
struct Trajectory {
  Mat states;
  Mat actions;
};

/// Offline corpus plus a flat (traj, step) index covering every transition.
/// The generating maze text is embedded so reward relabelling always uses the
/// exact environment the data came from.
struct Dataset {
  std::string env_name;
  std::string env_text;
  int state_dim = 0;
  int action_dim = 0;
  bool discrete_actions = false;
  std::vector<Trajectory> trajs;
  std::vector<std::pair<int, int>> index;
  std::vector<int64_t> state_offsets;  // prefix sums of per-trajectory state counts

  void rebuild_index();
  int64_t transitions() const { return int64_t(index.size()); }
  int horizon(int traj) const { return int(trajs[traj].actions.rows()); }
  int64_t state_count() const { return state_offsets.empty() ? 0 : state_offsets.back(); }
};

void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);
void export_csv(const Dataset& d, std::ostream& out);

/// Content hash over the serialized bytes (for manifests).
uint64_t dataset_hash(const Dataset& d);

}  // namespace arl
