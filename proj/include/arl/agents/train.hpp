#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arl/agents/updates.hpp"
#include "arl/data/dataset.hpp"

namespace arl {

struct MetricRow {
  int64_t step = 0;
  Metrics m;
};

struct TrainResult {
  Agent agent;
  std::vector<MetricRow> log;
  bool aborted = false;       // hit a non-finite loss or gradient
  int64_t abort_step = -1;    // step that blew up (agent rolls back to the
  std::string abort_reason;   //   last logged snapshot)
};

/// Offline training loop. Per step, one batch is drawn for every loss the
/// variant owns and the updates run in a fixed order: low value, high value,
/// high critic, low policy, high policy (flat: value, policy). The result is
/// a pure function of (spec, dataset, steps, seed). Environment dims and the
/// relabelling rules come from the dataset's embedded env text.
TrainResult train(AgentSpec spec, const Dataset& data, int64_t steps, uint64_t seed,
                  int64_t log_every = 100);

/// Line format: "step=N k1=v1 k2=v2 ...", keys sorted, full double precision.
std::string metric_log_text(const std::vector<MetricRow>& log);

}  // namespace arl
