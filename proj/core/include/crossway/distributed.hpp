#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "crossway/agent.hpp"
#include "crossway/csvio.hpp"
#include "crossway/manager.hpp"
#include "crossway/scenario.hpp"

namespace crossway {

struct distributed_options {
  manager_config manager;
  // Advisory entries injected into the manager at the given virtual time.
  // An empty value clears the key.
  std::vector<std::tuple<std::int64_t, std::string, std::string>>
      side_info_at_ms;
};

struct distributed_result {
  // Merged across agents, t_s relative to the shared fleet epoch, sorted by
  // (t_s, vehicle_id).
  std::vector<trajectory_row> rows;
  std::vector<delay_row> delays;  // absolute ms timestamps
  // Per agent: (receive ms, global_sequence) of every accepted update.
  std::map<std::string, std::vector<std::pair<std::int64_t, std::uint64_t>>>
      accepted;
  std::vector<double> broadcast_times_ms;
  std::vector<std::string> log_lines;
  std::map<std::string, bool> agent_subscribed;
  std::optional<std::int64_t> epoch_ms;  // earliest full-fleet update stamp
};

// Runs manager + one agent per vehicle over simulated links under a virtual
// clock. Identical inputs produce bit-identical results.
distributed_result run_distributed(const scenario& sc,
                                   const distributed_options& opts = {});

}  // namespace crossway
