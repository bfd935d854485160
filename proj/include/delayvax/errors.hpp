#pragma once

#include <stdexcept>
#include <string>

namespace delayvax {

// Error codes exposed through the CLI as machine-readable identifiers.
enum class Errc {
  multiple_roots,
  cycle_detected,
  disconnected_node,
  invalid_node_id,
  not_in_set,
  source_in_plan,
  already_selected,
  inconsistent_universe,
  budget_exceeds_candidates,
  search_space_too_large,
  generation_budget_exceeded,
  sources_not_connected,
  root_not_source,
  config_invalid,
  io_failure,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::multiple_roots: return "MultipleRoots";
    case Errc::cycle_detected: return "CycleDetected";
    case Errc::disconnected_node: return "DisconnectedNode";
    case Errc::invalid_node_id: return "InvalidNodeId";
    case Errc::not_in_set: return "NotInSet";
    case Errc::source_in_plan: return "SourceInPlan";
    case Errc::already_selected: return "AlreadySelected";
    case Errc::inconsistent_universe: return "InconsistentUniverse";
    case Errc::budget_exceeds_candidates: return "BudgetExceedsCandidates";
    case Errc::search_space_too_large: return "SearchSpaceTooLarge";
    case Errc::generation_budget_exceeded: return "GenerationBudgetExceeded";
    case Errc::sources_not_connected: return "SourcesNotConnected";
    case Errc::root_not_source: return "RootNotSource";
    case Errc::config_invalid: return "ConfigInvalid";
    case Errc::io_failure: return "IoFailure";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace delayvax
