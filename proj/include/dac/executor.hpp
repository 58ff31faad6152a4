#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dac/graph.hpp"
#include "dac/lockfile.hpp"
#include "dac/object_store.hpp"
#include "dac/workspace.hpp"

namespace dac {

enum class StageState { kFresh, kStale, kNeverRun };

const char* to_string(StageState s);

struct StageStatus {
  StageState state = StageState::kNeverRun;
  std::vector<std::string> reasons;  // empty when fresh
};

// Static freshness classification of every stage. Staleness propagates to
// all descendants of a stale or never-run stage.
struct PlanResult {
  std::map<std::string, StageStatus> stages;

  // Stages that would run: stale plus never-run.
  std::set<std::string> stale_set() const;
};

struct RunReport {
  std::vector<std::string> executed;  // dispatch order
  std::vector<std::string> restored;  // run-cache hits, dispatch order
  std::vector<std::string> skipped;   // sorted
  std::map<std::string, std::string> failures;  // stage -> message

  std::map<std::string, double> wall_seconds;  // executed/restored stages
  // Start/completion instants in seconds relative to run start, for
  // schedule checks.
  std::map<std::string, std::pair<double, double>> spans;
  double total_seconds = 0.0;

  bool ok() const { return failures.empty(); }
  std::size_t executed_count(std::string_view stage) const;
  std::string summary() const;
};

// Incremental DAG execution over a workspace: skips fresh stages, restores
// run-cache hits, executes the rest with up to `workers` stages in flight,
// and records lock entries as stages finish.
class Executor {
 public:
  explicit Executor(Workspace& ws, int workers = 1);

  // Pure classification; never ingests objects or touches the lock.
  PlanResult plan() const;

  // Executes the closure of `targets` (all stages when empty). Stage
  // events are streamed to `progress` when set.
  RunReport run(const std::set<std::string>& targets = {});

  std::function<void(const std::string& line)> progress;

 private:
  Workspace& ws_;
  int workers_;
};

// Restores workspace data files (stage outputs and leaf path deps) from
// the current lock via the object store. Returns the number of paths
// restored. Throws ObjectMissingError when an object is absent locally.
std::size_t checkout_data(Workspace& ws, CheckoutMode mode = CheckoutMode::kCopy);

}  // namespace dac
