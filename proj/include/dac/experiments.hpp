#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dac/executor.hpp"
#include "dac/params.hpp"
#include "dac/workspace.hpp"

namespace dac {

// One parameter-override run, recorded as a detached revision off its base
// once executed.
struct Experiment {
  enum class Status { kQueued, kRunning, kDone, kFailed };

  std::string name;  // auto `exp-<6 hex>` or user-given
  std::string base;  // revision id the overrides apply to
  Status status = Status::kQueued;
  std::optional<std::string> result;  // detached revision id when done
  std::vector<std::pair<std::string, ParamScalar>> overrides;
  std::string error;  // failure summary when kFailed

  std::string overrides_display() const;  // "k=v,k2=v2"
};

const char* to_string(Experiment::Status s);

class ExperimentManager {
 public:
  explicit ExperimentManager(Workspace& ws) : ws_(ws) {}

  // Expands override specs into one queued experiment per grid point
  // (Cartesian product across specs). Requires clean committed metadata;
  // every key must exist in params.dac. Returns the new names, sorted.
  std::vector<std::string> queue_experiments(
      const std::vector<std::string>& specs,
      const std::optional<std::string>& name = std::nullopt);

  // Runs all queued experiments sequentially (each internally parallel
  // with `workers`), committing results as detached revisions and
  // restoring the workspace afterwards. A failing experiment is marked
  // failed and the queue continues.
  std::vector<std::pair<Experiment, RunReport>> run_queue(int workers = 1);

  std::vector<Experiment> list() const;
  Experiment load(const std::string& name) const;

  // Turns a finished experiment into a branch: the new branch ref points
  // at the experiment's result revision (whose parent is the base), and
  // the workspace is checked out onto it.
  std::string promote(const std::string& exp_name, const std::string& branch);

  std::function<void(const std::string& line)> progress;

 private:
  void save(const Experiment& exp) const;
  Workspace& ws_;
};

// Metric values across revisions: row key `<stage>.<metric path>`, one
// column per requested revision name. Cells hold canonical JSON scalars;
// absent cells are std::nullopt.
struct MetricsTable {
  std::vector<std::string> rev_names;
  std::map<std::string, std::vector<std::optional<std::string>>> rows;
};

// `names` entries resolve through the revstore; the special name
// "workspace" reads the current lock file instead.
MetricsTable metrics_table(Workspace& ws, const std::vector<std::string>& names);

std::string format_metrics_table(const MetricsTable& table);

}  // namespace dac
