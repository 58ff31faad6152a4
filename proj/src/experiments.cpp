#include "dac/experiments.hpp"

#include <algorithm>
#include <functional>

#include <nlohmann/json.hpp>

#include "dac/blocktext.hpp"
#include "dac/errors.hpp"
#include "dac/fsutil.hpp"
#include "dac/object_id.hpp"
#include "dac/revstore.hpp"
#include "dac/sha256.hpp"

namespace dac {
namespace {

std::string overrides_key_text(
    const std::vector<std::pair<std::string, ParamScalar>>& overrides) {
  std::vector<std::string> lines;
  for (const auto& [key, value] : overrides)
    lines.push_back(key + "=" + canonical_scalar(value));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& line : lines) {
    out += line;
    out += '\n';
  }
  return out;
}

Experiment::Status status_from_string(const std::string& s) {
  if (s == "queued") return Experiment::Status::kQueued;
  if (s == "running") return Experiment::Status::kRunning;
  if (s == "done") return Experiment::Status::kDone;
  if (s == "failed") return Experiment::Status::kFailed;
  throw ParseError("bad experiment status '" + s + "'", 0);
}

Experiment parse_experiment_record(std::string_view text) {
  BlockNode root = parse_block(text);
  const BlockNode* name = root.find("name");
  const BlockNode* base = root.find("base");
  const BlockNode* status = root.find("status");
  const BlockNode* result = root.find("result");
  const BlockNode* overrides = root.find("overrides");
  if (name == nullptr || base == nullptr || status == nullptr ||
      result == nullptr || overrides == nullptr || !overrides->is_map())
    throw ParseError("malformed experiment record", 0);

  Experiment exp;
  exp.name = name->scalar;
  exp.base = ObjectId::from_hex(base->scalar).hex();
  exp.status = status_from_string(status->scalar);
  if (result->scalar != "none")
    exp.result = ObjectId::from_hex(result->scalar).hex();
  if (const BlockNode* error = root.find("error")) exp.error = error->scalar;
  for (const auto& [key, value] : overrides->map) {
    ParamScalar v = value.quoted ? ParamScalar(value.scalar)
                                 : scalar_from_literal(value.scalar);
    exp.overrides.emplace_back(key, std::move(v));
  }
  return exp;
}

std::string emit_experiment_record(const Experiment& exp) {
  BlockNode root = BlockNode::make_map();
  root.add("name", BlockNode::make_scalar(exp.name));
  root.add("base", BlockNode::make_scalar(exp.base));
  root.add("status", BlockNode::make_scalar(to_string(exp.status)));
  root.add("result",
           BlockNode::make_scalar(exp.result ? *exp.result : "none"));
  if (!exp.error.empty())
    root.add("error", BlockNode::make_scalar(exp.error, /*quoted=*/true));
  BlockNode overrides = BlockNode::make_map();
  std::vector<std::pair<std::string, ParamScalar>> sorted = exp.overrides;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [key, value] : sorted) {
    if (const auto* s = std::get_if<std::string>(&value)) {
      overrides.add(key, BlockNode::make_scalar(*s, /*quoted=*/true));
    } else {
      overrides.add(key, BlockNode::make_scalar(canonical_scalar(value)));
    }
  }
  root.add("overrides", std::move(overrides));
  return emit_block(root);
}

}  // namespace

const char* to_string(Experiment::Status s) {
  switch (s) {
    case Experiment::Status::kQueued: return "queued";
    case Experiment::Status::kRunning: return "running";
    case Experiment::Status::kDone: return "done";
    case Experiment::Status::kFailed: return "failed";
  }
  return "?";
}

std::string Experiment::overrides_display() const {
  std::vector<std::string> parts;
  for (const auto& [key, value] : overrides)
    parts.push_back(key + "=" + canonical_scalar(value));
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ",";
    out += parts[i];
  }
  return out;
}

void ExperimentManager::save(const Experiment& exp) const {
  fsutil::write_file_atomic(ws_.expqueue_dir() / exp.name,
                            emit_experiment_record(exp));
}

Experiment ExperimentManager::load(const std::string& name) const {
  fs::path path = ws_.expqueue_dir() / name;
  if (!fs::exists(path)) throw NotFoundError("unknown experiment: '" + name + "'");
  return parse_experiment_record(fsutil::read_file(path));
}

std::vector<Experiment> ExperimentManager::list() const {
  std::vector<Experiment> out;
  if (!fs::exists(ws_.expqueue_dir())) return out;
  for (const auto& entry : fs::directory_iterator(ws_.expqueue_dir()))
    out.push_back(parse_experiment_record(fsutil::read_file(entry.path())));
  std::sort(out.begin(), out.end(),
            [](const Experiment& a, const Experiment& b) { return a.name < b.name; });
  return out;
}

std::vector<std::string> ExperimentManager::queue_experiments(
    const std::vector<std::string>& specs,
    const std::optional<std::string>& name) {
  if (specs.empty()) throw UsageError("no override specs given (use -S)");

  RevStore revs(ws_);
  auto base = revs.head_id();
  if (!base)
    throw DacError("cannot queue experiments: no commits yet (run 'dac commit')");
  if (revs.is_dirty())
    throw DirtyWorkspaceError(
        "cannot queue experiments: tracked metadata files have uncommitted "
        "changes");

  ParamTree params = ws_.load_params();
  std::vector<OverrideSpec> parsed;
  for (const auto& spec : specs) {
    OverrideSpec o = parse_set_override(spec);
    if (!params.has(o.key))
      throw NotFoundError("override key not present in params: '" + o.key + "'");
    parsed.push_back(std::move(o));
  }

  // Cartesian product over the specs, in given order.
  std::vector<std::vector<std::pair<std::string, ParamScalar>>> grid{{}};
  for (const auto& o : parsed) {
    std::vector<std::vector<std::pair<std::string, ParamScalar>>> next;
    for (const auto& combo : grid) {
      for (const auto& value : o.values) {
        auto extended = combo;
        extended.emplace_back(o.key, value);
        next.push_back(std::move(extended));
      }
    }
    grid = std::move(next);
  }

  if (name && grid.size() != 1)
    throw UsageError("--name requires a single grid point, got " +
                     std::to_string(grid.size()));
  if (name) {
    for (char c : *name) {
      if (!((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
            (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.'))
        throw ValidationError("bad experiment name: '" + *name + "'");
    }
    if (name->empty() || name->front() == '.')
      throw ValidationError("bad experiment name: '" + *name + "'");
  }

  fsutil::ensure_dir(ws_.expqueue_dir());
  std::vector<std::string> names;
  for (const auto& combo : grid) {
    Experiment exp;
    exp.base = *base;
    exp.overrides = combo;
    std::string stem =
        name ? *name : "exp-" + sha256_hex(overrides_key_text(combo)).substr(0, 6);
    std::string candidate = stem;
    for (int suffix = 2; fs::exists(ws_.expqueue_dir() / candidate); ++suffix) {
      if (name) throw DacError("experiment already exists: '" + *name + "'");
      candidate = stem + "-" + std::to_string(suffix);
    }
    exp.name = candidate;
    save(exp);
    names.push_back(exp.name);
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<std::pair<Experiment, RunReport>> ExperimentManager::run_queue(
    int workers) {
  std::vector<Experiment> queued;
  for (const auto& exp : list()) {
    if (exp.status == Experiment::Status::kQueued) queued.push_back(exp);
  }
  if (queued.empty()) throw DacError("no queued experiments");

  RevStore revs(ws_);

  // The queue runner owns the workspace for the duration; the exact
  // pre-queue bytes (and HEAD) are restored after every experiment.
  std::map<std::string, std::string> saved;
  for (const auto& file : Workspace::tracked_files())
    saved[file] = fsutil::read_file(ws_.root() / file);
  std::string saved_head = fsutil::read_file(ws_.refs_dir() / "HEAD");

  auto restore_workspace = [&] {
    for (const auto& [file, bytes] : saved)
      fsutil::write_file_atomic(ws_.root() / file, bytes);
    fsutil::write_file_atomic(ws_.refs_dir() / "HEAD", saved_head);
  };

  std::vector<std::pair<Experiment, RunReport>> results;
  for (Experiment exp : queued) {
    exp.status = Experiment::Status::kRunning;
    save(exp);
    if (progress) progress("experiment " + exp.name + ": " + exp.overrides_display());

    RunReport report;
    try {
      revs.checkout_rev(exp.base, /*force=*/true);

      ParamTree params = ws_.load_params();
      for (const auto& [key, value] : exp.overrides)
        params.set_existing(key, value);
      fsutil::write_file_atomic(ws_.params_file(), params.emit());

      Executor executor(ws_, workers);
      executor.progress = progress;
      report = executor.run();

      if (!report.ok()) {
        exp.status = Experiment::Status::kFailed;
        exp.error = report.failures.begin()->first + ": " +
                    report.failures.begin()->second;
      } else {
        std::map<std::string, std::string> tree;
        for (const auto& file : Workspace::tracked_files())
          tree[file] = ws_.store().store_file(ws_.root() / file).hex();
        std::string id =
            revs.commit_detached(tree, exp.base, "experiment " + exp.name);
        revs.create_ref(RefKind::kExperiment, exp.name, id,
                        /*allow_overwrite=*/true);
        exp.status = Experiment::Status::kDone;
        exp.result = id;
      }
    } catch (const std::exception& e) {
      exp.status = Experiment::Status::kFailed;
      exp.error = e.what();
    }

    restore_workspace();
    save(exp);
    results.emplace_back(std::move(exp), std::move(report));
  }
  return results;
}

std::string ExperimentManager::promote(const std::string& exp_name,
                                       const std::string& branch) {
  Experiment exp = load(exp_name);
  if (exp.status != Experiment::Status::kDone || !exp.result)
    throw DacError("experiment '" + exp_name + "' is " + to_string(exp.status) +
                   "; only finished experiments can be promoted");
  RevStore revs(ws_);
  revs.create_ref(RefKind::kBranch, branch, *exp.result);
  revs.checkout_rev(branch);
  return *exp.result;
}

MetricsTable metrics_table(Workspace& ws, const std::vector<std::string>& names) {
  MetricsTable table;
  table.rev_names = names;
  RevStore revs(ws);

  for (std::size_t col = 0; col < names.size(); ++col) {
    LockFile lock;
    if (names[col] == "workspace") {
      lock = ws.load_lock();
    } else {
      lock = parse_lock(revs.read_file_at(names[col], "lock.dac"));
    }
    for (const auto& [stage, sl] : lock.stages) {
      std::string doc_path = metrics_doc_path(stage);
      auto it = sl.outs.find(doc_path);
      if (it == sl.outs.end()) continue;
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(
            ws.store().read_bytes(ObjectId::from_hex(it->second)));
      } catch (const nlohmann::json::parse_error&) {
        continue;
      }
      // Flatten nested objects with dotted row keys.
      std::function<void(const std::string&, const nlohmann::json&)> walk =
          [&](const std::string& prefix, const nlohmann::json& value) {
            if (value.is_object()) {
              for (const auto& [k, v] : value.items()) walk(prefix + "." + k, v);
              return;
            }
            auto& row = table.rows[prefix];
            row.resize(names.size());
            row[col] = value.dump();
          };
      walk(stage, doc);
    }
  }
  for (auto& [_, row] : table.rows) row.resize(names.size());
  return table;
}

std::string format_metrics_table(const MetricsTable& table) {
  std::string out = "metric";
  for (const auto& name : table.rev_names) {
    out += '\t';
    out += name;
  }
  out += '\n';
  for (const auto& [key, cells] : table.rows) {
    out += key;
    for (const auto& cell : cells) {
      out += '\t';
      out += cell ? *cell : "-";
    }
    out += '\n';
  }
  return out;
}

}  // namespace dac
