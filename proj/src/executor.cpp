#include "dac/executor.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "dac/errors.hpp"
#include "dac/fsutil.hpp"
#include "dac/sha256.hpp"
#include "dac/subprocess.hpp"

namespace dac {
namespace {

using Clock = std::chrono::steady_clock;
using OutsMap = std::map<std::string, std::string>;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string strip_tree_marker(std::string_view recorded) {
  if (is_tree_path(recorded)) recorded.remove_suffix(1);
  return std::string(recorded);
}

// Resolved inputs of one stage: everything the fingerprint covers plus the
// param pseudo-deps recorded in the lock.
struct Resolved {
  std::map<std::string, ParamScalar> param_values;
  OutsMap dep_hashes;  // path and attr: entries
  OutsMap lock_deps;   // dep_hashes plus param: entries
  std::string fingerprint_hex;
};

struct StageOutcome {
  enum class Kind { kSkipped, kRestored, kExecuted, kFailed };
  Kind kind = Kind::kFailed;
  std::string message;
  StageLock entry;  // restored/executed
};

// Shared stage-input resolution used by both plan() and run().
class Engine {
 public:
  Engine(Workspace& ws)
      : ws_(ws),
        pipeline_(ws.load_pipeline()),
        params_(ws.load_params()),
        lock_(ws.load_lock()),
        graph_(build_graph(pipeline_)) {
    for (const auto& [name, s] : pipeline_.stages) {
      for (const auto& path : declared_output_paths(s)) producer_of_[path] = name;
    }
  }

  const PipelineDef& pipeline() const { return pipeline_; }
  const Graph& graph() const { return graph_; }
  const LockFile& lock() const { return lock_; }
  Workspace& ws() { return ws_; }

  using OutsGetter = std::function<const OutsMap*(const std::string& stage)>;

  Resolved resolve(const StageDef& s, const OutsGetter& outs_of,
                   bool ingest) const {
    Resolved r;
    for (const auto& key : s.params) {
      try {
        r.param_values.emplace(key, params_.at(key));
      } catch (const NotFoundError&) {
        throw DacError("stage '" + s.name + "': param key missing: '" + key +
                       "'");
      }
    }

    for (const auto& p : s.deps_path) {
      auto prod = producer_of_.find(p);
      if (prod != producer_of_.end()) {
        const OutsMap* outs = outs_of(prod->second);
        const std::string* hex = nullptr;
        std::string key = p;
        if (outs != nullptr) {
          if (auto it = outs->find(p); it != outs->end()) {
            hex = &it->second;
          } else if (auto jt = outs->find(p + "/"); jt != outs->end()) {
            hex = &jt->second;
            key = p + "/";
          }
        }
        if (hex == nullptr)
          throw DacError("stage '" + s.name + "': upstream stage '" +
                         prod->second + "' has no recorded output '" + p + "'");
        r.dep_hashes.emplace(std::move(key), *hex);
        continue;
      }
      fs::path full = ws_.root() / p;
      if (!fs::exists(full))
        throw DacError("stage '" + s.name + "': missing dependency: '" + p + "'");
      if (fs::is_directory(full)) {
        ObjectId oid = ingest ? ws_.store().store_tree(full)
                              : ws_.store().hash_tree(full);
        r.dep_hashes.emplace(p + "/", oid.hex());
      } else {
        ObjectId oid = ingest ? ws_.store().store_file(full)
                              : ws_.store().hash_file(full);
        r.dep_hashes.emplace(p, oid.hex());
      }
    }

    for (const auto& ref : s.deps_attr) {
      std::string src = ref.substr(0, ref.find('.'));
      std::string attr = ref.substr(ref.find('.') + 1);
      const StageDef& src_def = pipeline_.stage(src);
      std::string doc_path = src_def.has_out_attr(attr) ? outs_doc_path(src)
                                                        : metrics_doc_path(src);
      const OutsMap* outs = outs_of(src);
      const std::string* hex =
          outs != nullptr && outs->count(doc_path) ? &outs->at(doc_path) : nullptr;
      if (hex == nullptr)
        throw DacError("stage '" + s.name + "': upstream stage '" + src +
                       "' has no recorded attribute document");
      nlohmann::json doc = read_doc(ObjectId::from_hex(*hex), doc_path);
      if (!doc.contains(attr))
        throw DacError("stage '" + s.name + "': attribute '" + attr +
                       "' not present in outputs of stage '" + src + "'");
      r.dep_hashes.emplace("attr:" + ref, sha256_hex(doc[attr].dump()));
    }

    r.lock_deps = r.dep_hashes;
    for (const auto& [key, value] : r.param_values)
      r.lock_deps.emplace("param:" + key, sha256_hex(canonical_scalar(value)));
    r.fingerprint_hex = fingerprint(s, r.param_values, r.dep_hashes).hex();
    return r;
  }

  // True when every locked output is recoverable. With heal set, workspace
  // content matching a missing cache object is re-ingested.
  bool outputs_restorable(const OutsMap& outs, bool heal,
                          std::string* missing = nullptr) {
    for (const auto& [key, hex] : outs) {
      ObjectId oid = ObjectId::from_hex(hex);
      if (ws_.store().has(oid)) continue;
      fs::path full = ws_.root() / strip_tree_marker(key);
      bool matches = false;
      if (fs::exists(full)) {
        if (is_tree_path(key)) {
          matches = fs::is_directory(full) && ws_.store().hash_tree(full) == oid;
          if (matches && heal) ws_.store().store_tree(full);
        } else {
          matches = fs::is_regular_file(full) && ws_.store().hash_file(full) == oid;
          if (matches && heal) ws_.store().store_file(full);
        }
      }
      if (!matches) {
        if (missing != nullptr) *missing = key;
        return false;
      }
    }
    return true;
  }

  // Document bytes by object id, falling back to a hash-verified workspace
  // copy when the cache was cleared.
  nlohmann::json read_doc(const ObjectId& oid, const std::string& path) const {
    std::string bytes;
    if (ws_.store().has(oid)) {
      bytes = ws_.store().read_bytes(oid);
    } else {
      fs::path full = ws_.root() / path;
      if (!fs::exists(full) || ws_.store().hash_file(full) != oid)
        throw ObjectMissingError(oid.hex());
      bytes = fsutil::read_file(full);
    }
    try {
      return nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
      throw DacError("malformed attribute document '" + path + "': " + e.what());
    }
  }

  const std::map<std::string, std::string>& producer_of() const {
    return producer_of_;
  }

 private:
  Workspace& ws_;
  PipelineDef pipeline_;
  ParamTree params_;
  LockFile lock_;
  Graph graph_;
  std::map<std::string, std::string> producer_of_;  // path -> stage
};

std::string describe_dep(const std::string& key) {
  if (is_param_dep(key))
    return "param " + key.substr(kParamDepPrefix.size());
  if (is_attr_dep(key))
    return "attribute dependency " + key.substr(kAttrDepPrefix.size());
  return "dependency " + strip_tree_marker(key);
}

std::vector<std::string> diff_reasons(const OutsMap& locked, const OutsMap& current) {
  std::vector<std::string> reasons;
  for (const auto& [key, hex] : locked) {
    auto it = current.find(key);
    if (it == current.end())
      reasons.push_back(describe_dep(key) + " removed");
    else if (it->second != hex)
      reasons.push_back(describe_dep(key) + " changed");
  }
  for (const auto& [key, _] : current) {
    if (locked.find(key) == locked.end())
      reasons.push_back(describe_dep(key) + " added");
  }
  if (reasons.empty())
    reasons.push_back("command or output declarations changed");
  return reasons;
}

}  // namespace

const char* to_string(StageState s) {
  switch (s) {
    case StageState::kFresh: return "fresh";
    case StageState::kStale: return "stale";
    case StageState::kNeverRun: return "never-run";
  }
  return "?";
}

std::set<std::string> PlanResult::stale_set() const {
  std::set<std::string> out;
  for (const auto& [name, st] : stages) {
    if (st.state != StageState::kFresh) out.insert(name);
  }
  return out;
}

std::size_t RunReport::executed_count(std::string_view stage) const {
  return std::count(executed.begin(), executed.end(), stage);
}

std::string RunReport::summary() const {
  std::string s = std::to_string(executed.size()) + " executed, " +
                  std::to_string(restored.size()) + " restored, " +
                  std::to_string(skipped.size()) + " skipped";
  if (!failures.empty()) s += ", " + std::to_string(failures.size()) + " failed";
  return s;
}

Executor::Executor(Workspace& ws, int workers) : ws_(ws), workers_(workers) {
  if (workers_ < 1) throw UsageError("workers must be >= 1");
}

PlanResult Executor::plan() const {
  Engine engine(ws_);
  PlanResult out;

  Engine::OutsGetter lock_outs = [&](const std::string& stage) -> const OutsMap* {
    const StageLock* sl = engine.lock().find(stage);
    return sl == nullptr ? nullptr : &sl->outs;
  };

  for (const auto& name : topo_sort(engine.graph())) {
    const StageDef& s = engine.pipeline().stage(name);
    StageStatus st;

    std::vector<std::string> upstream;
    for (const auto& p : engine.graph().parents(name)) {
      const StageStatus& ps = out.stages.at(p);
      if (ps.state == StageState::kNeverRun)
        upstream.push_back("upstream stage '" + p + "' has never run");
      else if (ps.state == StageState::kStale)
        upstream.push_back("upstream stage '" + p + "' is stale");
    }
    if (!upstream.empty()) {
      st.state = StageState::kStale;
      st.reasons = std::move(upstream);
      out.stages.emplace(name, std::move(st));
      continue;
    }

    const StageLock* locked = engine.lock().find(name);
    if (locked == nullptr) {
      st.state = StageState::kNeverRun;
      st.reasons = {"never run"};
      out.stages.emplace(name, std::move(st));
      continue;
    }

    Resolved r = engine.resolve(s, lock_outs, /*ingest=*/false);
    if (r.fingerprint_hex != locked->fingerprint) {
      st.state = StageState::kStale;
      st.reasons = diff_reasons(locked->deps, r.lock_deps);
    } else if (std::string missing;
               !engine.outputs_restorable(locked->outs, /*heal=*/false, &missing)) {
      st.state = StageState::kStale;
      st.reasons = {"output missing: " + strip_tree_marker(missing)};
    } else {
      st.state = StageState::kFresh;
    }
    out.stages.emplace(name, std::move(st));
  }
  return out;
}

RunReport Executor::run(const std::set<std::string>& targets) {
  Engine engine(ws_);
  const Graph& graph = engine.graph();
  auto t0 = Clock::now();

  for (const auto& t : targets) {
    if (!graph.has_node(t)) throw NotFoundError("unknown stage: '" + t + "'");
  }
  std::set<std::string> closure =
      targets.empty()
          ? std::set<std::string>(graph.nodes().begin(), graph.nodes().end())
          : graph.ancestor_closure(targets);

  struct StageRuntime {
    const StageDef* def = nullptr;
    StageLock original;  // lock entry before this run (empty fingerprint if none)
    bool has_original = false;
    std::size_t pending = 0;
    bool settled = false;
    bool ok = false;
    OutsMap outs;
  };
  std::map<std::string, StageRuntime> runtime;
  for (const auto& name : closure) {
    StageRuntime rt;
    rt.def = &engine.pipeline().stage(name);
    if (const StageLock* sl = engine.lock().find(name)) {
      rt.original = *sl;
      rt.has_original = true;
    }
    for (const auto& p : graph.parents(name)) rt.pending += closure.count(p);
    runtime.emplace(name, std::move(rt));
  }

  Engine::OutsGetter settled_outs = [&](const std::string& stage) -> const OutsMap* {
    auto it = runtime.find(stage);
    if (it == runtime.end() || !it->second.settled || !it->second.ok)
      return nullptr;
    return &it->second.outs;
  };

  LockFile merged = engine.lock();
  RunReport report;

  std::mutex m;
  std::condition_variable cv;
  std::set<std::string> ready;
  std::size_t unsettled = closure.size();
  std::vector<std::pair<std::size_t, std::string>> executed_seq, restored_seq;
  std::size_t dispatch_seq = 0;

  for (const auto& name : closure) {
    if (runtime.at(name).pending == 0) ready.insert(name);
  }

  auto run_stage = [&](const std::string& name) -> StageOutcome {
    StageRuntime& rt = runtime.at(name);
    const StageDef& s = *rt.def;
    StageOutcome oc;
    try {
      Resolved r = engine.resolve(s, settled_outs, /*ingest=*/true);

      if (rt.has_original && rt.original.fingerprint == r.fingerprint_hex &&
          engine.outputs_restorable(rt.original.outs, /*heal=*/true)) {
        oc.kind = StageOutcome::Kind::kSkipped;
        return oc;
      }

      fs::path cache_entry = ws_.runcache_dir() / r.fingerprint_hex;
      if (fs::exists(cache_entry)) {
        OutsMap outs = parse_outs_entry(fsutil::read_file(cache_entry));
        bool complete = true;
        for (const auto& [key, hex] : outs) {
          if (!ws_.store().has(ObjectId::from_hex(hex))) {
            complete = false;
            break;
          }
        }
        if (complete) {
          for (const auto& [key, hex] : outs) {
            ObjectId oid = ObjectId::from_hex(hex);
            fs::path dest = ws_.root() / strip_tree_marker(key);
            if (is_tree_path(key)) {
              std::error_code ec;
              fs::remove_all(dest, ec);
              ws_.store().checkout_tree(oid, dest);
            } else {
              ws_.store().checkout(oid, dest);
            }
          }
          oc.kind = StageOutcome::Kind::kRestored;
          oc.entry = StageLock{r.fingerprint_hex, r.lock_deps, outs};
          return oc;
        }
      }

      // Materialize dependency paths that fresh upstream stages did not
      // leave in the workspace.
      for (const auto& p : s.deps_path) {
        fs::path full = ws_.root() / p;
        if (fs::exists(full)) continue;
        auto prod = engine.producer_of().find(p);
        if (prod == engine.producer_of().end()) continue;
        const OutsMap* outs = settled_outs(prod->second);
        if (outs == nullptr) continue;
        if (auto it = outs->find(p); it != outs->end())
          ws_.store().checkout(ObjectId::from_hex(it->second), full);
        else if (auto jt = outs->find(p + "/"); jt != outs->end())
          ws_.store().checkout_tree(ObjectId::from_hex(jt->second), full);
      }

      // Clear declared outputs so stale content never survives a re-run.
      std::error_code ec;
      for (const auto& p : s.outs_path) fs::remove_all(ws_.root() / p, ec);
      for (const auto& p : s.plots) fs::remove_all(ws_.root() / p, ec);
      fs::remove_all(ws_.nodes_dir() / s.name, ec);

      int exit_code = run_shell_command(s.cmd, ws_.root());
      if (exit_code != 0) {
        oc.kind = StageOutcome::Kind::kFailed;
        oc.message = "stage '" + s.name + "': command failed (exit " +
                     std::to_string(exit_code) + ")";
        return oc;
      }

      OutsMap outs;
      auto collect = [&](const std::string& p) -> bool {
        fs::path full = ws_.root() / p;
        if (!fs::exists(full)) {
          oc.kind = StageOutcome::Kind::kFailed;
          oc.message =
              "stage '" + s.name + "' did not produce declared output: '" + p + "'";
          return false;
        }
        if (fs::is_directory(full))
          outs.emplace(p + "/", ws_.store().store_tree(full).hex());
        else
          outs.emplace(p, ws_.store().store_file(full).hex());
        return true;
      };
      for (const auto& p : s.outs_path)
        if (!collect(p)) return oc;
      for (const auto& p : s.plots)
        if (!collect(p)) return oc;
      if (!s.outs_attr.empty() && !collect(outs_doc_path(s.name))) {
        oc.message = "stage '" + s.name +
                     "' did not produce its outputs document (declared outs_attr)";
        return oc;
      }
      if (!s.metrics.empty() && !collect(metrics_doc_path(s.name))) {
        oc.message = "stage '" + s.name +
                     "' did not produce its metrics document (declared metrics)";
        return oc;
      }

      fsutil::write_file_atomic(cache_entry, emit_outs_entry(outs));
      oc.kind = StageOutcome::Kind::kExecuted;
      oc.entry = StageLock{r.fingerprint_hex, r.lock_deps, std::move(outs)};
      return oc;
    } catch (const std::exception& e) {
      oc.kind = StageOutcome::Kind::kFailed;
      oc.message = e.what();
      return oc;
    }
  };

  // Marks every not-yet-settled descendant of a failed stage as blocked.
  std::function<void(const std::string&, const std::string&)> block_descendants =
      [&](const std::string& name, const std::string& culprit) {
        for (const auto& c : graph.children(name)) {
          if (closure.count(c) == 0) continue;
          StageRuntime& crt = runtime.at(c);
          if (crt.settled) continue;
          crt.settled = true;
          crt.ok = false;
          --unsettled;
          ready.erase(c);
          report.failures.emplace(
              c, "not run: upstream stage '" + culprit + "' failed");
          if (progress) progress("[blocked] " + c);
          block_descendants(c, culprit);
        }
      };

  auto apply_completion = [&](const std::string& name, StageOutcome&& oc,
                              std::size_t seq, double start_rel) {
    StageRuntime& rt = runtime.at(name);
    rt.settled = true;
    --unsettled;
    double done_rel = seconds_since(t0);

    switch (oc.kind) {
      case StageOutcome::Kind::kSkipped:
        rt.ok = true;
        rt.outs = rt.original.outs;
        report.skipped.push_back(name);
        if (progress) progress("[skip] " + name);
        break;
      case StageOutcome::Kind::kRestored:
      case StageOutcome::Kind::kExecuted: {
        rt.ok = true;
        rt.outs = oc.entry.outs;
        merged.stages[name] = std::move(oc.entry);
        ws_.save_lock(merged);
        bool executed = oc.kind == StageOutcome::Kind::kExecuted;
        (executed ? executed_seq : restored_seq).emplace_back(seq, name);
        report.wall_seconds[name] = done_rel - start_rel;
        report.spans[name] = {start_rel, done_rel};
        if (progress)
          progress(std::string(executed ? "[exec] " : "[restore] ") + name);
        break;
      }
      case StageOutcome::Kind::kFailed:
        rt.ok = false;
        report.failures[name] = oc.message;
        if (progress) progress("[fail] " + name + ": " + oc.message);
        block_descendants(name, name);
        break;
    }

    if (rt.ok) {
      for (const auto& c : graph.children(name)) {
        if (closure.count(c) == 0) continue;
        StageRuntime& crt = runtime.at(c);
        if (!crt.settled && --crt.pending == 0) ready.insert(c);
      }
    }
  };

  auto worker_fn = [&] {
    std::unique_lock lk(m);
    for (;;) {
      cv.wait(lk, [&] { return unsettled == 0 || !ready.empty(); });
      if (ready.empty()) {
        if (unsettled == 0) return;
        continue;
      }
      std::string name = *ready.begin();
      ready.erase(ready.begin());
      std::size_t seq = dispatch_seq++;
      double start_rel = seconds_since(t0);
      lk.unlock();
      StageOutcome oc = run_stage(name);
      lk.lock();
      apply_completion(name, std::move(oc), seq, start_rel);
      cv.notify_all();
    }
  };

  std::size_t n_workers =
      std::max<std::size_t>(1, std::min<std::size_t>(workers_, closure.size()));
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker_fn);
  for (auto& t : pool) t.join();

  auto by_seq = [](auto& v) {
    std::sort(v.begin(), v.end());
  };
  by_seq(executed_seq);
  by_seq(restored_seq);
  for (auto& [_, name] : executed_seq) report.executed.push_back(name);
  for (auto& [_, name] : restored_seq) report.restored.push_back(name);
  std::sort(report.skipped.begin(), report.skipped.end());
  report.total_seconds = seconds_since(t0);
  return report;
}

std::size_t checkout_data(Workspace& ws, CheckoutMode mode) {
  LockFile lock = ws.load_lock();
  PipelineDef pipeline = ws.load_pipeline();

  std::set<std::string> produced;
  for (const auto& [name, s] : pipeline.stages) {
    for (const auto& p : declared_output_paths(s)) produced.insert(p);
  }

  std::map<std::string, std::string> to_restore;  // recorded key -> hex
  for (const auto& [name, sl] : lock.stages) {
    for (const auto& [key, hex] : sl.outs) to_restore[key] = hex;
    for (const auto& [key, hex] : sl.deps) {
      if (!is_path_dep(key)) continue;
      if (produced.count(strip_tree_marker(key))) continue;
      to_restore[key] = hex;
    }
  }

  std::size_t restored = 0;
  for (const auto& [key, hex] : to_restore) {
    ObjectId oid = ObjectId::from_hex(hex);
    fs::path dest = ws.root() / strip_tree_marker(key);
    if (is_tree_path(key)) {
      if (fs::is_directory(dest) && ws.store().hash_tree(dest) == oid) continue;
      std::error_code ec;
      fs::remove_all(dest, ec);
      ws.store().checkout_tree(oid, dest, mode);
      ++restored;
    } else {
      if (fs::is_regular_file(dest) && ws.store().hash_file(dest) == oid) continue;
      ws.store().checkout(oid, dest, mode);
      ++restored;
    }
  }
  return restored;
}

}  // namespace dac
