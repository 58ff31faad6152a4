#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dac/errors.hpp"
#include "dac/executor.hpp"
#include "dac/experiments.hpp"
#include "dac/fsutil.hpp"
#include "dac/nodeload.hpp"
#include "dac/remote.hpp"
#include "dac/revstore.hpp"
#include "dac/workspace.hpp"

namespace {

namespace fs = std::filesystem;
using dac::Workspace;

Workspace open_workspace() { return Workspace::discover(fs::current_path()); }

// ---------------------------------------------------------------------------
// Builtin nodes: hermetic stage commands used in tests and demos.
// ---------------------------------------------------------------------------

double param_as_double(const dac::ParamScalar& v, const std::string& key) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return double(*i);
  throw dac::DacError("param '" + key + "' is not numeric");
}

void write_docs(Workspace& ws, const std::string& stage,
                const nlohmann::json& doc) {
  std::string text = doc.dump() + "\n";
  dac::fsutil::write_file_atomic(ws.nodes_dir() / stage / "outs.json", text);
  dac::fsutil::write_file_atomic(ws.nodes_dir() / stage / "metrics.json", text);
}

int builtin_gen_data(const std::string& value, const std::string& param,
                     const std::string& out) {
  std::string text = value;
  if (!param.empty()) {
    Workspace ws = open_workspace();
    text = dac::canonical_scalar(ws.load_params().at(param));
  }
  dac::fsutil::write_file_atomic(out, text + "\n");
  return 0;
}

int builtin_shift_add(const std::string& data, std::optional<double> shift,
                      const std::string& param, const std::string& stage,
                      const std::string& out) {
  Workspace ws = open_workspace();
  double shift_value = 0.0;
  if (shift) {
    shift_value = *shift;
  } else if (!param.empty()) {
    shift_value = param_as_double(ws.load_params().at(param), param);
  } else {
    throw dac::UsageError("shift-add needs --shift or --param");
  }

  std::string text = dac::fsutil::read_file(data);
  char* end = nullptr;
  double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str()) {
    std::cerr << "shift-add: input file '" << data
              << "' does not start with a number\n";
    return 1;
  }
  double result = value + shift_value;
  write_docs(ws, stage, nlohmann::json{{"result", result}});
  if (!out.empty())
    dac::fsutil::write_file_atomic(out, nlohmann::json(result).dump() + "\n");
  return 0;
}

int builtin_consume(const std::string& value_from, const std::string& stage) {
  std::size_t dot = value_from.find('.');
  if (dot == std::string::npos)
    throw dac::UsageError("--value-from wants <stage>.<attr>");
  std::string src = value_from.substr(0, dot);
  std::string attr = value_from.substr(dot + 1);

  Workspace ws = open_workspace();
  nlohmann::json doc;
  for (const char* name : {"outs.json", "metrics.json"}) {
    fs::path path = ws.nodes_dir() / src / name;
    if (!fs::exists(path)) continue;
    doc = nlohmann::json::parse(dac::fsutil::read_file(path));
    if (doc.contains(attr)) break;
  }
  if (!doc.contains(attr)) {
    std::cerr << "consume: no attribute '" << value_from << "'\n";
    return 1;
  }
  write_docs(ws, stage, nlohmann::json{{"value", doc[attr]}});
  return 0;
}

int builtin_sleep(double seconds, const std::string& out) {
  std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  if (!out.empty()) dac::fsutil::write_file_atomic(out, "ok\n");
  return 0;
}

int builtin_fail(const std::string& message) {
  std::cerr << "fail: " << (message.empty() ? "requested failure" : message)
            << "\n";
  return 3;
}

// ---------------------------------------------------------------------------
// Command wiring
// ---------------------------------------------------------------------------

void print_failures(const dac::RunReport& report) {
  for (const auto& [stage, message] : report.failures)
    std::cerr << "error: " << stage << ": " << message << "\n";
}

int cmd_repro(const std::vector<std::string>& targets, int workers) {
  Workspace ws = open_workspace();
  dac::Executor executor(ws, workers);
  executor.progress = [](const std::string& line) {
    std::cout << line << "\n";
  };
  dac::RunReport report =
      executor.run(std::set<std::string>(targets.begin(), targets.end()));
  std::cout << report.summary() << "\n";
  if (!report.ok()) {
    print_failures(report);
    return 1;
  }
  return 0;
}

int cmd_status() {
  Workspace ws = open_workspace();
  dac::PlanResult plan = dac::Executor(ws).plan();
  for (const auto& [stage, st] : plan.stages) {
    std::cout << stage << ": " << dac::to_string(st.state);
    if (!st.reasons.empty()) {
      std::cout << " (";
      for (std::size_t i = 0; i < st.reasons.size(); ++i) {
        if (i) std::cout << "; ";
        std::cout << st.reasons[i];
      }
      std::cout << ")";
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_checkout(const std::string& rev, bool force, bool link) {
  Workspace ws = open_workspace();
  if (!rev.empty()) {
    dac::RevStore revs(ws);
    revs.checkout_rev(rev, force);
    std::cout << "checked out " << revs.resolve("HEAD").substr(0, 12) << "\n";
    return 0;
  }
  std::size_t restored = dac::checkout_data(
      ws, link ? dac::CheckoutMode::kLink : dac::CheckoutMode::kCopy);
  std::cout << "restored " << restored << " path" << (restored == 1 ? "" : "s")
            << "\n";
  return 0;
}

int cmd_get(const std::string& stage, const std::string& attr,
            const std::string& rev, const std::string& remote) {
  Workspace ws = open_workspace();
  std::optional<fs::path> remote_path;
  if (!remote.empty()) remote_path = fs::path(remote);
  dac::NodeHandle handle = dac::NodeHandle::from_rev(
      ws, stage, rev.empty() ? "HEAD" : rev, remote_path);
  dac::AttrValue value = handle.get_attr(attr);
  if (value.kind == dac::AttrValue::Kind::kPath)
    std::cout << value.path.string() << "\n";
  else
    std::cout << value.value.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dac: content-addressed data pipelines with experiments"};
  app.require_subcommand(1);
  app.get_formatter()->column_width(30);

  app.add_flag_callback(
      "--deterministic-time",
      [] { setenv("DAC_DETERMINISTIC_TIME", "1", 1); },
      "use a per-project counter instead of wall-clock timestamps");

  int rc = 0;
  auto run = [&rc](auto&& fn) {
    return [&rc, fn = std::forward<decltype(fn)>(fn)]() { rc = fn(); };
  };

  // --- init ---------------------------------------------------------------
  auto* init = app.add_subcommand("init", "initialize a dac project here");
  init->callback(run([] {
    Workspace ws = Workspace::init(fs::current_path());
    std::cout << "initialized dac project in " << ws.root().string() << "\n";
    return 0;
  }));

  // --- repro / status / dag ------------------------------------------------
  auto* repro = app.add_subcommand("repro", "run stale pipeline stages");
  auto repro_targets = std::make_shared<std::vector<std::string>>();
  auto repro_workers = std::make_shared<int>(1);
  repro->add_option("targets", *repro_targets, "stages to bring up to date");
  repro->add_option("--workers,-j", *repro_workers, "parallel stages")
      ->check(CLI::PositiveNumber);
  repro->callback(
      run([repro_targets, repro_workers] { return cmd_repro(*repro_targets, *repro_workers); }));

  auto* status = app.add_subcommand("status", "per-stage freshness report");
  status->callback(run([] { return cmd_status(); }));

  auto* dag = app.add_subcommand("dag", "print the pipeline DAG as DOT");
  dag->callback(run([] {
    Workspace ws = open_workspace();
    std::cout << dac::to_dot(dac::build_graph(ws.load_pipeline()));
    return 0;
  }));

  // --- commit / log / checkout ---------------------------------------------
  auto* commit = app.add_subcommand("commit", "snapshot the metadata files");
  auto commit_message = std::make_shared<std::string>();
  commit->add_option("--message,-m", *commit_message, "commit message")
      ->required();
  commit->callback(run([commit_message] {
    Workspace ws = open_workspace();
    bool noop = false;
    std::string id = dac::RevStore(ws).commit(*commit_message, &noop);
    if (noop) std::cerr << "warning: no changes to commit\n";
    std::cout << id << "\n";
    return 0;
  }));

  auto* log = app.add_subcommand("log", "revision history from HEAD");
  log->callback(run([] {
    Workspace ws = open_workspace();
    for (const auto& rev : dac::RevStore(ws).log()) {
      std::cout << rev.id << " " << rev.timestamp << " " << rev.message << "\n";
    }
    return 0;
  }));

  auto* checkout = app.add_subcommand(
      "checkout", "restore data files from the lock, or metadata at a revision");
  auto checkout_rev = std::make_shared<std::string>();
  auto checkout_force = std::make_shared<bool>(false);
  auto checkout_link = std::make_shared<bool>(false);
  checkout->add_option("rev", *checkout_rev,
                       "revision/ref to restore metadata from");
  checkout->add_flag("--force,-f", *checkout_force,
                     "discard uncommitted metadata changes");
  checkout->add_flag("--link", *checkout_link,
                     "hard-link data files from the cache instead of copying");
  checkout->callback(run([checkout_rev, checkout_force, checkout_link] {
    return cmd_checkout(*checkout_rev, *checkout_force, *checkout_link);
  }));

  auto* tag = app.add_subcommand("tag", "name a revision");
  auto tag_name = std::make_shared<std::string>();
  auto tag_rev = std::make_shared<std::string>();
  tag->add_option("name", *tag_name)->required();
  tag->add_option("rev", *tag_rev, "revision (default HEAD)");
  tag->callback(run([tag_name, tag_rev] {
    Workspace ws = open_workspace();
    dac::RevStore revs(ws);
    std::string id = revs.resolve(tag_rev->empty() ? "HEAD" : *tag_rev);
    revs.create_ref(dac::RefKind::kTag, *tag_name, id);
    std::cout << *tag_name << " -> " << id.substr(0, 12) << "\n";
    return 0;
  }));

  // --- experiments -----------------------------------------------------------
  auto* exp = app.add_subcommand("exp", "parameter-override experiments");
  exp->require_subcommand(1);

  auto* exp_queue = exp->add_subcommand("queue", "queue experiments from -S specs");
  auto exp_specs = std::make_shared<std::vector<std::string>>();
  auto exp_name = std::make_shared<std::string>();
  exp_queue->add_option("-S,--set", *exp_specs,
                        "override spec key=v1,v2,... or key=range(a,b[,c])")
      ->required();
  exp_queue->add_option("--name", *exp_name, "name (single grid point only)");
  exp_queue->callback(run([exp_specs, exp_name] {
    Workspace ws = open_workspace();
    dac::ExperimentManager mgr(ws);
    std::optional<std::string> name;
    if (!exp_name->empty()) name = *exp_name;
    auto names = mgr.queue_experiments(*exp_specs, name);
    std::cout << "queued " << names.size() << " experiment"
              << (names.size() == 1 ? "" : "s") << "\n";
    for (const auto& n : names) std::cout << n << "\n";
    return 0;
  }));

  auto* exp_run = exp->add_subcommand("run", "run all queued experiments");
  auto exp_workers = std::make_shared<int>(1);
  exp_run->add_option("--workers,-j", *exp_workers, "parallel stages per experiment")
      ->check(CLI::PositiveNumber);
  exp_run->callback(run([exp_workers] {
    Workspace ws = open_workspace();
    dac::ExperimentManager mgr(ws);
    bool any_failed = false;
    for (const auto& [exp_rec, report] : mgr.run_queue(*exp_workers)) {
      std::cout << exp_rec.name << ": " << report.summary() << " -> "
                << dac::to_string(exp_rec.status) << "\n";
      if (exp_rec.status != dac::Experiment::Status::kDone) {
        any_failed = true;
        std::cerr << "error: " << exp_rec.name << ": " << exp_rec.error << "\n";
      }
    }
    return any_failed ? 1 : 0;
  }));

  auto* exp_list = exp->add_subcommand("list", "list experiments");
  exp_list->callback(run([] {
    Workspace ws = open_workspace();
    for (const auto& e : dac::ExperimentManager(ws).list()) {
      std::cout << e.name << "\t" << dac::to_string(e.status) << "\t"
                << (e.result ? *e.result : "-") << "\t" << e.overrides_display()
                << "\n";
    }
    return 0;
  }));

  auto* exp_promote =
      exp->add_subcommand("promote", "turn an experiment into a branch");
  auto promote_name = std::make_shared<std::string>();
  auto promote_branch = std::make_shared<std::string>();
  exp_promote->add_option("experiment", *promote_name)->required();
  exp_promote->add_option("branch", *promote_branch)->required();
  exp_promote->callback(run([promote_name, promote_branch] {
    Workspace ws = open_workspace();
    std::string id =
        dac::ExperimentManager(ws).promote(*promote_name, *promote_branch);
    std::cout << "promoted " << *promote_name << " to branch '" << *promote_branch
              << "' at " << id.substr(0, 12) << "\n";
    return 0;
  }));

  // --- metrics ---------------------------------------------------------------
  auto* metrics = app.add_subcommand("metrics", "show or compare metrics");
  metrics->require_subcommand(1);

  auto* metrics_show = metrics->add_subcommand("show", "metrics of one revision");
  auto show_rev = std::make_shared<std::string>();
  metrics_show->add_option("rev", *show_rev, "revision (default: workspace)");
  metrics_show->callback(run([show_rev] {
    Workspace ws = open_workspace();
    std::vector<std::string> names{show_rev->empty() ? "workspace" : *show_rev};
    std::cout << dac::format_metrics_table(dac::metrics_table(ws, names));
    return 0;
  }));

  auto* metrics_diff =
      metrics->add_subcommand("diff", "metrics across revisions");
  auto diff_revs = std::make_shared<std::vector<std::string>>();
  metrics_diff->add_option("revs", *diff_revs, "revisions to compare")
      ->expected(-1)
      ->required();
  metrics_diff->callback(run([diff_revs] {
    Workspace ws = open_workspace();
    std::cout << dac::format_metrics_table(dac::metrics_table(ws, *diff_revs));
    return 0;
  }));

  // --- push / pull -----------------------------------------------------------
  auto* push = app.add_subcommand("push", "upload objects and metadata to a remote");
  auto push_remote = std::make_shared<std::string>();
  push->add_option("--remote,-r", *push_remote, "remote directory")->required();
  push->callback(run([push_remote] {
    Workspace ws = open_workspace();
    std::size_t n = dac::push(ws, *push_remote);
    std::cout << "pushed " << n << " object" << (n == 1 ? "" : "s") << "\n";
    return 0;
  }));

  auto* pull = app.add_subcommand("pull", "fetch a revision's objects from a remote");
  auto pull_remote = std::make_shared<std::string>();
  auto pull_rev = std::make_shared<std::string>();
  pull->add_option("--remote,-r", *pull_remote, "remote directory")->required();
  pull->add_option("--rev", *pull_rev, "revision (default HEAD)");
  pull->callback(run([pull_remote, pull_rev] {
    Workspace ws = open_workspace();
    std::size_t n = dac::pull(ws, *pull_remote, *pull_rev);
    std::cout << "pulled " << n << " object" << (n == 1 ? "" : "s") << "\n";
    return 0;
  }));

  // --- get -------------------------------------------------------------------
  auto* get = app.add_subcommand("get", "read a stage attribute at a revision");
  auto get_stage = std::make_shared<std::string>();
  auto get_attr = std::make_shared<std::string>();
  auto get_rev = std::make_shared<std::string>();
  auto get_remote = std::make_shared<std::string>();
  get->add_option("stage", *get_stage)->required();
  get->add_option("attr", *get_attr)->required();
  get->add_option("--rev", *get_rev, "revision (default HEAD)");
  get->add_option("--remote", *get_remote, "exported project directory");
  get->callback(run([get_stage, get_attr, get_rev, get_remote] {
    return cmd_get(*get_stage, *get_attr, *get_rev, *get_remote);
  }));

  // --- builtin nodes -----------------------------------------------------------
  auto* builtin = app.add_subcommand("builtin", "hermetic demo/test nodes");
  builtin->require_subcommand(1);

  auto* gen = builtin->add_subcommand("gen-data", "write a scalar data file");
  auto gen_value = std::make_shared<std::string>();
  auto gen_param = std::make_shared<std::string>();
  auto gen_out = std::make_shared<std::string>();
  gen->add_option("--value", *gen_value, "literal value");
  gen->add_option("--param", *gen_param, "dotted params key to read instead");
  gen->add_option("--out", *gen_out, "output file")->required();
  gen->callback(run([gen_value, gen_param, gen_out] {
    return builtin_gen_data(*gen_value, *gen_param, *gen_out);
  }));

  auto* shift = builtin->add_subcommand(
      "shift-add", "read a number, add a shift, record result attribute");
  auto shift_data = std::make_shared<std::string>();
  auto shift_value = std::make_shared<double>();
  auto shift_param = std::make_shared<std::string>();
  auto shift_stage = std::make_shared<std::string>();
  auto shift_out = std::make_shared<std::string>();
  auto* shift_value_opt = shift->add_option("--shift", *shift_value, "literal shift");
  shift->add_option("--param", *shift_param, "dotted params key for the shift");
  shift->add_option("--data", *shift_data, "input file")->required();
  shift->add_option("--stage", *shift_stage, "owning stage name")->required();
  shift->add_option("--out", *shift_out, "also write the result to this file");
  shift->callback(run([shift_data, shift_value, shift_param, shift_stage,
                       shift_out, shift_value_opt] {
    std::optional<double> literal;
    if (shift_value_opt->count() > 0) literal = *shift_value;
    return builtin_shift_add(*shift_data, literal, *shift_param, *shift_stage,
                             *shift_out);
  }));

  auto* consume = builtin->add_subcommand(
      "consume", "read an upstream managed attribute, record it as value");
  auto consume_from = std::make_shared<std::string>();
  auto consume_stage = std::make_shared<std::string>();
  consume->add_option("--value-from", *consume_from, "<stage>.<attr>")->required();
  consume->add_option("--stage", *consume_stage, "owning stage name")->required();
  consume->callback(run([consume_from, consume_stage] {
    return builtin_consume(*consume_from, *consume_stage);
  }));

  auto* sleep_cmd = builtin->add_subcommand("sleep", "sleep, optionally touch a file");
  auto sleep_seconds = std::make_shared<double>(0.0);
  auto sleep_out = std::make_shared<std::string>();
  sleep_cmd->add_option("--seconds", *sleep_seconds, "duration")->required();
  sleep_cmd->add_option("--out", *sleep_out, "marker file to write");
  sleep_cmd->callback(run([sleep_seconds, sleep_out] {
    return builtin_sleep(*sleep_seconds, *sleep_out);
  }));

  auto* fail = builtin->add_subcommand("fail", "exit non-zero");
  auto fail_message = std::make_shared<std::string>();
  fail->add_option("--message", *fail_message);
  fail->callback(run([fail_message] { return builtin_fail(*fail_message); }));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const dac::DacError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
