#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "dac/errors.hpp"
#include "dac/executor.hpp"
#include "fixtures.hpp"

using namespace dac;
using testutil::TempDir;

namespace {

std::set<std::string> as_set(const std::vector<std::string>& v) {
  return std::set<std::string>(v.begin(), v.end());
}

std::map<std::string, std::string> workspace_hashes(Workspace& ws) {
  std::map<std::string, std::string> out;
  for (const char* f : {"d1.txt", "d2.txt", "d3.txt", "d4.txt", "d5.txt"})
    out[f] = ws.store().hash_file(ws.root() / f).hex();
  return out;
}

}  // namespace

TEST_CASE("fresh project: everything is stale, run executes in topo order") {
  TempDir tmp;
  Workspace ws = testutil::five_stage_project(tmp.path());
  Executor ex(ws);

  PlanResult plan = ex.plan();
  CHECK(plan.stale_set() == std::set<std::string>{"n1", "n2", "n3", "n4", "n5"});
  CHECK(plan.stages.at("n1").state == StageState::kNeverRun);

  RunReport report = ex.run();
  REQUIRE(report.ok());
  CHECK(report.executed ==
        std::vector<std::string>{"n1", "n2", "n4", "n5", "n3"});
  CHECK(report.skipped.empty());
  CHECK(report.restored.empty());

  // 10 ->(+1) 11 on n2; leaf 100 ->(+2) 102 -> (+1) 103 -> (+1) 104 on n3.
  CHECK(testutil::read(tmp.path() / "d2.txt") == "11.0\n");
  CHECK(testutil::read(tmp.path() / "d3.txt") == "104.0\n");
}

TEST_CASE("immediately after a full run nothing is stale") {
  TempDir tmp;
  Workspace ws = testutil::five_stage_project(tmp.path());
  Executor ex(ws);
  REQUIRE(ex.run().ok());

  CHECK(ex.plan().stale_set().empty());
  RunReport second = ex.run();
  CHECK(second.executed.empty());
  CHECK(second.restored.empty());
  CHECK(as_set(second.skipped) ==
        std::set<std::string>{"n1", "n2", "n3", "n4", "n5"});
  CHECK(second.summary() == "0 executed, 0 restored, 5 skipped");
}

TEST_CASE("editing node 4's leaf input invalidates exactly {n4,n5,n3}") {
  TempDir tmp;
  Workspace ws = testutil::five_stage_project(tmp.path());
  Executor ex(ws);
  REQUIRE(ex.run().ok());

  testutil::write(tmp.path() / "leaf4.txt", "200\n");

  PlanResult plan = ex.plan();
  CHECK(plan.stale_set() == std::set<std::string>{"n3", "n4", "n5"});
  CHECK(plan.stages.at("n1").state == StageState::kFresh);
  CHECK(plan.stages.at("n2").state == StageState::kFresh);
  REQUIRE(!plan.stages.at("n4").reasons.empty());
  CHECK(plan.stages.at("n4").reasons[0] == "dependency leaf4.txt changed");
  CHECK(plan.stages.at("n5").reasons[0] == "upstream stage 'n4' is stale");

  RunReport report = ex.run();
  REQUIRE(report.ok());
  CHECK(as_set(report.executed) == std::set<std::string>{"n3", "n4", "n5"});
  CHECK(as_set(report.skipped) == std::set<std::string>{"n1", "n2"});
  CHECK(testutil::read(tmp.path() / "d3.txt") == "204.0\n");
}

TEST_CASE("status names a changed param key") {
  TempDir tmp;
  Workspace ws = testutil::mynode_project(tmp.path(), "1.0");
  Executor ex(ws);
  REQUIRE(ex.run().ok());

  testutil::write(ws.params_file(), "MyNode:\n  shift: 3.5\n");
  PlanResult plan = ex.plan();
  CHECK(plan.stages.at("MyNode").state == StageState::kStale);
  REQUIRE(!plan.stages.at("MyNode").reasons.empty());
  CHECK(plan.stages.at("MyNode").reasons[0] == "param MyNode.shift changed");
}

TEST_CASE("run cache: revert brings outputs back without executing") {
  TempDir tmp;
  Workspace ws = testutil::mynode_project(tmp.path(), "1.0");
  Executor ex(ws);
  REQUIRE(ex.run().ok());
  std::string first_doc = testutil::read(tmp.path() / ".dac/nodes/MyNode/outs.json");

  testutil::write(ws.params_file(), "MyNode:\n  shift: 2.0\n");
  RunReport changed = ex.run();
  CHECK(changed.executed == std::vector<std::string>{"MyNode"});

  testutil::write(ws.params_file(), "MyNode:\n  shift: 1.0\n");
  RunReport reverted = ex.run();
  CHECK(reverted.executed.empty());
  CHECK(reverted.restored == std::vector<std::string>{"MyNode"});
  CHECK(testutil::read(tmp.path() / ".dac/nodes/MyNode/outs.json") == first_doc);
}

TEST_CASE("failure stops descendants but independent branches finish") {
  TempDir tmp;
  testutil::use_deterministic_time();
  Workspace ws = Workspace::init(tmp.path());
  testutil::write(ws.pipeline_file(),
                  "stages:\n"
                  "  a:\n"
                  "    cmd: dac builtin gen-data --value 1 --out a.txt\n"
                  "    outs_path:\n"
                  "      - a.txt\n"
                  "  bad:\n"
                  "    cmd: dac builtin fail --message boom\n"
                  "    deps_path:\n"
                  "      - a.txt\n"
                  "    outs_path:\n"
                  "      - bad.txt\n"
                  "  blocked:\n"
                  "    cmd: dac builtin gen-data --value 2 --out blocked.txt\n"
                  "    deps_path:\n"
                  "      - bad.txt\n"
                  "    outs_path:\n"
                  "      - blocked.txt\n"
                  "  side:\n"
                  "    cmd: dac builtin shift-add --data a.txt --shift 1 --stage side\n"
                  "    deps_path:\n"
                  "      - a.txt\n"
                  "    outs_attr:\n"
                  "      - result\n");

  RunReport report = Executor(ws).run();
  CHECK(!report.ok());
  CHECK(as_set(report.executed) == std::set<std::string>{"a", "side"});
  REQUIRE(report.failures.count("bad") == 1);
  CHECK(report.failures.at("bad").find("exit 3") != std::string::npos);
  REQUIRE(report.failures.count("blocked") == 1);
  CHECK(report.failures.at("blocked") == "not run: upstream stage 'bad' failed");

  // Partition: every stage lands in exactly one bucket.
  CHECK(report.executed.size() + report.skipped.size() + report.restored.size() +
            report.failures.size() ==
        4);
}

TEST_CASE("declared-but-missing output is a distinct error") {
  TempDir tmp;
  testutil::use_deterministic_time();
  Workspace ws = Workspace::init(tmp.path());
  testutil::write(ws.pipeline_file(),
                  "stages:\n"
                  "  ghost:\n"
                  "    cmd: true\n"
                  "    outs_path:\n"
                  "      - never.txt\n");
  RunReport report = Executor(ws).run();
  REQUIRE(report.failures.count("ghost") == 1);
  CHECK(report.failures.at("ghost") ==
        "stage 'ghost' did not produce declared output: 'never.txt'");
}

TEST_CASE("missing leaf dependency fails the plan") {
  TempDir tmp;
  Workspace ws = testutil::five_stage_project(tmp.path());
  REQUIRE(Executor(ws).run().ok());
  fs::remove(tmp.path() / "leaf4.txt");
  CHECK_THROWS_WITH_AS(Executor(ws).plan(),
                       "stage 'n4': missing dependency: 'leaf4.txt'", DacError);
}

TEST_CASE("schedule validity: parents complete before children start") {
  TempDir tmp;
  Workspace ws = testutil::five_stage_project(tmp.path());
  Executor ex(ws, /*workers=*/3);
  RunReport report = ex.run();
  REQUIRE(report.ok());

  Graph g = build_graph(ws.load_pipeline());
  for (const auto& [from, to] : g.edges()) {
    REQUIRE(report.spans.count(from) == 1);
    REQUIRE(report.spans.count(to) == 1);
    CHECK(report.spans.at(from).second <= report.spans.at(to).first);
  }
}

TEST_CASE("results are identical for workers=1 and workers=3") {
  TempDir serial_dir, parallel_dir;
  Workspace serial = testutil::five_stage_project(serial_dir.path());
  Workspace parallel = testutil::five_stage_project(parallel_dir.path());

  REQUIRE(Executor(serial, 1).run().ok());
  REQUIRE(Executor(parallel, 3).run().ok());

  CHECK(workspace_hashes(serial) == workspace_hashes(parallel));
  CHECK(testutil::read(serial.lock_file()) == testutil::read(parallel.lock_file()));
}

TEST_CASE("partial runs checkpoint: completed stages never re-execute") {
  TempDir tmp;
  Workspace ws = testutil::five_stage_project(tmp.path());
  Executor ex(ws);

  RunReport partial = ex.run({"n2"});
  REQUIRE(partial.ok());
  CHECK(as_set(partial.executed) == std::set<std::string>{"n1", "n2"});

  RunReport rest = ex.run();
  REQUIRE(rest.ok());
  CHECK(as_set(rest.executed) == std::set<std::string>{"n3", "n4", "n5"});
  CHECK(as_set(rest.skipped) == std::set<std::string>{"n1", "n2"});
}

TEST_CASE("targets restrict execution to the ancestor closure") {
  TempDir tmp;
  Workspace ws = testutil::five_stage_project(tmp.path());
  RunReport report = Executor(ws).run({"n5"});
  REQUIRE(report.ok());
  CHECK(as_set(report.executed) == std::set<std::string>{"n1", "n4", "n5"});
  CHECK_THROWS_AS(Executor(ws).run({"nope"}), NotFoundError);
}

TEST_CASE("checkout_data restores deleted outputs and leaf deps bit-exactly") {
  TempDir tmp;
  Workspace ws = testutil::five_stage_project(tmp.path());
  REQUIRE(Executor(ws).run().ok());
  LockFile lock = ws.load_lock();

  for (const char* f : {"d1.txt", "d2.txt", "d3.txt", "d4.txt", "d5.txt",
                        "leaf4.txt"})
    fs::remove(tmp.path() / f);
  fs::remove_all(ws.nodes_dir());

  std::size_t restored = checkout_data(ws);
  CHECK(restored >= 6);
  for (const auto& [stage, sl] : lock.stages) {
    for (const auto& [key, hex] : sl.outs) {
      CHECK(ws.store().hash_file(tmp.path() / key).hex() == hex);
    }
  }
  CHECK(testutil::read(tmp.path() / "leaf4.txt") == "100\n");

  // Second call is a no-op.
  CHECK(checkout_data(ws) == 0);
}

TEST_CASE("directory dependencies are tracked as manifests") {
  TempDir tmp;
  testutil::use_deterministic_time();
  Workspace ws = Workspace::init(tmp.path());
  testutil::write(ws.pipeline_file(),
                  "stages:\n"
                  "  pack:\n"
                  "    cmd: cat data/a.txt data/b.txt > packed.txt\n"
                  "    deps_path:\n"
                  "      - data\n"
                  "    outs_path:\n"
                  "      - packed.txt\n");
  testutil::write(tmp.path() / "data" / "a.txt", "A");
  testutil::write(tmp.path() / "data" / "b.txt", "B");

  Executor ex(ws);
  REQUIRE(ex.run().ok());
  CHECK(testutil::read(tmp.path() / "packed.txt") == "AB");
  LockFile lock = ws.load_lock();
  REQUIRE(lock.find("pack") != nullptr);
  CHECK(lock.find("pack")->deps.count("data/") == 1);
  CHECK(ex.plan().stale_set().empty());

  // Touching a file inside the directory invalidates the stage.
  testutil::write(tmp.path() / "data" / "b.txt", "B2");
  PlanResult plan = ex.plan();
  CHECK(plan.stale_set() == std::set<std::string>{"pack"});
  CHECK(plan.stages.at("pack").reasons[0] == "dependency data changed");
}
