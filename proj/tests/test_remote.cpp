#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "dac/errors.hpp"
#include "dac/executor.hpp"
#include "dac/remote.hpp"
#include "dac/revstore.hpp"
#include "fixtures.hpp"

using namespace dac;
using testutil::TempDir;

namespace {

// Independent oracle: every object id named by any revision's lock (path
// deps and outputs, with directory manifests expanded against the store).
std::set<std::string> lock_closure_oracle(Workspace& ws) {
  std::set<std::string> oids;
  RevStore revs(ws);
  for (const auto& entry : fs::directory_iterator(ws.revs_dir())) {
    Revision rev =
        parse_revision_record(testutil::read(entry.path()));
    LockFile lock =
        parse_lock(ws.store().read_bytes(ObjectId::from_hex(rev.tree.at("lock.dac"))));
    for (const auto& [stage, sl] : lock.stages) {
      for (const auto& [key, hex] : sl.outs) oids.insert(hex);
      for (const auto& [key, hex] : sl.deps) {
        if (is_path_dep(key)) oids.insert(hex);
      }
    }
  }
  return oids;
}

std::set<std::string> remote_objects(const fs::path& remote) {
  std::set<std::string> out;
  if (!fs::exists(remote / "cache")) return out;
  for (auto it = fs::recursive_directory_iterator(remote / "cache");
       it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_regular_file())
      out.insert(it->path().parent_path().filename().string() +
                 it->path().filename().string());
  }
  return out;
}

}  // namespace

TEST_CASE("push transfers exactly the lock closure, idempotently") {
  TempDir project, remote;
  Workspace ws = testutil::mynode_project(project.path(), "1.0");
  REQUIRE(Executor(ws).run().ok());
  RevStore(ws).commit("v1");

  std::set<std::string> expected = lock_closure_oracle(ws);
  std::size_t pushed = push(ws, remote.path());
  CHECK(pushed == expected.size());

  // Every closure object landed (metadata blobs may add extras).
  std::set<std::string> at_remote = remote_objects(remote.path());
  for (const auto& hex : expected) CHECK(at_remote.count(hex) == 1);

  CHECK(push(ws, remote.path()) == 0);

  // Refs and records are exported alongside.
  CHECK(fs::exists(remote.path() / "refs" / "HEAD"));
  CHECK(fs::exists(remote.path() / "refs" / "branch" / "main"));
  CHECK(fs::exists(remote.path() / "revs" / RevStore(ws).resolve("HEAD")));
}

TEST_CASE("push with empty history transfers nothing") {
  TempDir project, remote;
  testutil::use_deterministic_time();
  Workspace ws = Workspace::init(project.path());
  CHECK(push(ws, remote.path()) == 0);
}

TEST_CASE("pull is a no-op when everything is local") {
  TempDir project, remote;
  Workspace ws = testutil::mynode_project(project.path(), "1.0");
  REQUIRE(Executor(ws).run().ok());
  RevStore(ws).commit("v1");
  push(ws, remote.path());
  CHECK(pull(ws, remote.path()) == 0);
}

TEST_CASE("metadata-only clone: pull then checkout reproduces every file") {
  TempDir origin_dir, remote, clone_dir;
  Workspace origin = testutil::five_stage_project(origin_dir.path());
  REQUIRE(Executor(origin).run().ok());
  RevStore(origin).commit("v1");
  push(origin, remote.path());

  // Copy only metadata: revision records, refs, and the three files.
  fs::create_directories(clone_dir.path() / ".dac");
  fs::copy(origin_dir.path() / ".dac" / "revs", clone_dir.path() / ".dac" / "revs",
           fs::copy_options::recursive);
  fs::copy(origin_dir.path() / ".dac" / "refs", clone_dir.path() / ".dac" / "refs",
           fs::copy_options::recursive);
  for (const auto& f : Workspace::tracked_files())
    fs::copy_file(origin_dir.path() / f, clone_dir.path() / f);

  Workspace clone = Workspace::open(clone_dir.path());
  std::size_t pulled = pull(clone, remote.path());
  CHECK(pulled == lock_closure_oracle(origin).size());

  checkout_data(clone);
  for (const char* f :
       {"d1.txt", "d2.txt", "d3.txt", "d4.txt", "d5.txt", "leaf4.txt"}) {
    CHECK(testutil::read(clone_dir.path() / f) ==
          testutil::read(origin_dir.path() / f));
  }

  // Nothing to execute: the clone is fully fresh.
  RunReport report = Executor(clone).run();
  CHECK(report.executed.empty());
  CHECK(report.restored.empty());
}

TEST_CASE("pull names the missing object when the remote is incomplete") {
  TempDir origin_dir, remote, clone_dir;
  Workspace origin = testutil::mynode_project(origin_dir.path(), "1.0");
  REQUIRE(Executor(origin).run().ok());
  RevStore(origin).commit("v1");
  push(origin, remote.path());

  // Drop one data object from the remote.
  std::string victim = *lock_closure_oracle(origin).begin();
  ObjectId victim_oid = ObjectId::from_hex(victim);
  fs::remove(remote.path() / "cache" / victim_oid.shard() / victim_oid.rest());

  fs::create_directories(clone_dir.path() / ".dac");
  fs::copy(origin_dir.path() / ".dac" / "revs", clone_dir.path() / ".dac" / "revs",
           fs::copy_options::recursive);
  fs::copy(origin_dir.path() / ".dac" / "refs", clone_dir.path() / ".dac" / "refs",
           fs::copy_options::recursive);
  Workspace clone = Workspace::open(clone_dir.path());

  try {
    pull(clone, remote.path());
    FAIL("expected throw");
  } catch (const ObjectMissingError& e) {
    CHECK(e.oid_hex() == victim);
    CHECK(std::string(e.what()).find(victim) != std::string::npos);
  }
}

TEST_CASE("push/pull closure roundtrip: replica object set covers the origin's") {
  TempDir origin_dir, remote, clone_dir;
  Workspace origin = testutil::five_stage_project(origin_dir.path());
  REQUIRE(Executor(origin).run().ok());
  RevStore(origin).commit("v1");
  push(origin, remote.path());

  fs::create_directories(clone_dir.path() / ".dac");
  fs::copy(origin_dir.path() / ".dac" / "revs", clone_dir.path() / ".dac" / "revs",
           fs::copy_options::recursive);
  fs::copy(origin_dir.path() / ".dac" / "refs", clone_dir.path() / ".dac" / "refs",
           fs::copy_options::recursive);
  Workspace clone = Workspace::open(clone_dir.path());
  pull(clone, remote.path());

  for (const auto& hex : lock_closure_oracle(origin))
    CHECK(clone.store().has(ObjectId::from_hex(hex)));
}

TEST_CASE("directory outputs travel through remotes as manifests") {
  TempDir project, remote, clone_dir;
  testutil::use_deterministic_time();
  Workspace ws = Workspace::init(project.path());
  testutil::write(ws.pipeline_file(),
                  "stages:\n"
                  "  split:\n"
                  "    cmd: mkdir -p parts && cp whole.txt parts/p1.txt && cp whole.txt parts/p2.txt\n"
                  "    deps_path:\n"
                  "      - whole.txt\n"
                  "    outs_path:\n"
                  "      - parts\n");
  testutil::write(project.path() / "whole.txt", "payload\n");
  REQUIRE(Executor(ws).run().ok());
  RevStore(ws).commit("v1");
  push(ws, remote.path());

  fs::create_directories(clone_dir.path() / ".dac");
  fs::copy(project.path() / ".dac" / "revs", clone_dir.path() / ".dac" / "revs",
           fs::copy_options::recursive);
  fs::copy(project.path() / ".dac" / "refs", clone_dir.path() / ".dac" / "refs",
           fs::copy_options::recursive);
  for (const auto& f : Workspace::tracked_files())
    fs::copy_file(project.path() / f, clone_dir.path() / f);

  Workspace clone = Workspace::open(clone_dir.path());
  pull(clone, remote.path());
  checkout_data(clone);
  CHECK(testutil::read(clone_dir.path() / "parts" / "p1.txt") == "payload\n");
  CHECK(testutil::read(clone_dir.path() / "parts" / "p2.txt") == "payload\n");
}
