#pragma once

#include <cstdlib>
#include <string>

#include "dac/workspace.hpp"
#include "test_util.hpp"

namespace testutil {

inline void use_deterministic_time() {
  ::setenv("DAC_DETERMINISTIC_TIME", "1", 1);
}

// Five stages wired to the edge set {(1,2),(1,4),(2,3),(4,5),(5,3)}.
// Values flow through files so content changes propagate: n1 emits 10,
// each hop adds its shift. n4 also reads the leaf input leaf4.txt.
inline std::string five_stage_pipeline() {
  return
      "stages:\n"
      "  n1:\n"
      "    cmd: dac builtin gen-data --value 10 --out d1.txt\n"
      "    outs_path:\n"
      "      - d1.txt\n"
      "  n2:\n"
      "    cmd: dac builtin shift-add --data d1.txt --shift 1 --stage n2 --out d2.txt\n"
      "    deps_path:\n"
      "      - d1.txt\n"
      "    outs_path:\n"
      "      - d2.txt\n"
      "    outs_attr:\n"
      "      - result\n"
      "  n3:\n"
      "    cmd: dac builtin shift-add --data d5.txt --shift 1 --stage n3 --out d3.txt\n"
      "    deps_path:\n"
      "      - d5.txt\n"
      "      - d2.txt\n"
      "    outs_path:\n"
      "      - d3.txt\n"
      "    outs_attr:\n"
      "      - result\n"
      "  n4:\n"
      "    cmd: dac builtin shift-add --data leaf4.txt --shift 2 --stage n4 --out d4.txt\n"
      "    deps_path:\n"
      "      - leaf4.txt\n"
      "      - d1.txt\n"
      "    outs_path:\n"
      "      - d4.txt\n"
      "  n5:\n"
      "    cmd: dac builtin shift-add --data d4.txt --shift 1 --stage n5 --out d5.txt\n"
      "    deps_path:\n"
      "      - d4.txt\n"
      "    outs_path:\n"
      "      - d5.txt\n"
      "    outs_attr:\n"
      "      - result\n";
}

// Init a project with the five-stage pipeline and its leaf input.
inline dac::Workspace five_stage_project(const fs::path& dir) {
  use_deterministic_time();
  dac::Workspace ws = dac::Workspace::init(dir);
  write(ws.pipeline_file(), five_stage_pipeline());
  write(dir / "leaf4.txt", "100\n");
  return ws;
}

// Single MyNode stage reading data.txt and a shift param.
inline std::string mynode_pipeline() {
  return
      "stages:\n"
      "  MyNode:\n"
      "    cmd: dac builtin shift-add --data data.txt --param MyNode.shift --stage MyNode\n"
      "    params:\n"
      "      - MyNode.shift\n"
      "    deps_path:\n"
      "      - data.txt\n"
      "    outs_attr:\n"
      "      - result\n"
      "    metrics:\n"
      "      - result\n";
}

inline dac::Workspace mynode_project(const fs::path& dir, const std::string& shift) {
  use_deterministic_time();
  dac::Workspace ws = dac::Workspace::init(dir);
  write(ws.pipeline_file(), mynode_pipeline());
  write(ws.params_file(), "MyNode:\n  shift: " + shift + "\n");
  write(dir / "data.txt", "2.0");
  return ws;
}

// gen -> prepare -> compute chain where only compute consumes the swept
// param.
inline std::string sweep_chain_pipeline() {
  return
      "stages:\n"
      "  compute:\n"
      "    cmd: dac builtin shift-add --data prepared.txt --param compute.shift --stage compute --out computed.txt\n"
      "    params:\n"
      "      - compute.shift\n"
      "    deps_path:\n"
      "      - prepared.txt\n"
      "    outs_path:\n"
      "      - computed.txt\n"
      "    outs_attr:\n"
      "      - result\n"
      "    metrics:\n"
      "      - result\n"
      "  gen:\n"
      "    cmd: dac builtin gen-data --value 0.5 --out raw.txt\n"
      "    outs_path:\n"
      "      - raw.txt\n"
      "  prepare:\n"
      "    cmd: dac builtin shift-add --data raw.txt --shift 0.25 --stage prepare --out prepared.txt\n"
      "    deps_path:\n"
      "      - raw.txt\n"
      "    outs_path:\n"
      "      - prepared.txt\n";
}

inline dac::Workspace sweep_chain_project(const fs::path& dir) {
  use_deterministic_time();
  dac::Workspace ws = dac::Workspace::init(dir);
  write(ws.pipeline_file(), sweep_chain_pipeline());
  write(ws.params_file(), "compute:\n  shift: 1\n");
  return ws;
}

}  // namespace testutil
