#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dac/object_id.hpp"
#include "dac/params.hpp"
#include "dac/pipeline.hpp"

namespace dac {

// Dependency DAG over stage names. Acyclicity is validated on
// construction; instances are immutable afterwards (and safe to share
// across threads). Adjacency is stored per node index, with nodes()
// sorted so index order equals lexicographic name order.
class Graph {
 public:
  // Builds from explicit nodes and (producer, consumer) edges; validates
  // endpoints and acyclicity (the error names one offending cycle).
  static Graph from_edges(std::vector<std::string> nodes,
                          std::set<std::pair<std::string, std::string>> edges);

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::set<std::pair<std::string, std::string>>& edges() const {
    return edges_;
  }

  bool has_node(std::string_view node) const;
  std::size_t index_of(std::string_view node) const;  // throws NotFoundError

  const std::vector<std::string>& parents(std::string_view node) const;
  const std::vector<std::string>& children(std::string_view node) const;

  const std::vector<std::vector<std::size_t>>& parents_by_index() const {
    return parents_idx_;
  }
  const std::vector<std::vector<std::size_t>>& children_by_index() const {
    return children_idx_;
  }

  // All transitive predecessors of the given nodes, plus the nodes.
  std::set<std::string> ancestor_closure(const std::set<std::string>& targets) const;
  std::set<std::string> descendants(std::string_view node) const;

 private:
  Graph() = default;
  std::vector<std::string> nodes_;  // sorted
  std::set<std::pair<std::string, std::string>> edges_;
  std::vector<std::vector<std::size_t>> parents_idx_, children_idx_;
  std::vector<std::vector<std::string>> parents_names_, children_names_;
};

// Resolves stage declarations to the dependency graph: an edge (A, B)
// exists iff B lists an attribute of A or a path that A produces.
Graph build_graph(const PipelineDef& p);

// Deterministic topological order: Kahn's algorithm with the ready set
// popped in lexicographic name order.
std::vector<std::string> topo_sort(const Graph& g);

// DOT rendering with sorted nodes and edges, stable for diffing.
std::string to_dot(const Graph& g);

// Canonical one-line-per-fact description of a stage's inputs: the
// command, each parameter's canonical value, each dependency's content
// hash, and the declared output paths. The fingerprint is the SHA-256 of
// this text.
std::string canonical_stage_description(
    const StageDef& s, const std::map<std::string, ParamScalar>& param_values,
    const std::map<std::string, std::string>& dep_hashes);

ObjectId fingerprint(const StageDef& s,
                     const std::map<std::string, ParamScalar>& param_values,
                     const std::map<std::string, std::string>& dep_hashes);

}  // namespace dac
