#include "dac/graph.hpp"

#include <algorithm>
#include <deque>

#include "dac/errors.hpp"
#include "dac/sha256.hpp"

namespace dac {
namespace {

// Reports one cycle as "a -> b -> ... -> a".
[[noreturn]] void throw_cycle(const std::vector<std::string>& path) {
  std::string msg = "dependency cycle: ";
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) msg += " -> ";
    msg += path[i];
  }
  throw ValidationError(msg);
}

// Iterative DFS cycle check over index-based adjacency.
void check_acyclic(const std::vector<std::string>& names,
                   const std::vector<std::vector<std::size_t>>& children) {
  enum class Mark : unsigned char { kUnseen, kActive, kDone };
  std::vector<Mark> marks(names.size(), Mark::kUnseen);
  std::vector<std::size_t> stack;

  for (std::size_t start = 0; start < names.size(); ++start) {
    if (marks[start] != Mark::kUnseen) continue;
    std::vector<std::pair<std::size_t, std::size_t>> frames{{start, 0}};
    marks[start] = Mark::kActive;
    stack.push_back(start);
    while (!frames.empty()) {
      auto& [node, idx] = frames.back();
      const auto& kids = children[node];
      if (idx < kids.size()) {
        std::size_t next = kids[idx++];
        Mark m = marks[next];
        if (m == Mark::kActive) {
          // Trim the stack to the cycle entry point.
          auto it = std::find(stack.begin(), stack.end(), next);
          std::vector<std::string> cycle;
          for (; it != stack.end(); ++it) cycle.push_back(names[*it]);
          cycle.push_back(names[next]);
          throw_cycle(cycle);
        }
        if (m == Mark::kUnseen) {
          marks[next] = Mark::kActive;
          stack.push_back(next);
          frames.emplace_back(next, 0);
        }
      } else {
        marks[node] = Mark::kDone;
        stack.pop_back();
        frames.pop_back();
      }
    }
  }
}

}  // namespace

Graph Graph::from_edges(std::vector<std::string> nodes,
                        std::set<std::pair<std::string, std::string>> edges) {
  Graph g;
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  g.nodes_ = std::move(nodes);

  std::size_t n = g.nodes_.size();
  g.parents_idx_.resize(n);
  g.children_idx_.resize(n);
  g.parents_names_.resize(n);
  g.children_names_.resize(n);

  for (const auto& [from, to] : edges) {
    if (!g.has_node(from) || !g.has_node(to))
      throw ValidationError("edge endpoint not in node set: (" + from + ", " +
                            to + ")");
    if (from == to)
      throw ValidationError("dependency cycle: " + from + " -> " + to);
    std::size_t fi = g.index_of(from);
    std::size_t ti = g.index_of(to);
    g.parents_idx_[ti].push_back(fi);
    g.children_idx_[fi].push_back(ti);
  }
  g.edges_ = std::move(edges);

  // Index adjacency is kept sorted; the name views mirror it.
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(g.parents_idx_[i].begin(), g.parents_idx_[i].end());
    std::sort(g.children_idx_[i].begin(), g.children_idx_[i].end());
    for (std::size_t p : g.parents_idx_[i])
      g.parents_names_[i].push_back(g.nodes_[p]);
    for (std::size_t c : g.children_idx_[i])
      g.children_names_[i].push_back(g.nodes_[c]);
  }
  check_acyclic(g.nodes_, g.children_idx_);
  return g;
}

bool Graph::has_node(std::string_view node) const {
  return std::binary_search(nodes_.begin(), nodes_.end(), node);
}

std::size_t Graph::index_of(std::string_view node) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), node);
  if (it == nodes_.end() || *it != node)
    throw NotFoundError("unknown stage: '" + std::string(node) + "'");
  return std::size_t(it - nodes_.begin());
}

const std::vector<std::string>& Graph::parents(std::string_view node) const {
  return parents_names_[index_of(node)];
}

const std::vector<std::string>& Graph::children(std::string_view node) const {
  return children_names_[index_of(node)];
}

std::set<std::string> Graph::ancestor_closure(
    const std::set<std::string>& targets) const {
  std::set<std::string> seen;
  std::deque<std::string> frontier(targets.begin(), targets.end());
  while (!frontier.empty()) {
    std::string n = frontier.front();
    frontier.pop_front();
    if (!seen.insert(n).second) continue;
    for (const auto& p : parents(n)) frontier.push_back(p);
  }
  return seen;
}

std::set<std::string> Graph::descendants(std::string_view node) const {
  std::set<std::string> seen;
  std::deque<std::string> frontier(children(node).begin(), children(node).end());
  while (!frontier.empty()) {
    std::string n = frontier.front();
    frontier.pop_front();
    if (!seen.insert(n).second) continue;
    for (const auto& c : children(n)) frontier.push_back(c);
  }
  return seen;
}

Graph build_graph(const PipelineDef& p) {
  std::map<std::string, std::string> producer_of;
  for (const auto& [name, s] : p.stages) {
    for (const auto& path : declared_output_paths(s)) producer_of[path] = name;
  }

  std::vector<std::string> nodes;
  std::set<std::pair<std::string, std::string>> edges;
  for (const auto& [name, s] : p.stages) {
    nodes.push_back(name);
    for (const auto& path : s.deps_path) {
      auto it = producer_of.find(path);
      if (it == producer_of.end()) continue;  // leaf workspace file
      if (it->second == name)
        throw ValidationError("stage '" + name + "' depends on its own output '" +
                              path + "'");
      edges.emplace(it->second, name);
    }
    for (const auto& ref : s.deps_attr) {
      std::string src = ref.substr(0, ref.find('.'));
      if (p.stages.find(src) == p.stages.end())
        throw ValidationError("stage '" + name + "': deps_attr '" + ref +
                              "' names unknown stage '" + src + "'");
      if (src == name)
        throw ValidationError("stage '" + name + "' depends on its own attribute '" +
                              ref + "'");
      edges.emplace(src, name);
    }
  }
  return Graph::from_edges(std::move(nodes), std::move(edges));
}

std::vector<std::string> topo_sort(const Graph& g) {
  std::size_t n = g.nodes().size();
  const auto& children = g.children_by_index();
  std::vector<std::size_t> pending(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    pending[i] = g.parents_by_index()[i].size();

  // Min-heap over indices; index order equals lexicographic name order.
  std::vector<std::size_t> heap;
  heap.reserve(n);
  auto cmp = std::greater<std::size_t>();
  for (std::size_t i = 0; i < n; ++i) {
    if (pending[i] == 0) heap.push_back(i);
  }
  std::make_heap(heap.begin(), heap.end(), cmp);

  std::vector<std::string> order;
  order.reserve(n);
  while (!heap.empty()) {
    std::pop_heap(heap.begin(), heap.end(), cmp);
    std::size_t i = heap.back();
    heap.pop_back();
    order.push_back(g.nodes()[i]);
    for (std::size_t c : children[i]) {
      if (--pending[c] == 0) {
        heap.push_back(c);
        std::push_heap(heap.begin(), heap.end(), cmp);
      }
    }
  }
  return order;
}

std::string to_dot(const Graph& g) {
  std::string out = "digraph pipeline {\n";
  for (const auto& n : g.nodes()) {
    out += "  \"" + n + "\";\n";
  }
  for (const auto& [from, to] : g.edges()) {
    out += "  \"" + from + "\" -> \"" + to + "\";\n";
  }
  out += "}\n";
  return out;
}

std::string canonical_stage_description(
    const StageDef& s, const std::map<std::string, ParamScalar>& param_values,
    const std::map<std::string, std::string>& dep_hashes) {
  std::string out = "cmd " + s.cmd + "\n";
  for (const auto& [key, value] : param_values)
    out += "param " + key + "=" + canonical_scalar(value) + "\n";
  for (const auto& [name, hex] : dep_hashes)
    out += "dep " + name + ":" + hex + "\n";
  for (const auto& path : declared_output_paths(s))
    out += "out " + path + "\n";
  return out;
}

ObjectId fingerprint(const StageDef& s,
                     const std::map<std::string, ParamScalar>& param_values,
                     const std::map<std::string, std::string>& dep_hashes) {
  return ObjectId::of_bytes(
      canonical_stage_description(s, param_values, dep_hashes));
}

}  // namespace dac
