#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dac/errors.hpp"
#include "dac/params.hpp"

using namespace dac;

TEST_CASE("scalars typed by literal form") {
  ParamTree t = ParamTree::parse(
      "MyNode:\n"
      "  shift: 1.0\n"
      "train:\n"
      "  seed: 20170428\n"
      "  n_est: 50\n"
      "  min_split: 0.01\n"
      "  verbose: true\n"
      "  label: hello\n"
      "  version: \"1.0\"\n");

  CHECK(std::get<double>(t.at("MyNode.shift")) == 1.0);
  CHECK(std::get<std::int64_t>(t.at("train.seed")) == 20170428);
  CHECK(std::get<std::int64_t>(t.at("train.n_est")) == 50);
  CHECK(std::get<double>(t.at("train.min_split")) == 0.01);
  CHECK(std::get<bool>(t.at("train.verbose")) == true);
  CHECK(std::get<std::string>(t.at("train.label")) == "hello");
  CHECK(std::get<std::string>(t.at("train.version")) == "1.0");
}

TEST_CASE("empty text yields an empty tree; lookups miss") {
  ParamTree t = ParamTree::parse("");
  CHECK(t.empty());
  CHECK(!t.has("anything"));
  CHECK_THROWS_AS(t.at("anything"), NotFoundError);
}

TEST_CASE("duplicate keys rejected") {
  CHECK_THROWS_AS(ParamTree::parse("a: 1\na: 2\n"), ParseError);
}

TEST_CASE("canonical rendering is whitespace-free and typed") {
  CHECK(canonical_scalar(ParamScalar(std::int64_t(42))) == "42");
  CHECK(canonical_scalar(ParamScalar(1.0)) == "1.0");
  CHECK(canonical_scalar(ParamScalar(0.01)) == "0.01");
  CHECK(canonical_scalar(ParamScalar(true)) == "true");
  CHECK(canonical_scalar(ParamScalar(std::string("x y"))) == "\"x y\"");
}

TEST_CASE("emit/parse fixpoint keeps types (string '1.0' stays a string)") {
  ParamTree t;
  t.set("a.float_like", ParamScalar(std::string("1.0")));
  t.set("a.real", ParamScalar(1.0));
  t.set("a.flag", ParamScalar(false));
  std::string text = t.emit();
  ParamTree back = ParamTree::parse(text);
  CHECK(std::get<std::string>(back.at("a.float_like")) == "1.0");
  CHECK(std::get<double>(back.at("a.real")) == 1.0);
  CHECK(std::get<bool>(back.at("a.flag")) == false);
  CHECK(back.emit() == text);
}

TEST_CASE("set_existing refuses unknown keys") {
  ParamTree t = ParamTree::parse("MyNode:\n  shift: 1.0\n");
  t.set_existing("MyNode.shift", ParamScalar(2.0));
  CHECK(std::get<double>(t.at("MyNode.shift")) == 2.0);
  CHECK_THROWS_AS(t.set_existing("MyNode.other", ParamScalar(1.0)), NotFoundError);
}

TEST_CASE("lookup is independent of sibling keys") {
  std::mt19937 rng(7);
  for (int round = 0; round < 30; ++round) {
    ParamTree reference;
    std::vector<std::pair<std::string, ParamScalar>> inserted;
    int n = 1 + int(rng() % 12);
    for (int i = 0; i < n; ++i) {
      std::string key = "k" + std::to_string(rng() % 5);
      int depth = 1 + int(rng() % 3);
      for (int d = 1; d < depth; ++d) key += ".k" + std::to_string(rng() % 5);
      ParamScalar value;
      switch (rng() % 4) {
        case 0: value = std::int64_t(rng() % 1000); break;
        case 1: value = double(rng() % 1000) / 8.0; break;
        case 2: value = bool(rng() % 2); break;
        default: value = "s" + std::to_string(rng() % 100);
      }
      reference.set(key, value);
      // Later writes shadow earlier ones, including whole subtrees.
      std::erase_if(inserted, [&](const auto& kv) {
        return kv.first == key || kv.first.rfind(key + ".", 0) == 0 ||
               key.rfind(kv.first + ".", 0) == 0;
      });
      inserted.emplace_back(key, value);
    }
    ParamTree reparsed = ParamTree::parse(reference.emit());
    for (const auto& [key, value] : inserted) {
      REQUIRE(reparsed.has(key));
      CHECK(canonical_scalar(reparsed.at(key)) == canonical_scalar(value));
    }
  }
}

TEST_CASE("override specs: lists") {
  OverrideSpec o = parse_set_override("MyNode.shift=1,2,3,4");
  CHECK(o.key == "MyNode.shift");
  REQUIRE(o.values.size() == 4);
  CHECK(std::get<std::int64_t>(o.values[0]) == 1);
  CHECK(std::get<std::int64_t>(o.values[3]) == 4);

  OverrideSpec floats = parse_set_override("MyNode.shift=1.5");
  CHECK(std::get<double>(floats.values[0]) == 1.5);

  OverrideSpec strings = parse_set_override("model.kind=rbf,linear");
  CHECK(std::get<std::string>(strings.values[1]) == "linear");
}

TEST_CASE("override specs: range() is half-open with step") {
  OverrideSpec o = parse_set_override("MyNode.shift=range(5, 10)");
  REQUIRE(o.values.size() == 5);
  for (int i = 0; i < 5; ++i)
    CHECK(std::get<std::int64_t>(o.values[std::size_t(i)]) == 5 + i);

  OverrideSpec temp = parse_set_override("temperature=range(1000,1800,50)");
  REQUIRE(temp.values.size() == 16);
  CHECK(std::get<std::int64_t>(temp.values.front()) == 1000);
  CHECK(std::get<std::int64_t>(temp.values.back()) == 1750);

  OverrideSpec down = parse_set_override("x=range(3,0,-1)");
  REQUIRE(down.values.size() == 3);
  CHECK(std::get<std::int64_t>(down.values[0]) == 3);
  CHECK(std::get<std::int64_t>(down.values[2]) == 1);
}

TEST_CASE("override specs: malformed inputs") {
  CHECK_THROWS_AS(parse_set_override("novalue"), ParseError);
  CHECK_THROWS_AS(parse_set_override("=5"), ParseError);
  CHECK_THROWS_AS(parse_set_override("k="), ParseError);
  CHECK_THROWS_AS(parse_set_override("k=1,,2"), ParseError);
  CHECK_THROWS_AS(parse_set_override("k=range(5,5)"), ParseError);    // empty
  CHECK_THROWS_AS(parse_set_override("k=range(1,9,0)"), ParseError);  // zero step
  CHECK_THROWS_AS(parse_set_override("k=range(1)"), ParseError);
  CHECK_THROWS_AS(parse_set_override("k=range(a,b)"), ParseError);
  CHECK_THROWS_AS(parse_set_override("bad key=1"), ParseError);
}
