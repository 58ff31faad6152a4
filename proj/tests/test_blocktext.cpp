#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dac/blocktext.hpp"
#include "dac/errors.hpp"

using namespace dac;

TEST_CASE("maps, nesting, sequences, comments") {
  std::string text =
      "# header comment\n"
      "top: value\n"
      "nested:\n"
      "  inner: 42\n"
      "  list:\n"
      "    - one\n"
      "    - two\n"
      "empty_map: {}\n"
      "empty_seq: []\n";
  BlockNode root = parse_block(text);
  CHECK(root.map.size() == 4);
  CHECK(root.find("top")->scalar == "value");
  CHECK(root.find("nested")->find("inner")->scalar == "42");
  CHECK(root.find("nested")->find("list")->seq.size() == 2);
  CHECK(root.find("empty_map")->is_map());
  CHECK(root.find("empty_seq")->is_seq());
}

TEST_CASE("values keep colons and hashes verbatim") {
  BlockNode root = parse_block("cmd: echo a:b # not a comment\n");
  CHECK(root.find("cmd")->scalar == "echo a:b # not a comment");

  // Keys may contain ':' as long as no ": " appears inside them.
  BlockNode deps = parse_block("param:MyNode.shift: abc\n");
  CHECK(deps.find("param:MyNode.shift")->scalar == "abc");
}

TEST_CASE("quoted scalars unescape and tag as quoted") {
  BlockNode root = parse_block("s: \"1.0\"\nt: \"a\\nb\\\"c\"\n");
  CHECK(root.find("s")->quoted);
  CHECK(root.find("s")->scalar == "1.0");
  CHECK(root.find("t")->scalar == "a\nb\"c");
}

TEST_CASE("errors carry line numbers") {
  try {
    parse_block("ok: 1\nbroken\n");
    FAIL("expected throw");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_block("a: 1\na: 2\n"), ParseError);   // duplicate key
  CHECK_THROWS_AS(parse_block("\tx: 1\n"), ParseError);        // tab indent
  CHECK_THROWS_AS(parse_block("k:\nv: 1\n"), ParseError);      // missing value
  CHECK_THROWS_AS(parse_block("- item\n"), ParseError);        // seq at root
  CHECK_THROWS_AS(parse_block("k: \"unterminated\n"), ParseError);
}

TEST_CASE("emit/parse fixpoint") {
  BlockNode root = BlockNode::make_map();
  root.add("plain", BlockNode::make_scalar("hello world"));
  root.add("tricky", BlockNode::make_scalar("needs: no quote"));
  root.add("quoted", BlockNode::make_scalar("1.0", true));
  root.add("spacey", BlockNode::make_scalar(" padded "));
  BlockNode nested = BlockNode::make_map();
  BlockNode seq = BlockNode::make_seq();
  seq.add_item(BlockNode::make_scalar("x"));
  nested.add("seq", std::move(seq));
  nested.add("empty", BlockNode::make_map());
  root.add("nested", std::move(nested));

  std::string once = emit_block(root);
  std::string twice = emit_block(parse_block(once));
  CHECK(once == twice);

  BlockNode back = parse_block(once);
  CHECK(back.find("spacey")->scalar == " padded ");
  CHECK(back.find("quoted")->scalar == "1.0");
  CHECK(back.find("quoted")->quoted);
}

TEST_CASE("empty document is an empty map") {
  CHECK(parse_block("").map.empty());
  CHECK(parse_block("\n\n# only comments\n").map.empty());
}
