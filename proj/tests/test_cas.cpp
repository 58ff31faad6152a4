#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <thread>

#include "dac/errors.hpp"
#include "dac/object_store.hpp"
#include "dac/sha256.hpp"
#include "test_util.hpp"

using namespace dac;
using testutil::TempDir;

TEST_CASE("sha256 matches the standard test vectors") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  CHECK(sha256_hex("hello\n") ==
        "5891b5b522d5df086d0ff0b110fbd9d21bb4fc7163af34d08286a2e846f6be03");

  // One million repetitions of 'a', streamed in uneven chunks.
  Sha256 ctx;
  std::string chunk(4999, 'a');
  std::size_t fed = 0;
  while (fed < 1000000) {
    std::size_t take = std::min(chunk.size(), std::size_t(1000000) - fed);
    ctx.update(chunk.data(), take);
    fed += take;
  }
  auto digest = ctx.finish();
  CHECK(to_hex(digest.data(), digest.size()) ==
        "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
}

TEST_CASE("hash_bytes is deterministic and input-sensitive") {
  CHECK(ObjectStore::hash_bytes("2.0").hex() ==
        "d84bdb34d4eeef4034d77e5403f850e35bc4a51b1143e3a83510e1aaad839748");
  CHECK(ObjectStore::hash_bytes("x") == ObjectStore::hash_bytes("x"));
  CHECK(ObjectStore::hash_bytes("x") != ObjectStore::hash_bytes("y"));
}

TEST_CASE("ObjectId validation") {
  CHECK_THROWS_AS(ObjectId::from_hex("abc"), ValidationError);
  CHECK_THROWS_AS(
      ObjectId::from_hex(
          "E3B0C44298FC1C149AFBF4C8996FB92427AE41E4649B934CA495991B7852B855"),
      ValidationError);  // uppercase rejected
  auto oid = ObjectId::from_hex(
      "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(oid.shard() == "e3");
}

TEST_CASE("store/checkout roundtrip and sharded layout") {
  TempDir tmp;
  ObjectStore store(tmp.path() / "cache");

  testutil::write(tmp.path() / "data.txt", "2.0");
  ObjectId oid = store.store_file(tmp.path() / "data.txt");
  CHECK(oid.hex() ==
        "d84bdb34d4eeef4034d77e5403f850e35bc4a51b1143e3a83510e1aaad839748");
  CHECK(fs::exists(tmp.path() / "cache" / "d8" /
                   "4bdb34d4eeef4034d77e5403f850e35bc4a51b1143e3a83510e1aaad839748"));

  store.checkout(oid, tmp.path() / "out.txt");
  CHECK(testutil::read(tmp.path() / "out.txt") == "2.0");
  CHECK(store.hash_file(tmp.path() / "out.txt") == oid);
}

TEST_CASE("repeat ingest is a no-op; identical files dedup") {
  TempDir tmp;
  ObjectStore store(tmp.path() / "cache");

  testutil::write(tmp.path() / "a.txt", "same");
  testutil::write(tmp.path() / "b.txt", "same");
  ObjectId a = store.store_file(tmp.path() / "a.txt");
  CHECK(store.object_count() == 1);
  std::uint64_t writes = store.write_count();
  ObjectId b = store.store_file(tmp.path() / "b.txt");
  CHECK(a == b);
  CHECK(store.object_count() == 1);
  CHECK(store.write_count() == writes);  // no second write
}

TEST_CASE("checkout of an absent object raises the distinct missing error") {
  TempDir tmp;
  ObjectStore store(tmp.path() / "cache");
  auto oid = ObjectId::of_bytes("never stored");
  CHECK(!store.has(oid));
  CHECK_THROWS_AS(store.checkout(oid, tmp.path() / "x"), ObjectMissingError);
  try {
    store.read_bytes(oid);
    FAIL("expected throw");
  } catch (const ObjectMissingError& e) {
    CHECK(std::string(e.what()).find(oid.hex()) != std::string::npos);
  }
}

TEST_CASE("checkout never evicts") {
  TempDir tmp;
  ObjectStore store(tmp.path() / "cache");
  ObjectId oid = store.store_bytes("payload");
  store.checkout(oid, tmp.path() / "w1");
  store.checkout(oid, tmp.path() / "w2", CheckoutMode::kLink);
  CHECK(store.has(oid));
  CHECK(testutil::read(tmp.path() / "w2") == "payload");
}

TEST_CASE("roundtrip property over random blobs") {
  TempDir tmp;
  ObjectStore store(tmp.path() / "cache");
  std::mt19937 rng(20240817);

  for (int i = 0; i < 50; ++i) {
    std::size_t len = rng() % 10000;
    std::string blob(len, '\0');
    for (auto& c : blob) c = char(rng() & 0xff);

    ObjectId oid = store.store_bytes(blob);
    CHECK(store.read_bytes(oid) == blob);
    fs::path dest = tmp.path() / ("blob" + std::to_string(i));
    store.checkout(oid, dest);
    CHECK(store.hash_file(dest) == oid);
  }
}

TEST_CASE("concurrent stores of the same content leave one complete object") {
  TempDir tmp;
  ObjectStore store(tmp.path() / "cache");
  std::string blob(200000, 'z');

  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&] { store.store_bytes(blob); });
  for (auto& t : threads) t.join();

  CHECK(store.object_count() == 1);
  CHECK(store.read_bytes(ObjectId::of_bytes(blob)) == blob);

  // No stray temp files around the object.
  std::size_t files = 0;
  for (auto it = fs::recursive_directory_iterator(tmp.path() / "cache");
       it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_regular_file()) ++files;
  }
  CHECK(files == 1);
}

TEST_CASE("directory manifests are bit-exact and roundtrip") {
  TempDir tmp;
  ObjectStore store(tmp.path() / "cache");

  fs::path dir = tmp.path() / "data";
  testutil::write(dir / "b.txt", "bee");
  testutil::write(dir / "sub" / "a.txt", "ay");

  ObjectId manifest = store.store_tree(dir);
  std::string expected = ObjectId::of_bytes("bee").hex() + " b.txt\n" +
                         ObjectId::of_bytes("ay").hex() + " sub/a.txt\n";
  CHECK(store.read_bytes(manifest) == expected);
  CHECK(store.hash_tree(dir) == manifest);

  fs::path out = tmp.path() / "restored";
  store.checkout_tree(manifest, out);
  CHECK(testutil::read(out / "b.txt") == "bee");
  CHECK(testutil::read(out / "sub" / "a.txt") == "ay");
  CHECK(store.hash_tree(out) == manifest);
}
