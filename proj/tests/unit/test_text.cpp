#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "refactor/errors.hpp"
#include "refactor/jsonl.hpp"
#include "refactor/sha256.hpp"
#include "refactor/utf8.hpp"

using namespace refactor;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
    auto p = fs::temp_directory_path() / name;
    fs::remove(p);
    return p;
}

}  // namespace

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("utf8 validation") {
    CHECK(utf8::is_valid("plain ascii"));
    CHECK(utf8::is_valid("caf\xc3\xa9"));
    CHECK_FALSE(utf8::is_valid("\xff\xfe"));
    CHECK_FALSE(utf8::is_valid("truncated \xc3"));
    CHECK(utf8::count_scalars("caf\xc3\xa9") == 4);
    CHECK(utf8::count_scalars("abc") == 3);
}

TEST_CASE("jsonl round trip and bad line collection") {
    auto p = temp_file("jsonl_rt.jsonl");
    {
        jsonl::Writer w(p);
        w.write({{"a", 1}});
        w.write({{"b", "x"}});
    }
    {
        std::ofstream app(p, std::ios::app | std::ios::binary);
        app << "{\"torn\": tr";
    }
    std::vector<jsonl::BadLine> bad;
    auto rows = jsonl::read_file(p, &bad);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].at("a") == 1);
    CHECK(rows[1].at("b") == "x");
    REQUIRE(bad.size() == 1);
    CHECK(bad[0].line_number == 3);
    fs::remove(p);
}

TEST_CASE("canonical dump sorts keys with no whitespace") {
    nlohmann::json j{{"zeta", 1}, {"alpha", {{"y", 2}, {"x", 3}}}};
    CHECK(jsonl::dump_canonical(j) == R"({"alpha":{"x":3,"y":2},"zeta":1})");
}
