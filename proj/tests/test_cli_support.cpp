#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <string>

#include "fkh/config.hpp"
#include "fkh/json_writer.hpp"
#include "fkh/profiles.hpp"
#include "fkh/rng.hpp"
#include "fkh/threads.hpp"

using Catch::Matchers::ContainsSubstring;
using fkh::ConfigFile;
using fkh::JsonWriter;
using fkh::Vector;

namespace {

struct TempFile {
    std::string path;

    TempFile(const std::string& name, const std::string& content) : path(name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("json documents are laid out byte for byte") {
    JsonWriter jw;
    jw.begin_object();
    jw.kv("a", 1);
    jw.kv("b", 2.5);
    jw.key("list").begin_array();
    jw.value(1);
    jw.value(2);
    jw.end_array();
    jw.key("obj").begin_object();
    jw.kv("x", true);
    jw.end_object();
    jw.end_object();
    const std::string expected =
        "{\n"
        "  \"a\": 1,\n"
        "  \"b\": 2.5,\n"
        "  \"list\": [\n"
        "    1,\n"
        "    2\n"
        "  ],\n"
        "  \"obj\": {\n"
        "    \"x\": true\n"
        "  }\n"
        "}\n";
    CHECK(jw.str() == expected);
}

TEST_CASE("empty containers close on the same line") {
    JsonWriter jw;
    jw.begin_object();
    jw.end_object();
    CHECK(jw.str() == "{}\n");
    JsonWriter ja;
    ja.begin_array();
    ja.end_array();
    CHECK(ja.str() == "[]\n");
}

TEST_CASE("strings are escaped") {
    JsonWriter jw;
    jw.value(std::string("a\"b\\c\nd\te\rf\x01"));
    CHECK(jw.str() == "\"a\\\"b\\\\c\\nd\\te\\rf\\u0001\"\n");
}

TEST_CASE("doubles print round-trip exact and non-finite as null") {
    CHECK(JsonWriter::format_double(0.1) == "0.10000000000000001");
    CHECK(JsonWriter::format_double(1.0) == "1");
    CHECK(JsonWriter::format_double(-0.0) == "-0");
    CHECK(JsonWriter::format_double(std::numeric_limits<double>::quiet_NaN()) == "null");
    CHECK(JsonWriter::format_double(std::numeric_limits<double>::infinity()) == "null");
}

TEST_CASE("json writer misuse fails loudly") {
    CHECK_THROWS_AS(JsonWriter().key("a"), std::logic_error);
    {
        JsonWriter jw;
        jw.begin_object();
        CHECK_THROWS_AS(jw.value(1), std::logic_error);
    }
    {
        JsonWriter jw;
        jw.begin_object();
        CHECK_THROWS_AS(jw.end_array(), std::logic_error);
    }
    {
        JsonWriter jw;
        jw.begin_object();
        CHECK_THROWS_AS(jw.str(), std::logic_error);
    }
    {
        JsonWriter jw;
        jw.begin_array();
        CHECK_THROWS_AS(jw.key("a"), std::logic_error);
    }
}

TEST_CASE("config files parse comments, trimming, and every value type") {
    TempFile f("cli_support_basic.cfg",
               "# leading comment\n"
               "alpha = 1.5\n"
               "beta=7   # trailing comment\n"
               "name =  cone model\n"
               "flag = true\n"
               "seed = 12345\n"
               "\n");
    ConfigFile cfg = ConfigFile::load(f.path);
    CHECK(cfg.has("alpha"));
    CHECK_FALSE(cfg.has("gamma"));
    CHECK(cfg.get_double("alpha", 0.0) == 1.5);
    CHECK(cfg.get_int("beta", 0) == 7);
    CHECK(cfg.get_string("name", "") == "cone model");
    CHECK(cfg.get_bool("flag", false));
    CHECK(cfg.get_u64("seed", 0) == 12345);
    CHECK(cfg.get_double("absent", 2.25) == 2.25);
    CHECK_NOTHROW(cfg.reject_unknown());
}

TEST_CASE("malformed config files are rejected at load") {
    {
        TempFile f("cli_support_dup.cfg", "a = 1\na = 2\n");
        CHECK_THROWS_WITH(ConfigFile::load(f.path), ContainsSubstring("duplicate key"));
    }
    {
        TempFile f("cli_support_noeq.cfg", "justaword\n");
        CHECK_THROWS_WITH(ConfigFile::load(f.path), ContainsSubstring("expected key = value"));
    }
    {
        TempFile f("cli_support_nokey.cfg", "= 3\n");
        CHECK_THROWS_WITH(ConfigFile::load(f.path), ContainsSubstring("empty key"));
    }
    CHECK_THROWS_AS(ConfigFile::load("no_such_file_here.cfg"), fkh::ConfigError);
}

TEST_CASE("unconsumed keys fail by name") {
    TempFile f("cli_support_unknown.cfg", "good = 1\nbad_key = 2\n");
    ConfigFile cfg = ConfigFile::load(f.path);
    cfg.get_int("good", 0);
    CHECK_THROWS_WITH(cfg.reject_unknown(), ContainsSubstring("bad_key"));
}

TEST_CASE("config type errors name the key") {
    TempFile f("cli_support_types.cfg", "x = abc\nb = yes\nu = -3\nv = 1.5x\n");
    ConfigFile cfg = ConfigFile::load(f.path);
    CHECK_THROWS_WITH(cfg.get_double("x", 0.0), ContainsSubstring("'x'"));
    CHECK_THROWS_AS(cfg.get_bool("b", false), fkh::ConfigError);
    CHECK_THROWS_AS(cfg.get_u64("u", 0), fkh::ConfigError);
    CHECK_THROWS_AS(cfg.get_int("v", 0), fkh::ConfigError);
}

TEST_CASE("seed splitting separates streams deterministically") {
    CHECK(fkh::split_seed(1, 0) != fkh::split_seed(1, 1));
    CHECK(fkh::split_seed(1, 0) != fkh::split_seed(2, 0));
    auto a = fkh::make_rng(5, 3);
    auto b = fkh::make_rng(5, 3);
    for (int i = 0; i < 4; ++i) CHECK(a() == b());
    auto c = fkh::make_rng(5, 4);
    CHECK(fkh::make_rng(5, 3)() != c());
}

TEST_CASE("thread count resolution honors explicit, env, hardware order") {
    const char* old = std::getenv("FRAC_HESSIAN_THREADS");
    std::string saved = old ? old : "";
    ::setenv("FRAC_HESSIAN_THREADS", "2", 1);
    CHECK(fkh::resolve_threads(0) == 2);
    CHECK(fkh::resolve_threads(7) == 7);
    ::setenv("FRAC_HESSIAN_THREADS", "0", 1);
    CHECK(fkh::resolve_threads(0) >= 1);
    ::setenv("FRAC_HESSIAN_THREADS", "abc", 1);
    CHECK(fkh::resolve_threads(0) >= 1);
    if (old) {
        ::setenv("FRAC_HESSIAN_THREADS", saved.c_str(), 1);
    } else {
        ::unsetenv("FRAC_HESSIAN_THREADS");
    }
}

TEST_CASE("profile lookup parses names and parameters") {
    fkh::TestFunctionProfile wide = fkh::profile_by_name("smoothed_cone:2.0", 2);
    CHECK(wide.SC == Catch::Approx(0.5));
    CHECK(wide(Vector::Zero(2)) == 0.0);
    fkh::TestFunctionProfile dimple = fkh::profile_by_name("gaussian_dimple:0.08", 3);
    CHECK(dimple.SC == Catch::Approx(1.16));
    fkh::TestFunctionProfile aff = fkh::profile_by_name("affine", 3);
    CHECK(aff.L == Catch::Approx(std::sqrt(0.09 + 0.04 + 0.01)));
    CHECK(fkh::profile_by_name("quadratic", 2).growth == fkh::Growth::kQuadratic);
    CHECK_THROWS_AS(fkh::profile_by_name("bogus", 2), std::invalid_argument);
    CHECK_THROWS_AS(fkh::profile_by_name("smoothed_cone:abc", 2), std::invalid_argument);
    CHECK_THROWS_AS(fkh::profile_by_name("gaussian_dimple:0.5", 2), std::invalid_argument);
}

TEST_CASE("translation shifts evaluation without touching constants") {
    fkh::TestFunctionProfile cone = fkh::smoothed_cone(1.0);
    Vector v(2);
    v << 1.0, -0.5;
    fkh::TestFunctionProfile moved = fkh::translate(cone, v);
    Vector x(2);
    x << 0.3, 0.8;
    CHECK(moved(x) == Catch::Approx(cone(x - v)));
    CHECK(moved.L == cone.L);
    CHECK(moved.name == "smoothed_cone_shifted");
    CHECK_FALSE(moved.is_radial);
}

TEST_CASE("the builtin profile set is well formed") {
    auto profiles = fkh::builtin_profiles(3);
    REQUIRE(profiles.size() == 4);
    CHECK(profiles[0].name == "affine");
    CHECK(profiles[1].name == "smoothed_cone");
    for (const auto& p : profiles) {
        CHECK(std::isfinite(p(Vector::Zero(3))));
    }
}
