#include <doctest.h>

#include <filesystem>

#include "evidfuse/csv.hpp"
#include "evidfuse/errors.hpp"
#include "evidfuse/manifest.hpp"

using namespace evidfuse;

TEST_CASE("fnv1a64 known vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64_hex("") == "cbf29ce484222325");
}

TEST_CASE("manifest JSON round trip") {
    RunManifest m;
    m.command = "train";
    m.tool_version = "0.1.0";
    m.seed = 99;
    m.config_hash = "00ff00ff00ff00ff";
    m.inputs = {{"features.csv", "0123456789abcdef"}};
    m.artifacts = {"model.json", "history.csv"};
    const RunManifest back = RunManifest::from_json(m.to_json());
    CHECK(back.command == m.command);
    CHECK(back.seed == m.seed);
    CHECK(back.inputs == m.inputs);
    CHECK(back.artifacts == m.artifacts);
    CHECK_THROWS_AS(RunManifest::from_json(nlohmann::json{{"command", "x"}}), parse_error);
}

TEST_CASE("manifest detects tampered inputs") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto input = dir / "evidfuse_manifest_input.csv";
    write_text_file(input, "a,b\n1,2\n");

    RunManifest m;
    m.command = "fuse";
    m.tool_version = "0.1.0";
    m.inputs = {{input.string(), hash_file(input)}};
    CHECK(verify_inputs(m));

    write_text_file(input, "a,b\n1,3\n");
    CHECK(!verify_inputs(m));

    std::filesystem::remove(input);
    CHECK(!verify_inputs(m));
}

TEST_CASE("double formatting round trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -0.0}) {
        CHECK(parse_double_field(format_double(v), "test") == v);
    }
}

TEST_CASE("csv parsing rejects malformed fields") {
    CHECK_THROWS_AS(parse_double_field("1.2.3", "ctx"), parse_error);
    CHECK_THROWS_AS(parse_double_field("", "ctx"), parse_error);
    CHECK_THROWS_AS(parse_long_field("12x", "ctx"), parse_error);
    CHECK(split_csv_line("a,b,,d") == std::vector<std::string>{"a", "b", "", "d"});
}
