#include "doctest.h"

#include <cctype>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "vibronic/manifest.hpp"

using namespace vibronic;

TEST_CASE("duration strings parse to picoseconds") {
  CHECK(parse_duration_ps("10ns") == 10000);
  CHECK(parse_duration_ps("2.5us") == 2500000);
  CHECK(parse_duration_ps("1ms") == 1000000000);
  CHECK(parse_duration_ps("30s") == 30000000000000LL);
  CHECK(parse_duration_ps("250") == 250);
  CHECK(parse_duration_ps("1.5ns") == 1500);
  CHECK(parse_duration_ps("7ps") == 7);

  CHECK_THROWS(parse_duration_ps(""));
  CHECK_THROWS(parse_duration_ps("10 parsecs"));
  CHECK_THROWS(parse_duration_ps("-5ns"));
  CHECK_THROWS(parse_duration_ps("ns"));
}

TEST_CASE("file digest is stable and content sensitive") {
  {
    std::ofstream f("test_digest_a.bin", std::ios::binary);
    f << "some binary payload";
  }
  {
    std::ofstream f("test_digest_b.bin", std::ios::binary);
    f << "some binary payloaD";
  }
  const std::string d1 = file_digest("test_digest_a.bin");
  const std::string d2 = file_digest("test_digest_a.bin");
  const std::string d3 = file_digest("test_digest_b.bin");
  CHECK(d1 == d2);
  CHECK(d1 != d3);
  REQUIRE(d1.rfind("fnv1a64:", 0) == 0);
  for (std::size_t i = 8; i < d1.size(); ++i)
    CHECK(std::isxdigit(static_cast<unsigned char>(d1[i])) != 0);

  CHECK_THROWS(file_digest("test_digest_missing.bin"));

  std::remove("test_digest_a.bin");
  std::remove("test_digest_b.bin");
}

TEST_CASE("run manifest records command, seed and file digests") {
  {
    std::ofstream f("test_manifest_input.txt");
    f << "input data";
  }
  {
    std::ofstream f("test_manifest_output.txt");
    f << "output data";
  }

  RunManifest m;
  m.command = "simulate --config scene.json";
  m.config = {{"duration_s", 1.0}};
  m.seed = 1234;
  m.inputs = {"test_manifest_input.txt"};
  m.outputs = {"test_manifest_output.txt"};
  m.write("test_manifest.json");

  std::ifstream in("test_manifest.json");
  REQUIRE(in.good());
  nlohmann::json j;
  in >> j;
  CHECK(j.at("command").get<std::string>() == m.command);
  CHECK(j.at("seed").get<std::uint64_t>() == 1234);
  CHECK(j.at("config").at("duration_s").get<double>() == 1.0);
  CHECK(j.contains("tool_version"));

  bool found_input = false, found_output = false;
  for (const auto& entry : j.at("inputs")) {
    if (entry.at("path").get<std::string>() == "test_manifest_input.txt") {
      found_input = true;
      CHECK(entry.at("digest").get<std::string>() ==
            file_digest("test_manifest_input.txt"));
    }
  }
  for (const auto& entry : j.at("outputs")) {
    if (entry.at("path").get<std::string>() == "test_manifest_output.txt") {
      found_output = true;
      CHECK(entry.at("digest").get<std::string>() ==
            file_digest("test_manifest_output.txt"));
    }
  }
  CHECK(found_input);
  CHECK(found_output);

  std::remove("test_manifest_input.txt");
  std::remove("test_manifest_output.txt");
  std::remove("test_manifest.json");
}
