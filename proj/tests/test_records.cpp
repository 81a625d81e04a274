#include <catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "lvt/records.hpp"

using lvt::json;

TEST_CASE("provenance strings round-trip", "[records]") {
  for (auto p : {lvt::Provenance::analytic, lvt::Provenance::mc_search, lvt::Provenance::oracle, lvt::Provenance::bell,
                 lvt::Provenance::chsh})
    CHECK(lvt::provenance_from_string(lvt::to_string(p)) == p);
  CHECK(std::string(lvt::to_string(lvt::Provenance::mc_search)) == "mc-search");
  CHECK_THROWS_AS(lvt::provenance_from_string("guess"), lvt::InvalidInput);
}

TEST_CASE("RunRecord JSON round-trip is lossless", "[records]") {
  lvt::RunRecord r;
  r.command = "search";
  lvt::SearchConfig cfg;
  cfg.seed = 12345678901234567ULL;
  cfg.step_scale = 0.1 + 1e-17;
  r.config = cfg;
  r.seed = cfg.seed;
  r.estimates = {{0.37123456789012345, 0.0011, 1000, lvt::Provenance::mc_search, cfg.seed, 987654321},
                 {1.0 / 3.0, 0.0, 0, lvt::Provenance::analytic, 0, 0}};
  r.wall_time_s = 12.5;
  r.details["note"] = "x";
  const auto text = json(r).dump();
  const auto back = json::parse(text).get<lvt::RunRecord>();
  CHECK(back == r);
  CHECK(json::parse(text).at("version") == lvt::kVersion);
  CHECK(back.config.get<lvt::SearchConfig>().seed == cfg.seed);
}

TEST_CASE("CSV round-trip keeps full precision", "[records]") {
  std::vector<lvt::VisibilityEstimate> es{{0.1 + 0.2, 1e-17, 3, lvt::Provenance::mc_search, 7, 100},
                                          {2.0 / 3.0, 0.0, 3, lvt::Provenance::bell, 0, 5}};
  const auto text = lvt::to_csv(es, {1.5, 0.25});
  CHECK(text.rfind("n,visibility,std_error,provenance,seed,iterations,wall_time_s\n", 0) == 0);
  CHECK(lvt::estimates_from_csv(text) == es);
  CHECK_THROWS_AS(lvt::estimates_from_csv("a,b\n"), lvt::InvalidInput);
  CHECK_THROWS_AS(lvt::estimates_from_csv(std::string(lvt::kCsvHeader) + "\n1,2\n"), lvt::InvalidInput);
}

TEST_CASE("settings JSON loader normalizes and validates", "[records]") {
  const auto s = lvt::settings_from_json(json::parse(R"({"a": [[2, 0, 0], [0, 0, 1]], "b": [[0, 3, 0], [0, 0, -1]]})"));
  CHECK(s.size() == 2);
  CHECK(s.gram()(1, 1) == -1.0);
  CHECK(s.a_side()[0].x() == 1.0);
  const auto again = lvt::settings_from_json(lvt::settings_to_json(s));
  CHECK(again.gram() == s.gram());

  CHECK_THROWS_AS(lvt::settings_from_json(json::parse(R"({"a": [[1, 0, 0]]})")), lvt::InvalidInput);
  CHECK_THROWS_AS(lvt::settings_from_json(json::parse(R"({"a": [[1, 0]], "b": [[1, 0, 0]]})")), lvt::InvalidInput);
  CHECK_THROWS_AS(lvt::settings_from_json(json::parse(R"({"a": [[0, 0, 0]], "b": [[1, 0, 0]]})")), lvt::InvalidInput);
  CHECK_THROWS_AS(lvt::settings_from_json(json::parse(R"({"a": [[1, 0, 0]], "b": [[1, 0, 0], [0, 1, 0]]})")),
                  lvt::InvalidInput);
  CHECK_THROWS_AS(lvt::load_settings_file("/nonexistent/settings.json"), lvt::InvalidInput);

  const std::string path = "records_test_settings.json";
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_AS(lvt::load_settings_file(path), lvt::InvalidInput);
  std::remove(path.c_str());
}
