#include <doctest.h>

#include <string>

#include "smld/io/toml.hpp"
#include "smld/pipeline/pipeline.hpp"

using smld::Error;
namespace toml = smld::io::toml;
namespace pipeline = smld::pipeline;

TEST_CASE("toml subset parsing") {
  toml::Table t = toml::parse_string(
      "# comment\n"
      "title = \"demo\"\n"
      "count = 42\n"
      "ratio = 2.5\n"
      "flag = true\n"
      "xs = [1, 2, 3]\n"
      "names = [\"a\", \"b\"]\n"
      "\n"
      "[section]\n"
      "nested = -7  # trailing comment\n"
      "[deep.table]\n"
      "x = 1.5e-3\n");
  CHECK(t.at("title").as_string("title") == "demo");
  CHECK(t.at("count").as_int("count") == 42);
  CHECK(t.at("ratio").as_double("ratio") == 2.5);
  CHECK(t.at("flag").as_bool("flag") == true);
  CHECK(t.at("xs").as_int_array("xs") == std::vector<int64_t>{1, 2, 3});
  CHECK(t.at("names").as_string_array("names") == std::vector<std::string>{"a", "b"});
  CHECK(t.at("section.nested").as_int("nested") == -7);
  CHECK(t.at("deep.table.x").as_double("x") == doctest::Approx(1.5e-3));
}

TEST_CASE("toml errors carry line numbers") {
  try {
    toml::parse_string("a = 1\nb = \n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  CHECK_THROWS_AS(toml::parse_string("a = 1\na = 2\n"), Error);      // duplicate key
  CHECK_THROWS_AS(toml::parse_string("a = unquoted\n"), Error);      // bare string
  CHECK_THROWS_AS(toml::parse_string("[[tables]]\nx = 1\n"), Error); // array of tables
}

TEST_CASE("lenient value parsing for CLI overrides") {
  CHECK(toml::parse_value_lenient("7").as_int("k") == 7);
  CHECK(toml::parse_value_lenient("true").as_bool("k"));
  CHECK(toml::parse_value_lenient("2.5").as_double("k") == 2.5);
  // unquoted path falls back to a plain string
  CHECK(toml::parse_value_lenient("runs/exp1").as_string("k") == "runs/exp1");
}

TEST_CASE("run config defaults and overrides") {
  toml::Table t = toml::parse_string(
      "[run]\n"
      "seed = 9\n"
      "out_dir = \"runs/x\"\n"
      "[synth]\n"
      "classes = 4\n"
      "class_frequencies_hz = [1.0, 2.0, 3.0, 4.0]\n"
      "[teacher]\n"
      "epochs = 5\n"
      "[distill]\n"
      "tau = 2.0\n"
      "stage_epochs = [3, 4, 5]\n");
  pipeline::RunConfig cfg = pipeline::parse_run_config(t);
  CHECK(cfg.seed == 9);
  CHECK(cfg.out_dir == "runs/x");
  CHECK(cfg.synth.classes == 4);
  CHECK(cfg.synth.seed == 9);  // seed propagates to every consumer
  CHECK(cfg.distill.seed == 9);
  CHECK(cfg.distill.tau == 2.0);
  CHECK(cfg.distill.lambda == 1.0);  // default
  CHECK(cfg.distill.gamma == 1.0);
  CHECK(cfg.distill.finetune_epochs == 5);
  CHECK(cfg.distill.stage_epochs == std::vector<int>{3, 4, 5});
  CHECK(cfg.teacher_train.epochs == 5);
  // teacher defaults: 4x hidden width, two blocks per stage
  CHECK(cfg.teacher_model.hidden_mult == 4.0);
  CHECK(cfg.teacher_model.blocks_per_stage == 2);
  // student inherits boundary widths from the teacher spec
  CHECK(cfg.student_model.stage_channels == cfg.teacher_model.stage_channels);
}

TEST_CASE("config validation names the offending field") {
  auto expect_field = [](const std::string& text, const std::string& needle) {
    try {
      pipeline::parse_run_config(toml::parse_string(text));
      FAIL("expected an error for ", needle);
    } catch (const Error& e) {
      CHECK(e.kind() == smld::ErrorKind::Config);
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_field("[dataset]\nsource = \"csv\"\n", "dataset.csv_path");
  expect_field("[dataset]\nsource = \"csv\"\ncsv_path = \"x.csv\"\n", "dataset.window");
  expect_field("[dataset]\nval_fraction = 1.5\n", "dataset.val_fraction");
  expect_field("[dataset]\nscaler = \"median\"\n", "dataset.scaler");
  expect_field("[distill]\ntau = 0.0\n", "tau");
  expect_field("[teacher]\nheads = [\"mlp\"]\n", "teacher.heads");
  expect_field("[synth]\nclasses = 0\n", "classes");
}

TEST_CASE("network construction from a model spec") {
  pipeline::ModelSpec spec;
  spec.stage_channels = {8, 16};
  spec.stage_strides = {2, 2};
  spec.kernel = 5;
  spec.hidden_mult = 4.0;
  spec.blocks_per_stage = 2;
  smld::nn::NetworkCfg cfg = pipeline::build_network_cfg(spec, 3, 100, 6);
  REQUIRE(cfg.stages.size() == 2);
  REQUIRE(cfg.stages[0].blocks.size() == 2);
  CHECK(cfg.stages[0].blocks[0].out_channels == 32);  // 4 x 8 hidden
  CHECK(cfg.stages[0].blocks[0].stride == 2);
  CHECK(cfg.stages[0].blocks[1].out_channels == 8);
  CHECK(cfg.stages[0].blocks[1].stride == 1);

  // plain single-conv student
  spec.hidden_mult = 0.0;
  spec.blocks_per_stage = 1;
  smld::nn::NetworkCfg plain = pipeline::build_network_cfg(spec, 3, 100, 6);
  CHECK(plain.stages[0].blocks.size() == 1);

  // boundaries agree between the two variants
  auto a = smld::nn::stage_shapes(cfg);
  auto b = smld::nn::stage_shapes(plain);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}
