#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include "speckv/errors.hpp"
#include "speckv/io.hpp"
#include "speckv/synth.hpp"

using namespace speckv;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("speckv_io_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::vector<StepRecord> corpus_with_latency(int steps) {
  const CostModel cost;
  return generate_corpus(WorldParams{}, full_grid_plan(steps), &cost);
}

std::string header() {
  std::string h;
  for (const std::string& c : step_record_columns()) h += (h.empty() ? "" : ",") + c;
  return h;
}

PredictorModel trained(const std::string& variant) {
  const auto corpus = generate_corpus(WorldParams{}, full_grid_plan(15));
  TrainConfig cfg;
  cfg.mlp.epochs = 5;
  return train_variant(variant, corpus, cfg, 3);
}

}  // namespace

TEST(Csv, RoundTrip) {
  TempDir tmp;
  const auto corpus = corpus_with_latency(5);
  write_step_records(corpus, tmp.file("c.csv"));
  EXPECT_EQ(read_step_records(tmp.file("c.csv")), corpus);
  const auto bare = generate_corpus(WorldParams{}, full_grid_plan(2));
  write_step_records(bare, tmp.file("b.csv"));
  EXPECT_EQ(read_step_records(tmp.file("b.csv")), bare);
}

TEST(Csv, ByteIdenticalRewrites) {
  TempDir tmp;
  const auto corpus = corpus_with_latency(3);
  write_step_records(corpus, tmp.file("a.csv"));
  write_step_records(corpus, tmp.file("b.csv"));
  EXPECT_EQ(read_text_file(tmp.file("a.csv")), read_text_file(tmp.file("b.csv")));
}

TEST(Csv, EmptyAndSingleRecord) {
  TempDir tmp;
  write_step_records({}, tmp.file("e.csv"));
  EXPECT_EQ(read_text_file(tmp.file("e.csv")), header() + "\n");
  EXPECT_TRUE(read_step_records(tmp.file("e.csv")).empty());
  const auto one = std::vector<StepRecord>(1, corpus_with_latency(1)[0]);
  write_step_records(one, tmp.file("o.csv"));
  const std::string text = read_text_file(tmp.file("o.csv"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}

TEST(Csv, InvariantViolationIsDiagnosed) {
  TempDir tmp;
  write_text_file(tmp.file("bad.csv"), header() + "\nx,fp16,code,4,0,5,6,1.25,1,0.5,2,0.3,\n");
  try {
    read_step_records(tmp.file("bad.csv"));
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("accepted=5"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  }
}

TEST(Csv, MalformedFieldsAndMissingColumns) {
  TempDir tmp;
  write_text_file(tmp.file("m.csv"), header() + "\nx,fp16,code,four,0,1,2,0.25,1,0.5,2,0.3,\n");
  EXPECT_THROW(read_step_records(tmp.file("m.csv")), MalformedFileError);
  write_text_file(tmp.file("h.csv"), "experiment_id,compression\nx,fp16\n");
  EXPECT_THROW(read_step_records(tmp.file("h.csv")), MalformedFileError);
  EXPECT_THROW(read_step_records(tmp.file("missing.csv")), IoError);
}

TEST(Csv, AliasesAndExtraColumnsSurvive) {
  TempDir tmp;
  std::string h = header();
  h.replace(h.find("mean_entropy_bits"), std::string("mean_entropy_bits").size(), "mean_entropy");
  write_text_file(tmp.file("a.csv"), h + ",note\nx,INT8,Math,4,3,1,2,0.25,1,0.5,2,0.3,,\"hi, there\"\n");
  const CorpusTable t = read_step_table(tmp.file("a.csv"));
  ASSERT_EQ(t.records.size(), 1u);
  EXPECT_EQ(t.records[0].compression, CompressionLevel::kInt8);
  EXPECT_EQ(t.records[0].signals.mean_entropy_bits, 1.0);
  ASSERT_EQ(t.extra_columns, std::vector<std::string>{"note"});
  EXPECT_EQ(t.extra_values[0][0], "hi, there");
  write_step_table(t, tmp.file("b.csv"));
  const CorpusTable back = read_step_table(tmp.file("b.csv"));
  EXPECT_EQ(back.records, t.records);
  EXPECT_EQ(back.extra_values, t.extra_values);
}

TEST(ModelFile, PredictionsRoundTripExactly) {
  TempDir tmp;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 1.5);
  for (const std::string v : {"ridge", "mlp16", "mlp32", "rf10"}) {
    const PredictorModel m = trained(v);
    save_model(m, tmp.file(v + ".json"));
    const PredictorModel back = load_model(tmp.file(v + ".json"));
    EXPECT_EQ(back.variant, m.variant);
    EXPECT_EQ(back.standardizer, m.standardizer);
    EXPECT_EQ(back.metadata.data_fingerprint, m.metadata.data_fingerprint);
    for (int i = 0; i < 1000; ++i) {
      FeatureVector x;
      for (double& e : x) e = z(rng);
      ASSERT_EQ(back.raw(x), m.raw(x)) << v;
      ASSERT_EQ(predict(back, x), predict(m, x)) << v;
    }
  }
}

TEST(ModelFile, TruncatedFileIsMalformed) {
  TempDir tmp;
  save_model(trained("ridge"), tmp.file("m.json"));
  const std::string text = read_text_file(tmp.file("m.json"));
  write_text_file(tmp.file("t.json"), text.substr(0, text.size() / 2));
  EXPECT_THROW(load_model(tmp.file("t.json")), MalformedFileError);
  write_text_file(tmp.file("z.json"), "");
  EXPECT_THROW(load_model(tmp.file("z.json")), MalformedFileError);
}

TEST(ModelFile, TamperedFileFailsIntegrity) {
  TempDir tmp;
  save_model(trained("ridge"), tmp.file("m.json"));
  auto doc = nlohmann::json::parse(read_text_file(tmp.file("m.json")));
  doc["parameters"]["intercept"] = doc["parameters"]["intercept"].get<double>() + 0.125;
  write_text_file(tmp.file("x.json"), doc.dump(1));
  EXPECT_THROW(load_model(tmp.file("x.json")), IntegrityError);
}

TEST(ModelFile, WrongVersionIsMalformed) {
  TempDir tmp;
  save_model(trained("ridge"), tmp.file("m.json"));
  auto doc = nlohmann::json::parse(read_text_file(tmp.file("m.json")));
  doc["format_version"] = "speckv-model/0";
  write_text_file(tmp.file("v.json"), doc.dump(1));
  EXPECT_THROW(load_model(tmp.file("v.json")), MalformedFileError);
}

TEST(ProfileFile, RoundTrip) {
  TempDir tmp;
  const auto corpus = generate_corpus(WorldParams{}, full_grid_plan(10));
  const CostModel cost;
  const ProfileTable p = build_profile(corpus, ProfileObjective::kThroughput, &cost);
  save_profile(p, tmp.file("p.json"));
  EXPECT_EQ(load_profile(tmp.file("p.json")), p);
  save_model(trained("ridge"), tmp.file("m.json"));
  EXPECT_THROW(load_profile(tmp.file("m.json")), MalformedFileError);
}

TEST(Config, UnknownKeyNamesTheKey) {
  try {
    parse_config("[run]\nseed = 3\n[world]\nvocab = 10\n");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("world.vocab"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config("[run]\nseed = abc\n"), UsageError);
  EXPECT_THROW(parse_config("[nosuch]\nx = 1\n"), UsageError);
}

TEST(Config, RenderParsesBackToSameConfig) {
  RunConfig c;
  c.seed = 99;
  c.world.vocab_size = 300;
  c.cost.per_compression[2].base_ms = 47.5;
  c.policies = {"fixed-4", "speckv-fast"};
  c.train.forest.n_trees = 10;
  c.propagate_seed();
  const RunConfig back = parse_config(render_config(c));
  EXPECT_EQ(render_config(back), render_config(c));
  EXPECT_EQ(back.world.seed, 99u);
  EXPECT_EQ(back.split.seed, 99u);
  EXPECT_EQ(back.cost.per_compression[2].base_ms, 47.5);
}

TEST(Config, SeedPropagatesToWorldAndSplit) {
  const RunConfig c = parse_config("[run]\nseed = 7\n");
  EXPECT_EQ(c.world.seed, 7u);
  EXPECT_EQ(c.split.seed, 7u);
}

TEST(Config, EnvironmentOverrides) {
  setenv("SPECKV_SEED", "1234", 1);
  setenv("SPECKV_DATA_DIR", "/tmp/somewhere", 1);
  RunConfig c;
  std::string dir;
  const auto applied = apply_environment(c, &dir);
  unsetenv("SPECKV_SEED");
  unsetenv("SPECKV_DATA_DIR");
  EXPECT_EQ(c.seed, 1234u);
  EXPECT_EQ(c.world.seed, 1234u);
  EXPECT_EQ(dir, "/tmp/somewhere");
  EXPECT_EQ(applied.at("SPECKV_SEED"), "1234");
}
