#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "tnop/datagen.hpp"
#include "tnop/io.hpp"
#include "tnop/training.hpp"

using namespace tnop;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tnop_io_" + name);
  fs::remove_all(p);
  return p;
}

bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

void expect_same_dataset(const Dataset& a, const Dataset& b) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.problem, b.problem);
  EXPECT_EQ(a.channels_in, b.channels_in);
  EXPECT_EQ(a.channels_out, b.channels_out);
  EXPECT_EQ(a.d_ic, b.d_ic);
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_EQ(a.points(), b.points());
  EXPECT_TRUE(same(a.grid.coordinates(a.domain), b.grid.coordinates(b.domain)));
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(same(a.inputs[i], b.inputs[i]));
    EXPECT_TRUE(same(a.outputs[i], b.outputs[i]));
  }
  ASSERT_EQ(a.ic.size(), b.ic.size());
  for (std::size_t i = 0; i < a.ic.size(); ++i) EXPECT_TRUE((a.ic[i].array() == b.ic[i].array()).all());
}

Model small_model(std::uint64_t seed) {
  ModelConfig c;
  c.dim = 1;
  c.d_u = 1;
  c.d_z = 2;
  c.d_model = 8;
  c.heads = 2;
  c.layers = 2;
  c.d_ic = 2;
  Model m;
  m.params = init_parameters(c, seed);
  const Dataset d = lorenz63_dataset(4, LorenzSpec{}, seed);
  m.normalizer = fit_normalizer(d);
  return m;
}

}  // namespace

TEST(DatasetIo, RoundTripUniform) {
  const Dataset d = lorenz63_dataset(3, LorenzSpec{}, 2);
  const fs::path dir = scratch("uniform");
  write_dataset(d, dir);
  expect_same_dataset(d, read_dataset(dir));
  // Sizes follow the container law: 8 bytes per value, sample-major.
  EXPECT_EQ(fs::file_size(dir / "inputs.bin"), 3u * 201 * 1 * 8);
  EXPECT_EQ(fs::file_size(dir / "outputs.bin"), 3u * 201 * 2 * 8);
  EXPECT_EQ(fs::file_size(dir / "ic.bin"), 3u * 2 * 8);
  EXPECT_FALSE(fs::exists(dir / "coords.bin"));
}

TEST(DatasetIo, RoundTripIrregularAnd2d) {
  const GridSpec g = irregular_time_grid(8, 0.25, TimeGridKind::Test);
  LorenzSpec s;
  s.T = 2.0;
  s.dt = 0.25;
  const Dataset d = lorenz63_dataset(2, s, 3, &g);
  const fs::path dir = scratch("irregular");
  write_dataset(d, dir);
  EXPECT_EQ(fs::file_size(dir / "coords.bin"), 7u * 8);
  expect_same_dataset(d, read_dataset(dir));

  DarcySpec ds;
  ds.resolution = 9;
  const Dataset dd = darcy_dataset(2, ds, 4);
  const fs::path d2 = scratch("darcy");
  write_dataset(dd, d2);
  EXPECT_EQ(fs::file_size(d2 / "inputs.bin"), 2u * 81 * 8);
  EXPECT_FALSE(fs::exists(d2 / "ic.bin"));
  expect_same_dataset(dd, read_dataset(d2));
}

TEST(DatasetIo, MetaIsAFixedPoint) {
  const Dataset d = cde_dataset(2, CdeSpec{}, 5);
  const fs::path a = scratch("meta_a"), b = scratch("meta_b");
  write_dataset(d, a);
  write_dataset(read_dataset(a), b);
  EXPECT_EQ(read_text(a / "meta.json"), read_text(b / "meta.json"));
  const auto meta = nlohmann::json::parse(read_text(a / "meta.json"));
  EXPECT_EQ(meta.at("n_samples").get<int>(), 2);
  EXPECT_EQ(meta.at("dtype").get<std::string>(), "f64");
  EXPECT_TRUE(meta.at("generator").is_object());
}

TEST(DatasetIo, DetectsTruncationAndCorruption) {
  const Dataset d = lorenz63_dataset(2, LorenzSpec{}, 6);
  const fs::path dir = scratch("trunc");
  write_dataset(d, dir);
  fs::resize_file(dir / "outputs.bin", fs::file_size(dir / "outputs.bin") - 8);
  EXPECT_THROW(read_dataset(dir), IoError);

  write_dataset(d, dir);
  write_text(dir / "meta.json", "{ not json");
  EXPECT_THROW(read_dataset(dir), IoError);

  write_dataset(d, dir);
  auto meta = nlohmann::json::parse(read_text(dir / "meta.json"));
  meta["schema_version"] = 99;
  write_text(dir / "meta.json", meta.dump());
  EXPECT_THROW(read_dataset(dir), IoError);

  EXPECT_THROW(read_dataset(scratch("missing")), IoError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const Model m = small_model(7);
  const fs::path f = scratch("ckpt.bin");
  write_checkpoint(m, f);
  const Model r = read_checkpoint(f);
  EXPECT_EQ(checkpoint_header(m), checkpoint_header(r));
  EXPECT_TRUE((flatten(m.params).array() == flatten(r.params).array()).all());
  const Dataset d = lorenz63_dataset(1, LorenzSpec{}, 9);
  EXPECT_TRUE(same(predict(m, d.input(0), d.ic[0]), predict(r, d.input(0), d.ic[0])));
}

TEST(Checkpoint, PatchedRoundTrip) {
  ModelConfig c;
  c.variant = Variant::FANO;
  c.dim = 2;
  c.d_model = 4;
  c.heads = 1;
  c.layers = 1;
  c.patches = {2, 2};
  c.head_modes = {1, 1};
  Model m;
  m.params = init_parameters(c, 3);
  const fs::path f = scratch("fano.bin");
  write_checkpoint(m, f);
  const Model r = read_checkpoint(f);
  EXPECT_EQ(r.params.config.variant, Variant::FANO);
  EXPECT_TRUE((flatten(m.params).array() == flatten(r.params).array()).all());
}

TEST(Checkpoint, RejectsTruncatedOrForeignFiles) {
  const Model m = small_model(8);
  const fs::path f = scratch("bad.bin");
  write_checkpoint(m, f);
  fs::resize_file(f, fs::file_size(f) - 1);
  EXPECT_THROW(read_checkpoint(f), IoError);

  write_checkpoint(m, f);
  std::string bytes = read_text(f);
  bytes += "extra";
  write_text(f, bytes);
  EXPECT_THROW(read_checkpoint(f), IoError);

  write_text(f, "hello\nworld\n");
  EXPECT_THROW(read_checkpoint(f), IoError);

  write_checkpoint(m, f);
  bytes = read_text(f);
  const auto pos = bytes.find("d_model=8");
  bytes.replace(pos, 9, "d_model=9");
  write_text(f, bytes);
  EXPECT_THROW(read_checkpoint(f), IoError);
  EXPECT_THROW(read_checkpoint(scratch("nowhere.bin")), IoError);
}
