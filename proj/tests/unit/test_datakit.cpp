//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <numbers>
#include <set>
#include <sstream>

#include "confdiff/datakit.hpp"
#include "confdiff/denoiser.hpp"
#include "confdiff/errors.hpp"
#include "confdiff/verify.hpp"

namespace confdiff {
namespace {

ToySpec small_spec() {
  ToySpec s;
  s.train_molecules = 6;
  s.test_molecules = 3;
  s.valid_molecules = 2;
  return s;
}

std::string dataset_text(const std::vector<DatasetRecord> &records) {
  std::ostringstream os;
  write_dataset(os, records);
  return os.str();
}

TEST(ToyDataset, ButaneLikeChainClustersAtTwoModes) {
  ToySpec spec;
  spec.chain_length = 4;
  spec.rotatable_bond = 1;
  spec.jitter = 0.02;
  spec.conformers_per_molecule = 10;
  spec.train_molecules = 5;
  spec.test_molecules = 0;
  const ToyDataset d = generate_toy_dataset(spec, 3);
  for (std::size_t m = 0; m < d.records.size(); ++m) {
    const auto &confs = d.records[m].conformers;
    const auto &labels = d.labels[m];
    double within = 0, between = 1e300;
    for (std::size_t a = 0; a < confs.size(); ++a) {
      EXPECT_EQ(nearest_mode(confs[a], labels.templates), labels.modes[a]);
      for (std::size_t b = a + 1; b < confs.size(); ++b) {
        const double r = rmsd(confs[a], confs[b]);
        if (labels.modes[a] == labels.modes[b])
          within = std::max(within, r);
        else
          between = std::min(between, r);
      }
    }
    EXPECT_LT(within, between) << d.records[m].id;
    EXPECT_GT(rmsd(labels.templates[0], labels.templates[1]), 3 * spec.jitter);
  }
}

TEST(ToyDataset, EveryRecordCoversAllModes) {
  const ToyDataset d = generate_toy_dataset(small_spec(), 4);
  for (const ModeLabels &l : d.labels) {
    const std::set<int> modes(l.modes.begin(), l.modes.end());
    EXPECT_EQ(modes.size(), 2u);
  }
}

TEST(ToyDataset, SeedGivesByteIdenticalFile) {
  EXPECT_EQ(dataset_text(generate_toy_dataset(small_spec(), 5).records),
            dataset_text(generate_toy_dataset(small_spec(), 5).records));
  EXPECT_NE(dataset_text(generate_toy_dataset(small_spec(), 5).records),
            dataset_text(generate_toy_dataset(small_spec(), 6).records));
}

TEST(ToyDataset, SingleModeStaysWithinJitterBound) {
  ToySpec spec = small_spec();
  spec.mode_torsions_deg = {180.0};
  spec.conformers_per_molecule = 20;
  const ToyDataset d = generate_toy_dataset(spec, 7);
  for (std::size_t m = 0; m < d.records.size(); ++m)
    for (const Conformation &c : d.records[m].conformers)
      EXPECT_LT(rmsd(c, d.labels[m].templates[0]), 3 * spec.jitter);
}

TEST(ToyDataset, TemplateHasRequestedGeometry) {
  ToySpec spec;
  const std::vector<int> elements = {0, 1, 2, 0, 1, 2, 0, 1};
  const Conformation c = toy_template(spec, elements, 60.0);
  for (int k = 1; k < 8; ++k)
    EXPECT_NEAR((c.row(k) - c.row(k - 1)).norm(), 1.2 + 0.1 * (elements[k] + elements[k - 1]), 1e-12);
  for (int k = 1; k < 7; ++k) {
    const Eigen::Vector3d u = (c.row(k - 1) - c.row(k)).transpose().normalized();
    const Eigen::Vector3d v = (c.row(k + 1) - c.row(k)).transpose().normalized();
    EXPECT_NEAR(std::acos(u.dot(v)) * 180 / std::numbers::pi, 109.5, 1e-9);
  }
  // Dihedral about bond (3, 4).
  const Eigen::Vector3d b1 = (c.row(3) - c.row(2)).transpose(), b2 = (c.row(4) - c.row(3)).transpose(),
                        b3 = (c.row(5) - c.row(4)).transpose();
  const Eigen::Vector3d n1 = b1.cross(b2), n2 = b2.cross(b3);
  const double phi = std::atan2(b2.normalized().dot(n1.cross(n2)), n1.dot(n2));
  EXPECT_NEAR(std::abs(phi) * 180 / std::numbers::pi, 60.0, 1e-9);
  EXPECT_LT(center_of_mass(c).norm(), 1e-12);
}

TEST(ToyDataset, RejectsInseparableModes) {
  ToySpec spec = small_spec();
  spec.mode_torsions_deg = {180.0, 179.0};
  EXPECT_THROW(generate_toy_dataset(spec, 1), InvalidInput);
  spec = small_spec();
  spec.rotatable_bond = 0;
  EXPECT_THROW(generate_toy_dataset(spec, 1), InvalidInput);
}

TEST(ToyDataset, SplitsAreDisjointById) {
  const ToyDataset d = generate_toy_dataset(small_spec(), 8);
  std::set<std::string> ids;
  int test = 0, valid = 0;
  for (const DatasetRecord &r : d.records) {
    EXPECT_TRUE(ids.insert(r.id).second);
    test += r.split == Split::kTest;
    valid += r.split == Split::kValid;
  }
  EXPECT_EQ(test, 3);
  EXPECT_EQ(valid, 2);
}

TEST(DatasetFormat, RoundTripIsLossless) {
  const ToyDataset d = generate_toy_dataset(small_spec(), 9);
  std::istringstream is(dataset_text(d.records));
  const std::vector<DatasetRecord> back = read_dataset(is);
  ASSERT_EQ(back.size(), d.records.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    EXPECT_EQ(back[k].id, d.records[k].id);
    EXPECT_EQ(back[k].split, d.records[k].split);
    EXPECT_TRUE(back[k].graph == d.records[k].graph);
    ASSERT_EQ(back[k].conformers.size(), d.records[k].conformers.size());
    for (std::size_t c = 0; c < back[k].conformers.size(); ++c)
      EXPECT_EQ(back[k].conformers[c], d.records[k].conformers[c]);
  }
  std::ostringstream modes;
  write_mode_labels(modes, d.labels);
  std::istringstream mis(modes.str());
  const auto labels = read_mode_labels(mis);
  ASSERT_EQ(labels.size(), d.labels.size());
  EXPECT_EQ(labels[2].modes, d.labels[2].modes);
  EXPECT_EQ(labels[2].templates[1], d.labels[2].templates[1]);
}

TEST(DatasetFormat, EveryTruncationIsAParseError) {
  ToySpec spec = small_spec();
  spec.train_molecules = 2;
  spec.valid_molecules = 0;
  spec.test_molecules = 1;
  spec.conformers_per_molecule = 2;
  const std::string text = dataset_text(generate_toy_dataset(spec, 10).records);
  for (std::size_t cut = 0; cut + 1 < text.size(); cut += 7) {
    std::istringstream is(text.substr(0, cut));
    EXPECT_THROW(read_dataset(is), ParseError) << "cut at " << cut;
  }
}

TEST(DatasetFormat, ErrorsNameLineAndField) {
  std::istringstream missing(
      "{\"format\":\"confdiff-dataset\",\"version\":\"1.0\"}\n{\"id\":\"a\",\"split\":\"train\"}\n");
  try {
    read_dataset(missing);
    FAIL();
  } catch (const ParseError &e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'n'"), std::string::npos) << msg;
  }
  std::istringstream future("{\"format\":\"confdiff-dataset\",\"version\":\"2.0\"}\n");
  EXPECT_THROW(read_dataset(future), ParseError);
  std::istringstream wrong("{\"format\":\"confdiff-modes\",\"version\":\"1.0\"}\n");
  EXPECT_THROW(read_dataset(wrong), ParseError);
}

TEST(DatasetFormat, DuplicateIdsRejected) {
  const ToyDataset d = generate_toy_dataset(small_spec(), 11);
  std::vector<DatasetRecord> dup = {d.records[0], d.records[0]};
  std::istringstream is(dataset_text(dup));
  EXPECT_THROW(read_dataset(is), ParseError);
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  Checkpoint ckpt;
  ckpt.config_json = "{\"x\":1}";
  ckpt.rng_state = "1 2 3";
  init_denoiser_parameters(verify::compact_config(), ckpt.params, 12);
  ckpt.params.at("gfn.0.field.0.w").first_moment.setConstant(0.125);
  ckpt.params.set_step(77);
  std::ostringstream os;
  write_checkpoint(os, ckpt);
  std::istringstream is(os.str());
  const Checkpoint back = read_checkpoint(is);
  EXPECT_EQ(back.config_json, ckpt.config_json);
  EXPECT_EQ(back.rng_state, ckpt.rng_state);
  EXPECT_EQ(back.params.step(), 77);
  ASSERT_EQ(back.params.entries().size(), ckpt.params.entries().size());
  for (const auto &[name, p] : ckpt.params.entries()) {
    const diff::Parameter &q = back.params.at(name);
    EXPECT_EQ(std::memcmp(p.value.data(), q.value.data(), sizeof(double) * p.value.size()), 0) << name;
    EXPECT_EQ(p.first_moment, q.first_moment);
    EXPECT_EQ(p.second_moment, q.second_moment);
  }
}

TEST(Checkpoint, TruncationAndTrailingBytesDetected) {
  Checkpoint ckpt;
  ckpt.config_json = "{}";
  ckpt.params.add("w", diff::Tensor::Constant(3, 2, 1.5));
  std::ostringstream os;
  write_checkpoint(os, ckpt);
  const std::string bytes = os.str();
  for (std::size_t cut = 0; cut < bytes.size(); cut += 5) {
    std::istringstream is(bytes.substr(0, cut));
    EXPECT_THROW(read_checkpoint(is), ParseError) << "cut at " << cut;
  }
  std::istringstream extra(bytes + "x");
  EXPECT_THROW(read_checkpoint(extra), ParseError);
}

TEST(Hashing, KnownFnvVectors) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(Files, WriteCreatesParentsAndHashesMatchContent) {
  const auto dir = std::filesystem::temp_directory_path() / "confdiff_test_datakit";
  std::filesystem::remove_all(dir);
  const auto path = dir / "nested" / "file.txt";
  write_text_file(path, "foobar");
  EXPECT_EQ(read_text_file(path), "foobar");
  EXPECT_EQ(file_hash(path), fnv1a_hex("foobar"));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace confdiff
