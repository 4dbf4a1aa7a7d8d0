//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "confdiff/diffcore.hpp"
#include "confdiff/geom.hpp"
#include "confdiff/molgraph.hpp"

namespace confdiff {

enum class Split { kTrain, kValid, kTest, kGenerated };

std::string_view split_name(Split s);
Split split_from_name(std::string_view name);

struct DatasetRecord {
  std::string id;
  MolecularGraph graph;
  std::vector<Conformation> conformers;
  Split split = Split::kTrain;
};

/// Ground-truth mode of every reference conformer, plus the noise-free
/// geometry of each mode (the sidecar of a toy dataset).
struct ModeLabels {
  std::string id;
  std::vector<int> modes;
  std::vector<Conformation> templates;
};

/// Chains with one rotatable bond whose torsion takes one of a few discrete
/// values. Bond lengths depend on the element codes at both ends.
struct ToySpec {
  int chain_length = 8;
  int rotatable_bond = 3;  // torsion about the bond (k, k + 1)
  std::vector<double> mode_torsions_deg = {180.0, 0.0};
  double jitter = 0.05;  // RMS displacement per atom of the reference noise
  int conformers_per_molecule = 5;
  int train_molecules = 500;
  int valid_molecules = 0;
  int test_molecules = 20;
  int element_types = 3;
  double bond_angle_deg = 109.5;

  void validate() const;
};

struct ToyDataset {
  std::vector<DatasetRecord> records;
  std::vector<ModeLabels> labels;
};

/// Noise-free chain geometry for the given elements and rotatable torsion.
Conformation toy_template(const ToySpec &spec, std::span<const int> elements,
                          double torsion_deg);

/// Deterministic in `seed`. Every molecule's reference set contains every mode.
/// Throws InvalidInput if two modes of a molecule are within 3x jitter RMSD.
ToyDataset generate_toy_dataset(const ToySpec &spec, std::uint64_t seed);

/// Index of the template closest to c in RMSD.
int nearest_mode(const Conformation &c, std::span<const Conformation> templates);

// ---------------------------------------------------------------------------
// File formats. Text formats are line-delimited JSON; the first line is a
// header {"format": ..., "version": "MAJOR.MINOR"}. Readers reject unknown
// majors and report parse errors with the line number.

inline constexpr std::string_view kDatasetFormat = "confdiff-dataset";
inline constexpr std::string_view kModesFormat = "confdiff-modes";
inline constexpr std::string_view kCheckpointMagic = "CONFDIFF-CHECKPOINT";
inline constexpr int kFormatMajor = 1;

void write_dataset(std::ostream &os, std::span<const DatasetRecord> records);
std::vector<DatasetRecord> read_dataset(std::istream &is);
void write_dataset_file(const std::filesystem::path &path, std::span<const DatasetRecord> records);
std::vector<DatasetRecord> read_dataset_file(const std::filesystem::path &path);

void write_mode_labels(std::ostream &os, std::span<const ModeLabels> labels);
std::vector<ModeLabels> read_mode_labels(std::istream &is);
void write_mode_labels_file(const std::filesystem::path &path, std::span<const ModeLabels> labels);
std::vector<ModeLabels> read_mode_labels_file(const std::filesystem::path &path);

/// Trainable state plus everything needed to resume a run bit-identically.
struct Checkpoint {
  std::string config_json;  // serialized run configuration
  std::string rng_state;    // textual engine state of the training rng
  diff::ParameterStore params;
};

/// Text header line (magic + version), one JSON metadata line, then the raw
/// little-endian float64 payload of value / first moment / second moment for
/// every tensor in header order.
void write_checkpoint(std::ostream &os, const Checkpoint &ckpt);
Checkpoint read_checkpoint(std::istream &is);
void write_checkpoint_file(const std::filesystem::path &path, const Checkpoint &ckpt);
Checkpoint read_checkpoint_file(const std::filesystem::path &path);

/// 64-bit FNV-1a, lowercase hex.
std::string fnv1a_hex(std::string_view bytes);
std::string file_hash(const std::filesystem::path &path);

std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, std::string_view text);

}  // namespace confdiff
