//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "confdiff/datakit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "confdiff/errors.hpp"

namespace confdiff {

using nlohmann::json;

std::string_view split_name(Split s) {
  switch (s) {
  case Split::kTrain:
    return "train";
  case Split::kValid:
    return "valid";
  case Split::kTest:
    return "test";
  case Split::kGenerated:
    return "generated";
  }
  return "train";
}

Split split_from_name(std::string_view name) {
  if (name == "train")
    return Split::kTrain;
  if (name == "valid")
    return Split::kValid;
  if (name == "test")
    return Split::kTest;
  if (name == "generated")
    return Split::kGenerated;
  throw InvalidInput("unknown split '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Toy data

void ToySpec::validate() const {
  if (chain_length < 4)
    throw InvalidInput("toy chain needs at least 4 atoms");
  if (rotatable_bond < 1 || rotatable_bond > chain_length - 3)
    throw InvalidInput("rotatable bond must have at least one atom on either side");
  if (mode_torsions_deg.empty())
    throw InvalidInput("toy spec needs at least one mode");
  if (!(jitter >= 0.0))
    throw InvalidInput("jitter must be non-negative");
  if (conformers_per_molecule < static_cast<int>(mode_torsions_deg.size()))
    throw InvalidInput("conformers_per_molecule must be >= number of modes");
  if (train_molecules < 0 || valid_molecules < 0 || test_molecules < 0)
    throw InvalidInput("molecule counts must be non-negative");
  if (element_types < 1)
    throw InvalidInput("element_types must be positive");
  if (!(bond_angle_deg > 0.0 && bond_angle_deg < 180.0))
    throw InvalidInput("bond angle must lie in (0, 180)");
}

namespace {

double bond_length(int a, int b) { return 1.2 + 0.1 * (a + b); }

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

// Places d from a, b, c given |cd|, angle bcd and dihedral abcd.
Eigen::Vector3d place_atom(const Eigen::Vector3d &a, const Eigen::Vector3d &b,
                           const Eigen::Vector3d &c, double length, double angle,
                           double torsion) {
  const Eigen::Vector3d bc = (c - b).normalized();
  const Eigen::Vector3d n = (b - a).cross(bc).normalized();
  const Eigen::Vector3d m = n.cross(bc);
  const Eigen::Vector3d local(-length * std::cos(angle), length * std::sin(angle) * std::cos(torsion),
                              length * std::sin(angle) * std::sin(torsion));
  return c + local.x() * bc + local.y() * m + local.z() * n;
}

}  // namespace

Conformation toy_template(const ToySpec &spec, std::span<const int> elements, double torsion_deg) {
  const int n = spec.chain_length;
  if (static_cast<int>(elements.size()) != n)
    throw InvalidInput("toy_template: element count does not match chain length");
  const double angle = radians(spec.bond_angle_deg);
  std::vector<Eigen::Vector3d> pos(static_cast<std::size_t>(n));
  pos[0] = Eigen::Vector3d::Zero();
  pos[1] = Eigen::Vector3d(bond_length(elements[0], elements[1]), 0.0, 0.0);
  {
    const double r = bond_length(elements[1], elements[2]);
    pos[2] = pos[1] + r * Eigen::Vector3d(-std::cos(angle), std::sin(angle), 0.0);
  }
  for (int k = 3; k < n; ++k) {
    // Dihedral (k-3, k-2, k-1, k) turns about the bond (k-2, k-1).
    const double torsion = (k - 2 == spec.rotatable_bond) ? torsion_deg : 180.0;
    pos[k] = place_atom(pos[k - 3], pos[k - 2], pos[k - 1],
                        bond_length(elements[k - 1], elements[k]), angle, radians(torsion));
  }
  Conformation c(n, 3);
  for (int k = 0; k < n; ++k)
    c.row(k) = pos[k].transpose();
  return project_com_free(c);
}

int nearest_mode(const Conformation &c, std::span<const Conformation> templates) {
  if (templates.empty())
    throw InvalidInput("nearest_mode: no templates");
  int best = 0;
  double best_rmsd = rmsd(c, templates[0]);
  for (std::size_t k = 1; k < templates.size(); ++k) {
    const double r = rmsd(c, templates[k]);
    if (r < best_rmsd) {
      best_rmsd = r;
      best = static_cast<int>(k);
    }
  }
  return best;
}

ToyDataset generate_toy_dataset(const ToySpec &spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::uniform_int_distribution<int> element_dist(0, spec.element_types - 1);
  const int modes = static_cast<int>(spec.mode_torsions_deg.size());
  std::uniform_int_distribution<int> mode_dist(0, modes - 1);
  const double sigma = spec.jitter / std::sqrt(3.0);

  ToyDataset out;
  const int total = spec.train_molecules + spec.valid_molecules + spec.test_molecules;
  for (int m = 0; m < total; ++m) {
    const Split split = m < spec.train_molecules                         ? Split::kTrain
                        : m < spec.train_molecules + spec.valid_molecules ? Split::kValid
                                                                          : Split::kTest;
    std::vector<int> elements(static_cast<std::size_t>(spec.chain_length));
    for (int &e : elements)
      e = element_dist(rng);
    std::vector<Atom> atoms;
    std::vector<Bond> bonds;
    for (int k = 0; k < spec.chain_length; ++k) {
      atoms.push_back({elements[k]});
      if (k > 0)
        bonds.push_back({k - 1, k, BondType::kSingle});
    }

    ModeLabels labels;
    char id[32];
    std::snprintf(id, sizeof id, "toy-%06d", m);
    labels.id = id;
    for (double torsion : spec.mode_torsions_deg)
      labels.templates.push_back(toy_template(spec, elements, torsion));
    for (int a = 0; a < modes; ++a)
      for (int b = a + 1; b < modes; ++b)
        if (rmsd(labels.templates[a], labels.templates[b]) <= 3.0 * spec.jitter)
          throw InvalidInput("toy modes " + std::to_string(a) + " and " + std::to_string(b) +
                             " are not separated by more than 3x jitter");

    for (int c = 0; c < spec.conformers_per_molecule; ++c)
      labels.modes.push_back(c < modes ? c : mode_dist(rng));
    std::shuffle(labels.modes.begin(), labels.modes.end(), rng);

    DatasetRecord rec;
    rec.id = labels.id;
    rec.split = split;
    rec.graph = MolecularGraph(std::move(atoms), std::move(bonds));
    for (int mode : labels.modes) {
      RigidTransform pose;
      pose.rotation = random_rotation(rng);
      Conformation c = apply_transform(labels.templates[mode], pose);
      c += sigma * standard_normal(spec.chain_length, rng);
      rec.conformers.push_back(project_com_free(c));
    }
    out.records.push_back(std::move(rec));
    out.labels.push_back(std::move(labels));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text formats

namespace {

json conformation_to_json(const Conformation &c) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    rows.push_back({c(i, 0), c(i, 1), c(i, 2)});
  return rows;
}

Conformation conformation_from_json(const json &j, int n) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw ParseError("conformation must list " + std::to_string(n) + " rows");
  Conformation c(n, 3);
  for (int i = 0; i < n; ++i) {
    const json &row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || row.size() != 3)
      throw ParseError("conformation row " + std::to_string(i) + " must have 3 numbers");
    for (int k = 0; k < 3; ++k)
      c(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return c;
}

std::string header_line(std::string_view format, std::size_t records) {
  return json{{"format", format},
              {"version", std::to_string(kFormatMajor) + ".0"},
              {"records", records}}
      .dump();
}

void check_version(const std::string &version, int line) {
  const auto dot = version.find('.');
  int major = -1;
  try {
    major = std::stoi(version.substr(0, dot));
  } catch (const std::exception &) {
    throw ParseError("line " + std::to_string(line) + ": malformed version '" + version + "'");
  }
  if (major != kFormatMajor)
    throw ParseError("line " + std::to_string(line) + ": unsupported major version " +
                     std::to_string(major));
}

void check_header(const json &j, std::string_view format, int line) {
  if (!j.is_object() || !j.contains("format") || j["format"] != format)
    throw ParseError("line " + std::to_string(line) + ": expected a " + std::string(format) +
                     " header");
  if (!j.contains("version") || !j["version"].is_string())
    throw ParseError("line " + std::to_string(line) + ": field 'version' missing");
  check_version(j["version"].get<std::string>(), line);
}

template <class Fn>
void for_each_json_line(std::istream &is, std::string_view format, Fn &&fn) {
  std::string text;
  int line = 0;
  bool header = false;
  std::optional<std::size_t> expected;
  std::size_t seen = 0;
  while (std::getline(is, text)) {
    ++line;
    if (text.empty())
      continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error &e) {
      throw ParseError("line " + std::to_string(line) + ": " + e.what());
    }
    if (!header) {
      check_header(j, format, line);
      if (j.contains("records")) {
        if (!j["records"].is_number_unsigned())
          throw ParseError("line " + std::to_string(line) + ": field 'records' must be a count");
        expected = j["records"].get<std::size_t>();
      }
      header = true;
      continue;
    }
    ++seen;
    try {
      fn(j, line);
    } catch (const json::exception &e) {
      throw ParseError("line " + std::to_string(line) + ": " + e.what());
    } catch (const InvalidInput &e) {
      throw ParseError("line " + std::to_string(line) + ": " + e.what());
    }
  }
  if (!header)
    throw ParseError("missing " + std::string(format) + " header");
  if (expected && *expected != seen)
    throw ParseError("line " + std::to_string(line + 1) + ": header promises " +
                     std::to_string(*expected) + " records but the file holds " +
                     std::to_string(seen) + " (truncated?)");
}

const json &field(const json &j, const char *name, int line) {
  if (!j.is_object() || !j.contains(name))
    throw ParseError("line " + std::to_string(line) + ": field '" + name + "' missing");
  return j[name];
}

}  // namespace

void write_dataset(std::ostream &os, std::span<const DatasetRecord> records) {
  os << header_line(kDatasetFormat, records.size()) << '\n';
  for (const DatasetRecord &r : records) {
    json atoms = json::array();
    for (const Atom &a : r.graph.atoms())
      atoms.push_back(a.element);
    json bonds = json::array();
    for (const Bond &b : r.graph.bonds())
      bonds.push_back({b.i, b.j, static_cast<int>(b.type)});
    json confs = json::array();
    for (const Conformation &c : r.conformers)
      confs.push_back(conformation_to_json(c));
    json rec = {{"id", r.id},          {"split", split_name(r.split)},
                {"n", r.graph.atom_count()}, {"atoms", atoms},
                {"bonds", bonds},      {"conformers", confs}};
    os << rec.dump() << '\n';
  }
}

std::vector<DatasetRecord> read_dataset(std::istream &is) {
  std::vector<DatasetRecord> out;
  std::set<std::string> ids;
  for_each_json_line(is, kDatasetFormat, [&](const json &j, int line) {
    DatasetRecord r;
    r.id = field(j, "id", line).get<std::string>();
    if (!ids.insert(r.id).second)
      throw ParseError("line " + std::to_string(line) + ": duplicate id '" + r.id + "'");
    r.split = split_from_name(field(j, "split", line).get<std::string>());
    const int n = field(j, "n", line).get<int>();
    const json &atoms_j = field(j, "atoms", line);
    if (!atoms_j.is_array() || static_cast<int>(atoms_j.size()) != n)
      throw ParseError("line " + std::to_string(line) + ": field 'atoms' must list n entries");
    std::vector<Atom> atoms;
    for (const json &a : atoms_j)
      atoms.push_back({a.get<int>()});
    std::vector<Bond> bonds;
    for (const json &b : field(j, "bonds", line)) {
      if (!b.is_array() || b.size() != 3)
        throw ParseError("line " + std::to_string(line) + ": field 'bonds' entries are [i, j, type]");
      bonds.push_back({b[0].get<int>(), b[1].get<int>(), bond_type_from_code(b[2].get<int>())});
    }
    r.graph = MolecularGraph(std::move(atoms), std::move(bonds));
    for (const json &c : field(j, "conformers", line)) {
      try {
        r.conformers.push_back(conformation_from_json(c, n));
      } catch (const ParseError &e) {
        throw ParseError("line " + std::to_string(line) + ": field 'conformers': " + e.what());
      }
    }
    out.push_back(std::move(r));
  });
  return out;
}

void write_mode_labels(std::ostream &os, std::span<const ModeLabels> labels) {
  os << header_line(kModesFormat, labels.size()) << '\n';
  for (const ModeLabels &l : labels) {
    json templates = json::array();
    for (const Conformation &c : l.templates)
      templates.push_back(conformation_to_json(c));
    os << json{{"id", l.id}, {"modes", l.modes}, {"templates", templates}}.dump() << '\n';
  }
}

std::vector<ModeLabels> read_mode_labels(std::istream &is) {
  std::vector<ModeLabels> out;
  for_each_json_line(is, kModesFormat, [&](const json &j, int line) {
    ModeLabels l;
    l.id = field(j, "id", line).get<std::string>();
    l.modes = field(j, "modes", line).get<std::vector<int>>();
    for (const json &c : field(j, "templates", line))
      l.templates.push_back(conformation_from_json(c, static_cast<int>(c.size())));
    out.push_back(std::move(l));
  });
  return out;
}

namespace {

std::ofstream open_out(const std::filesystem::path &path, std::ios::openmode mode = {}) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::out | std::ios::trunc | mode);
  if (!os)
    throw InvalidInput("cannot open '" + path.string() + "' for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path &path, std::ios::openmode mode = {}) {
  std::ifstream is(path, std::ios::in | mode);
  if (!is)
    throw InvalidInput("cannot open '" + path.string() + "'");
  return is;
}

}  // namespace

void write_dataset_file(const std::filesystem::path &path, std::span<const DatasetRecord> records) {
  auto os = open_out(path);
  write_dataset(os, records);
}

std::vector<DatasetRecord> read_dataset_file(const std::filesystem::path &path) {
  auto is = open_in(path);
  try {
    return read_dataset(is);
  } catch (const ParseError &e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_mode_labels_file(const std::filesystem::path &path, std::span<const ModeLabels> labels) {
  auto os = open_out(path);
  write_mode_labels(os, labels);
}

std::vector<ModeLabels> read_mode_labels_file(const std::filesystem::path &path) {
  auto is = open_in(path);
  try {
    return read_mode_labels(is);
  } catch (const ParseError &e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is written in host byte order");

void write_checkpoint(std::ostream &os, const Checkpoint &ckpt) {
  json tensors = json::array();
  for (const auto &[name, p] : ckpt.params.entries())
    tensors.push_back({{"name", name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  json meta = {{"config", json::parse(ckpt.config_json.empty() ? "{}" : ckpt.config_json)},
               {"step", ckpt.params.step()},
               {"rng_state", ckpt.rng_state},
               {"tensors", tensors}};
  os << kCheckpointMagic << ' ' << kFormatMajor << ".0\n" << meta.dump() << '\n';
  for (const auto &[name, p] : ckpt.params.entries())
    for (const diff::Tensor *t : {&p.value, &p.first_moment, &p.second_moment})
      os.write(reinterpret_cast<const char *>(t->data()),
               static_cast<std::streamsize>(t->size() * sizeof(double)));
  if (!os)
    throw InvalidInput("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream &is) {
  std::string magic_line;
  if (!std::getline(is, magic_line))
    throw ParseError("checkpoint line 1: empty file");
  std::istringstream magic(magic_line);
  std::string word, version;
  magic >> word >> version;
  if (word != kCheckpointMagic)
    throw ParseError("checkpoint line 1: not a confdiff checkpoint");
  check_version(version, 1);

  std::string meta_line;
  if (!std::getline(is, meta_line))
    throw ParseError("checkpoint line 2: metadata missing");
  json meta;
  try {
    meta = json::parse(meta_line);
  } catch (const json::parse_error &e) {
    throw ParseError(std::string("checkpoint line 2: ") + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.config_json = field(meta, "config", 2).dump();
    ckpt.rng_state = field(meta, "rng_state", 2).get<std::string>();
    ckpt.params.set_step(field(meta, "step", 2).get<std::int64_t>());
    for (const json &t : field(meta, "tensors", 2)) {
      const std::string name = t.at("name").get<std::string>();
      const Eigen::Index rows = t.at("rows").get<Eigen::Index>();
      const Eigen::Index cols = t.at("cols").get<Eigen::Index>();
      if (rows < 0 || cols < 0)
        throw ParseError("checkpoint tensor '" + name + "' has a negative dimension");
      ckpt.params.add(name, diff::Tensor(rows, cols));
      diff::Parameter &p = ckpt.params.at(name);
      p.first_moment.resize(rows, cols);
      p.second_moment.resize(rows, cols);
      for (diff::Tensor *dst : {&p.value, &p.first_moment, &p.second_moment}) {
        is.read(reinterpret_cast<char *>(dst->data()),
                static_cast<std::streamsize>(dst->size() * sizeof(double)));
        if (!is)
          throw ParseError("checkpoint payload truncated in tensor '" + name + "'");
      }
    }
  } catch (const json::exception &e) {
    throw ParseError(std::string("checkpoint line 2: ") + e.what());
  } catch (const InvalidInput &e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  if (is.peek() != std::char_traits<char>::eof())
    throw ParseError("checkpoint has trailing bytes after the payload");
  return ckpt;
}

void write_checkpoint_file(const std::filesystem::path &path, const Checkpoint &ckpt) {
  auto os = open_out(path, std::ios::binary);
  write_checkpoint(os, ckpt);
}

Checkpoint read_checkpoint_file(const std::filesystem::path &path) {
  auto is = open_in(path, std::ios::binary);
  try {
    return read_checkpoint(is);
  } catch (const ParseError &e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_text_file(const std::filesystem::path &path) {
  auto is = open_in(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path &path, std::string_view text) {
  auto os = open_out(path, std::ios::binary);
  os << text;
}

std::string file_hash(const std::filesystem::path &path) { return fnv1a_hex(read_text_file(path)); }

}  // namespace confdiff
