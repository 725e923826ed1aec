#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "termgnn/datagen/generator.hpp"
#include "termgnn/graph/encoding.hpp"
#include "termgnn/interp/fuzz.hpp"

namespace termgnn::datagen {

inline constexpr int kNonterminating = 0;
inline constexpr int kTerminating = 1;

struct DatasetRecord {
  std::string source;
  int graph_label = kTerminating;
  std::optional<std::map<lang::NodeId, int>> seg_mask;
  std::uint64_t gen_seed = 0;
  std::string split = "train";

  bool operator==(const DatasetRecord&) const = default;
};

class GenerationStall : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DatasetFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BuildOptions {
  interp::FuzzOptions fuzz;       // fuzz.seed is replaced per candidate
  std::size_t attempt_factor = 50;  // stall after attempt_factor * n_total candidates
  unsigned threads = 0;             // 0 = hardware concurrency
};

/// Number of training records for a split ratio (rounded to nearest).
std::size_t train_count(std::size_t n_total, double split_ratio);

/// Generates and labels candidates until n_total / 2 of each class exist.
/// Each class is split by split_ratio; train records come first, with
/// classes alternating inside each split. n_total must be even.
std::vector<DatasetRecord> build_classification_dataset(const GeneratorConfig& cfg, std::size_t n_total,
                                                        double split_ratio, const BuildOptions& opts = {});

/// Keeps only nonterminating candidates; the mask marks the culprit loop.
std::vector<DatasetRecord> build_segmentation_dataset(const GeneratorConfig& cfg, std::size_t n_total,
                                                      double split_ratio, const BuildOptions& opts = {});

/// Labels one program. The program is labeled after printing and re-parsing,
/// so node ids match those of the stored source.
interp::Label label_program(const lang::Program& p, const interp::FuzzOptions& fuzz);

struct DatasetMeta {
  std::string kind;  // "clf" or "seg"
  GeneratorConfig config;
  std::size_t n_total = 0;
  double split_ratio = 0.8;
  std::map<std::string, std::size_t> counts;
  std::string vocab_file = "vocab.json";
  interp::FuzzOptions fuzz;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<DatasetRecord> records;
  graph::Vocabulary vocab;
};

/// Vocabulary over all records.
graph::Vocabulary dataset_vocab(const std::vector<DatasetRecord>& records);

std::string record_to_json(const DatasetRecord& r);
DatasetRecord record_from_json(const std::string& line);

/// Writes data.jsonl, meta.json and the vocabulary file into dir.
void write_dataset(const std::filesystem::path& dir, const Dataset& d);
/// Throws DatasetFormatError on malformed files.
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace termgnn::datagen
