#include "termgnn/datagen/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "termgnn/lang/parser.hpp"
#include "termgnn/lang/printer.hpp"
#include "termgnn/util/random.hpp"

namespace termgnn::datagen {

using nlohmann::ordered_json;

std::size_t train_count(std::size_t n_total, double split_ratio) {
  if (split_ratio < 0.0 || split_ratio > 1.0) throw std::invalid_argument("split ratio must be in [0, 1]");
  return static_cast<std::size_t>(std::llround(static_cast<double>(n_total) * split_ratio));
}

interp::Label label_program(const lang::Program& p, const interp::FuzzOptions& fuzz) {
  lang::Program q = lang::parse(lang::pretty_print(p));
  return interp::fuzz_label(q, fuzz);
}

namespace {

struct Candidate {
  std::uint64_t seed = 0;
  std::string source;
  interp::Label label;
  int node_count = 0;
};

Candidate make_candidate(const GeneratorConfig& cfg, const interp::FuzzOptions& fuzz, std::uint64_t seed) {
  Candidate c;
  c.seed = seed;
  lang::Program p = generate_program(cfg, seed);
  c.source = lang::pretty_print(p);
  lang::Program q = lang::parse(c.source);
  c.node_count = q.node_count;
  interp::FuzzOptions f = fuzz;
  f.seed = seed;
  c.label = interp::fuzz_label(q, f);
  return c;
}

// Produces candidates for attempts 0, 1, 2, ... in parallel chunks and hands
// them to `take` in attempt order until it returns true.
void drive(const GeneratorConfig& cfg, const BuildOptions& opts, std::size_t max_attempts,
           const std::function<bool(Candidate&&)>& take) {
  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  const std::size_t chunk = 16 * threads;
  for (std::size_t start = 0; start < max_attempts; start += chunk) {
    std::size_t n = std::min(chunk, max_attempts - start);
    std::vector<Candidate> batch(n);
    auto work = [&](unsigned t) {
      for (std::size_t k = t; k < n; k += threads) {
        batch[k] = make_candidate(cfg, opts.fuzz, derive_seed(cfg.seed, start + k));
      }
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
      for (auto& th : pool) th.join();
    }
    for (auto& c : batch) {
      if (take(std::move(c))) return;
    }
  }
  throw GenerationStall("could not reach the requested counts within " + std::to_string(max_attempts) +
                        " generation attempts");
}

}  // namespace

std::vector<DatasetRecord> build_classification_dataset(const GeneratorConfig& cfg, std::size_t n_total,
                                                        double split_ratio, const BuildOptions& opts) {
  validate(cfg);
  if (n_total == 0 || n_total % 2 != 0) throw std::invalid_argument("n_total must be even and positive");
  std::size_t per_class = n_total / 2;
  std::vector<DatasetRecord> by_class[2];
  drive(cfg, opts, opts.attempt_factor * n_total, [&](Candidate&& c) {
    int label = interp::is_nonterminating(c.label) ? kNonterminating : kTerminating;
    if (by_class[label].size() < per_class) {
      by_class[label].push_back(DatasetRecord{std::move(c.source), label, std::nullopt, c.seed, "train"});
    }
    return by_class[0].size() == per_class && by_class[1].size() == per_class;
  });

  std::size_t n_train = train_count(n_total, split_ratio);
  std::size_t train_of[2] = {(n_train + 1) / 2, n_train / 2};
  std::vector<DatasetRecord> out;
  for (const char* split : {"train", "test"}) {
    bool is_train = std::string(split) == "train";
    std::size_t lo[2], hi[2];
    for (int k = 0; k < 2; ++k) {
      lo[k] = is_train ? 0 : train_of[k];
      hi[k] = is_train ? train_of[k] : per_class;
    }
    for (std::size_t i = 0; lo[0] + i < hi[0] || lo[1] + i < hi[1]; ++i) {
      for (int k = 0; k < 2; ++k) {
        if (lo[k] + i < hi[k]) {
          DatasetRecord r = by_class[k][lo[k] + i];
          r.split = split;
          out.push_back(std::move(r));
        }
      }
    }
  }
  return out;
}

std::vector<DatasetRecord> build_segmentation_dataset(const GeneratorConfig& cfg, std::size_t n_total,
                                                      double split_ratio, const BuildOptions& opts) {
  validate(cfg);
  if (n_total == 0) throw std::invalid_argument("n_total must be positive");
  std::size_t n_train = train_count(n_total, split_ratio);
  std::vector<DatasetRecord> out;
  drive(cfg, opts, opts.attempt_factor * n_total, [&](Candidate&& c) {
    const auto* nt = std::get_if<interp::Nonterminating>(&c.label);
    if (!nt || nt->culprit_loop == lang::kNoNode) return false;
    std::map<lang::NodeId, int> mask;
    for (lang::NodeId id = 0; id < c.node_count; ++id) mask[id] = id == nt->culprit_loop ? 1 : 0;
    std::string split = out.size() < n_train ? "train" : "test";
    out.push_back(DatasetRecord{std::move(c.source), kNonterminating, std::move(mask), c.seed, split});
    return out.size() == n_total;
  });
  return out;
}

graph::Vocabulary dataset_vocab(const std::vector<DatasetRecord>& records) {
  std::vector<lang::Program> programs;
  programs.reserve(records.size());
  for (const auto& r : records) programs.push_back(lang::parse(r.source));
  return graph::Vocabulary::build(programs);
}

std::string record_to_json(const DatasetRecord& r) {
  ordered_json j;
  j["source"] = r.source;
  j["graph_label"] = r.graph_label;
  if (r.seg_mask) {
    ordered_json m = ordered_json::object();
    for (auto [id, v] : *r.seg_mask) m[std::to_string(id)] = v;
    j["seg_mask"] = m;
  } else {
    j["seg_mask"] = nullptr;
  }
  j["gen_seed"] = r.gen_seed;
  j["split"] = r.split;
  return j.dump();
}

DatasetRecord record_from_json(const std::string& line) {
  try {
    auto j = nlohmann::json::parse(line);
    DatasetRecord r;
    r.source = j.at("source").get<std::string>();
    r.graph_label = j.at("graph_label").get<int>();
    if (r.graph_label != kNonterminating && r.graph_label != kTerminating) {
      throw DatasetFormatError("graph_label must be 0 or 1");
    }
    const auto& m = j.at("seg_mask");
    if (!m.is_null()) {
      std::map<lang::NodeId, int> mask;
      for (const auto& [k, v] : m.items()) mask[std::stoi(k)] = v.get<int>();
      r.seg_mask = std::move(mask);
    }
    r.gen_seed = j.at("gen_seed").get<std::uint64_t>();
    r.split = j.at("split").get<std::string>();
    if (r.split != "train" && r.split != "test") throw DatasetFormatError("split must be train or test");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetFormatError(std::string("malformed dataset record: ") + e.what());
  } catch (const std::logic_error& e) {
    throw DatasetFormatError(std::string("malformed dataset record: ") + e.what());
  }
}

namespace {

ordered_json config_json(const GeneratorConfig& c) {
  return {{"min_loops", c.min_loops},
          {"max_loops", c.max_loops},
          {"max_nesting", c.max_nesting},
          {"max_params", c.max_params},
          {"straight_line_stmt_range", {c.straight_line_stmt_range.first, c.straight_line_stmt_range.second}},
          {"constant_range", {c.constant_range.first, c.constant_range.second}},
          {"nest_probability", c.nest_probability},
          {"faulty_probability", c.faulty_probability},
          {"branch_probability", c.branch_probability},
          {"seed", c.seed}};
}

GeneratorConfig config_from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.min_loops = j.at("min_loops");
  c.max_loops = j.at("max_loops");
  c.max_nesting = j.at("max_nesting");
  c.max_params = j.at("max_params");
  c.straight_line_stmt_range = {j.at("straight_line_stmt_range")[0], j.at("straight_line_stmt_range")[1]};
  c.constant_range = {j.at("constant_range")[0], j.at("constant_range")[1]};
  c.nest_probability = j.at("nest_probability");
  c.faulty_probability = j.at("faulty_probability");
  c.branch_probability = j.at("branch_probability");
  c.seed = j.at("seed");
  return c;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DatasetFormatError("cannot open " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const Dataset& d) {
  std::filesystem::create_directories(dir);
  std::string lines;
  for (const auto& r : d.records) lines += record_to_json(r) + "\n";
  write_file(dir / "data.jsonl", lines);

  ordered_json meta;
  meta["kind"] = d.meta.kind;
  meta["config"] = config_json(d.meta.config);
  meta["seed"] = d.meta.config.seed;
  meta["n_total"] = d.meta.n_total;
  meta["split_ratio"] = d.meta.split_ratio;
  meta["counts"] = d.meta.counts;
  meta["vocab_file"] = d.meta.vocab_file;
  meta["fuzz"] = {{"n_inputs", d.meta.fuzz.n_inputs},
                  {"step_budget", d.meta.fuzz.step_budget},
                  {"input_min", d.meta.fuzz.input_min},
                  {"input_max", d.meta.fuzz.input_max}};
  write_file(dir / "meta.json", meta.dump(2) + "\n");
  write_file(dir / d.meta.vocab_file, d.vocab.to_json() + "\n");
}

Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset d;
  try {
    auto meta = nlohmann::json::parse(read_file(dir / "meta.json"));
    d.meta.kind = meta.at("kind").get<std::string>();
    d.meta.config = config_from_json(meta.at("config"));
    d.meta.n_total = meta.at("n_total").get<std::size_t>();
    d.meta.split_ratio = meta.at("split_ratio").get<double>();
    d.meta.counts = meta.at("counts").get<std::map<std::string, std::size_t>>();
    d.meta.vocab_file = meta.at("vocab_file").get<std::string>();
    const auto& f = meta.at("fuzz");
    d.meta.fuzz.n_inputs = f.at("n_inputs");
    d.meta.fuzz.step_budget = f.at("step_budget");
    d.meta.fuzz.input_min = f.at("input_min");
    d.meta.fuzz.input_max = f.at("input_max");
    d.vocab = graph::Vocabulary::from_json(read_file(dir / d.meta.vocab_file));
  } catch (const nlohmann::json::exception& e) {
    throw DatasetFormatError(std::string("malformed dataset metadata: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DatasetFormatError(std::string("malformed vocabulary: ") + e.what());
  }
  std::istringstream lines(read_file(dir / "data.jsonl"));
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty()) d.records.push_back(record_from_json(line));
  }
  return d;
}

}  // namespace termgnn::datagen
