#include "termgnn/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "termgnn/cli/dot.hpp"
#include "termgnn/gnn/persist.hpp"
#include "termgnn/gnn/train.hpp"
#include "termgnn/lang/parser.hpp"
#include "termgnn/lang/printer.hpp"
#include "termgnn/metrics/metrics.hpp"
#include "termgnn/slicer/slicer.hpp"
#include "termgnn/util/random.hpp"

namespace termgnn::cli {

using json = nlohmann::ordered_json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const gnn::TrainingDiverged*>(&e)) return kExitDiverged;
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const slicer::SliceError*>(&e)) return kExitUsage;
  if (dynamic_cast<const lang::ParseError*>(&e) || dynamic_cast<const datagen::DatasetFormatError*>(&e) ||
      dynamic_cast<const gnn::ModelFormatError*>(&e) || dynamic_cast<const gnn::VocabularyMismatch*>(&e) ||
      dynamic_cast<const InputError*>(&e)) {
    return kExitFormat;
  }
  // Anything else is a bad argument value caught late, e.g. an odd n_total.
  if (dynamic_cast<const std::invalid_argument*>(&e)) return kExitUsage;
  return kExitFormat;
}

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

const char* label_name(int label) { return label == datagen::kNonterminating ? "nonterminating" : "terminating"; }

std::vector<int> mask_vector(const datagen::DatasetRecord& r, std::int32_t n_nodes) {
  std::vector<int> mask(static_cast<std::size_t>(n_nodes), 0);
  if (!r.seg_mask) return mask;
  for (auto [id, v] : *r.seg_mask) {
    if (id < 0 || id >= n_nodes) throw datagen::DatasetFormatError("segmentation mask names an unknown node");
    mask[static_cast<std::size_t>(id)] = v;
  }
  return mask;
}

struct Splits {
  std::vector<gnn::Example> train;
  std::vector<gnn::Example> test;
};

Splits examples_for(const datagen::Dataset& d, const gnn::Model& blank) {
  Splits s;
  for (const auto& r : d.records) {
    auto p = lang::parse(r.source);
    std::vector<int> mask;
    if (gnn::is_segmenter(blank.kind)) {
      if (!r.seg_mask) throw UsageError("segmentation models need a segmentation dataset");
      mask = mask_vector(r, p.node_count);
    }
    (r.split == "train" ? s.train : s.test).push_back(gnn::make_example(p, blank, r.graph_label, std::move(mask)));
  }
  return s;
}

void check_dataset_kind(const datagen::Dataset& d, gnn::ModelKind k) {
  bool seg = gnn::is_segmenter(k);
  if (seg && d.meta.kind != "seg") throw UsageError("model " + gnn::to_string(k) + " needs a segmentation dataset");
  if (!seg && d.meta.kind != "clf") throw UsageError("model " + gnn::to_string(k) + " needs a classification dataset");
}

void check_vocabulary(const gnn::Model& m, const datagen::Dataset& d) {
  if (gnn::is_graph_model(m.kind) && m.vocab.hash() != d.vocab.hash()) {
    throw gnn::VocabularyMismatch("the model was trained with a different vocabulary than " + d.meta.vocab_file);
  }
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  // Population deviation over the sessions at hand.
  return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

json aggregate(const std::vector<double>& v) {
  auto [m, s] = mean_std(v);
  return {{"mean", m}, {"std", s}};
}

std::vector<double> confidences_for(const gnn::Model& m, const graph::FeatureGraph& g) {
  return gnn::segment(m, graph::batch(g));
}

std::pair<double, double> probabilities_for(const gnn::Model& m, const lang::Program& p) {
  if (gnn::is_segmenter(m.kind)) throw UsageError("expected a classifier, got " + gnn::to_string(m.kind));
  if (gnn::is_graph_model(m.kind)) return gnn::classify(m, graph::batch(graph::ast_to_graph(p, m.vocab)))[0];
  std::vector<std::vector<std::int32_t>> seq{m.line_vocab.encode(p)};
  if (seq[0].empty()) throw UsageError("program has no lines to encode");
  return gnn::recurrent_classify(m, seq)[0];
}

// While node with the highest confidence, or kNoNode for loop-free programs.
lang::NodeId likely_culprit(const std::vector<lang::AstNode>& nodes, const std::vector<double>& conf) {
  lang::NodeId best = lang::kNoNode;
  for (const auto& n : nodes) {
    if (n.kind != lang::NodeKind::While) continue;
    if (best == lang::kNoNode || conf[static_cast<std::size_t>(n.id)] > conf[static_cast<std::size_t>(best)]) {
      best = n.id;
    }
  }
  return best;
}

json inputs_json(const interp::Inputs& in) {
  json j = json::object();
  for (const auto& [k, v] : in) j[k] = v;
  return j;
}

}  // namespace

lang::Program read_program(const fs::path& path) { return lang::parse(read_text(path)); }

datagen::Dataset run_gen(const GenOptions& o, std::ostream& log) {
  if (o.kind != "clf" && o.kind != "seg") throw UsageError("--kind must be clf or seg");
  if (o.out.empty()) throw UsageError("--out is required");
  datagen::BuildOptions bo;
  bo.fuzz = o.fuzz;
  bo.threads = o.threads;
  datagen::Dataset d;
  d.records = o.kind == "clf" ? datagen::build_classification_dataset(o.generator, o.n, o.split, bo)
                              : datagen::build_segmentation_dataset(o.generator, o.n, o.split, bo);
  d.vocab = datagen::dataset_vocab(d.records);
  d.meta.kind = o.kind;
  d.meta.config = o.generator;
  d.meta.n_total = o.n;
  d.meta.split_ratio = o.split;
  d.meta.fuzz = o.fuzz;
  for (const auto& r : d.records) d.meta.counts[r.split + "_" + label_name(r.graph_label)]++;
  fs::create_directories(o.out);
  datagen::write_dataset(o.out, d);
  log << "wrote " << d.records.size() << " records to " << (o.out / "data.jsonl").string() << " (vocabulary "
      << d.vocab.size() << " tokens)\n";
  return d;
}

std::uint64_t session_seed(std::uint64_t seed, int k) { return derive_seed(seed, static_cast<std::uint64_t>(k)); }

std::vector<SessionSummary> run_train(const TrainOptions& o, std::ostream& log) {
  if (o.sessions < 1) throw UsageError("--sessions must be at least 1");
  if (o.out.empty()) throw UsageError("--out is required");
  gnn::Model blank;
  blank.kind = gnn::parse_model_kind(o.model);
  blank.hp = o.hp;
  datagen::Dataset d = datagen::read_dataset(o.data);
  check_dataset_kind(d, blank.kind);
  blank.vocab = d.vocab;
  blank.vocab_file = d.meta.vocab_file;
  if (!gnn::is_graph_model(blank.kind)) {
    std::vector<lang::Program> train_programs;
    for (const auto& r : d.records) {
      if (r.split == "train") train_programs.push_back(lang::parse(r.source));
    }
    blank.line_vocab = gnn::LineVocabulary::build(train_programs);
  }
  Splits s = examples_for(d, blank);
  if (s.train.empty()) throw UsageError("the dataset has no training records");
  fs::create_directories(o.out);

  std::vector<SessionSummary> out(static_cast<std::size_t>(o.sessions));
  std::vector<std::exception_ptr> errors(out.size());
  std::mutex log_mutex;
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < o.sessions; k = next++) {
      try {
        gnn::TrainConfig cfg;
        cfg.max_epochs = o.max_epochs;
        cfg.patience = o.patience;
        cfg.batch_size = o.batch_size;
        cfg.learning_rate = o.learning_rate;
        cfg.seed = session_seed(o.seed, k);
        std::ostringstream csv;
        csv << "epoch,train_loss,test_loss,test_metric\n";
        csv.precision(17);
        cfg.on_epoch = [&](const gnn::EpochLog& l) {
          csv << l.epoch << ',' << l.train_loss << ',' << l.test_loss << ',' << l.test_metric << '\n';
          if (o.verbose) {
            std::lock_guard lock(log_mutex);
            log << "session " << k << " epoch " << l.epoch << " loss " << l.train_loss << " test " << l.test_metric
                << "\n";
          }
        };
        auto res = gnn::train(blank, s.train, s.test, cfg);
        std::string stem = o.model + "-s" + std::to_string(k);
        SessionSummary& sum = out[static_cast<std::size_t>(k)];
        sum.session = k;
        sum.seed = cfg.seed;
        sum.best_epoch = res.best_epoch;
        sum.epochs_run = static_cast<int>(res.history.size());
        sum.best_metric = res.best_metric;
        sum.model_file = o.out / (stem + ".model");
        sum.curve_file = o.out / (stem + ".csv");
        gnn::save_model(res.model, sum.model_file);
        write_text(sum.curve_file, csv.str());
        std::lock_guard lock(log_mutex);
        log << "session " << k << ": best epoch " << res.best_epoch << " of " << res.history.size()
            << ", test metric " << res.best_metric << "\n";
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    }
  };
  unsigned jobs = o.jobs ? o.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(o.sessions));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  json summary;
  summary["model"] = o.model;
  summary["metric"] = gnn::is_segmenter(blank.kind) ? "dice" : "roc_auc";
  summary["sessions"] = json::array();
  std::vector<double> best;
  for (const auto& sum : out) {
    summary["sessions"].push_back({{"session", sum.session},
                                   {"seed", sum.seed},
                                   {"best_epoch", sum.best_epoch},
                                   {"epochs_run", sum.epochs_run},
                                   {"best_metric", sum.best_metric},
                                   {"model_file", sum.model_file.filename().string()}});
    best.push_back(sum.best_metric);
  }
  summary["best_metric"] = aggregate(best);
  write_text(o.out / "summary.json", summary.dump(2) + "\n");
  return out;
}

std::string run_eval(const EvalOptions& o) {
  if (o.models.empty()) throw UsageError("at least one --model is required");
  if (o.split != "train" && o.split != "test") throw UsageError("--split must be train or test");
  datagen::Dataset d = datagen::read_dataset(o.data);
  json report;
  report["data"] = o.data.string();
  report["split"] = o.split;
  report["models"] = json::array();
  std::map<std::string, std::vector<double>> series;
  std::optional<bool> segmenters;
  for (std::size_t i = 0; i < o.models.size(); ++i) {
    gnn::Model m = gnn::load_model(o.models[i]);
    if (segmenters && *segmenters != gnn::is_segmenter(m.kind)) {
      throw UsageError("cannot aggregate classifiers and segmenters in one report");
    }
    segmenters = gnn::is_segmenter(m.kind);
    check_dataset_kind(d, m.kind);
    check_vocabulary(m, d);
    Splits s = examples_for(d, m);
    const auto& ex = o.split == "train" ? s.train : s.test;
    if (ex.empty()) throw UsageError("the " + o.split + " split is empty");
    json entry;
    entry["model"] = o.models[i].string();
    entry["kind"] = gnn::to_string(m.kind);
    if (gnn::is_segmenter(m.kind)) {
      auto conf = gnn::predict_confidences(m, ex);
      metrics::SegReport total;
      for (std::size_t k = 0; k < ex.size(); ++k) {
        std::vector<int> pred(conf[k].size());
        for (std::size_t n = 0; n < pred.size(); ++n) pred[n] = conf[k][n] >= 0.5;
        total = k == 0 ? metrics::seg_scores(pred, ex[k].node_mask)
                       : metrics::merge(total, metrics::seg_scores(pred, ex[k].node_mask));
      }
      entry["dice"] = total.dice;
      entry["iou"] = total.iou;
      entry["node_accuracy"] = total.node_accuracy;
      entry["counts"] = {{"tp", total.tp}, {"fp", total.fp}, {"tn", total.tn}, {"fn", total.fn}};
      for (const char* key : {"dice", "iou", "node_accuracy"}) series[key].push_back(entry[key].get<double>());
    } else {
      auto p = gnn::predict_terminating(m, ex);
      std::vector<int> labels;
      for (const auto& e : ex) labels.push_back(e.label);
      auto rep = metrics::classification_report(p, labels);
      entry["roc_auc"] = rep.roc_auc;
      entry["roc_auc_nonterminating"] = rep.roc[0].area;
      entry["roc_auc_terminating"] = rep.roc[1].area;
      entry["roc_map"] = rep.roc_map;
      entry["pr_map"] = rep.pr_map;
      entry["accuracy"] = rep.accuracy;
      for (const char* key : {"roc_auc", "roc_map", "pr_map", "accuracy"}) {
        series[key].push_back(entry[key].get<double>());
      }
      if (o.curves_dir) {
        fs::create_directories(*o.curves_dir);
        std::string stem = o.models[i].stem().string();
        for (int c = 0; c < 2; ++c) {
          write_text(*o.curves_dir / (stem + "-roc-class" + std::to_string(c) + ".csv"), metrics::to_csv(rep.roc[c]));
          write_text(*o.curves_dir / (stem + "-pr-class" + std::to_string(c) + ".csv"), metrics::to_csv(rep.pr[c]));
        }
      }
    }
    report["models"].push_back(entry);
  }
  json agg = json::object();
  for (const auto& [k, v] : series) agg[k] = aggregate(v);
  report["aggregate"] = agg;
  return report.dump(2) + "\n";
}

std::string run_predict(const fs::path& model, const fs::path& program) {
  gnn::Model m = gnn::load_model(model);
  lang::Program p = read_program(program);
  auto [p0, p1] = probabilities_for(m, p);
  json j;
  j["p_nonterminating"] = p0;
  j["p_terminating"] = p1;
  j["verdict"] = p0 > p1 ? "nonterminating" : "terminating";
  return j.dump(2) + "\n";
}

std::string run_segment(const fs::path& model, const fs::path& program) {
  gnn::Model m = gnn::load_model(model);
  if (!gnn::is_segmenter(m.kind)) throw UsageError("expected a segmentation model, got " + gnn::to_string(m.kind));
  lang::Program p = read_program(program);
  auto g = graph::ast_to_graph(p, m.vocab);
  auto conf = confidences_for(m, g);
  auto nodes = lang::flatten(p);
  json j;
  j["nodes"] = json::array();
  j["predicted"] = json::array();
  for (const auto& n : nodes) {
    double c = conf[static_cast<std::size_t>(n.id)];
    j["nodes"].push_back({{"id", n.id},
                          {"kind", std::string(lang::to_string(n.kind))},
                          {"lexeme", n.lexeme},
                          {"line", n.line},
                          {"confidence", c}});
    if (c >= 0.5) j["predicted"].push_back(n.id);
  }
  lang::NodeId culprit = likely_culprit(nodes, conf);
  if (culprit == lang::kNoNode) {
    j["culprit"] = nullptr;
  } else {
    j["culprit"] = {{"id", culprit}, {"line", nodes[static_cast<std::size_t>(culprit)].line}};
  }
  return j.dump(2) + "\n";
}

std::string run_slice(const fs::path& program, lang::NodeId loop) {
  return lang::pretty_print(slicer::slice_for_loop(read_program(program), loop).program);
}

std::string run_witness(const fs::path& program, lang::NodeId loop, const interp::FuzzOptions& fuzz) {
  lang::Program p = read_program(program);
  const lang::Stmt* s = lang::find_stmt(p, loop);
  if (!s || !std::holds_alternative<lang::Stmt::While>(s->node)) {
    throw UsageError("node " + std::to_string(loop) + " is not a while loop");
  }
  auto w = slicer::find_witness(p, loop, fuzz);
  json j;
  j["found"] = w.has_value();
  j["inputs"] = w ? inputs_json(*w) : json(nullptr);
  return j.dump(2) + "\n";
}

std::string run_viz(const std::optional<fs::path>& model, const fs::path& program) {
  lang::Program p = read_program(program);
  if (!model) {
    graph::Vocabulary v = graph::Vocabulary::build(std::span(&p, 1));
    return emit_dot(p, graph::ast_to_graph(p, v));
  }
  gnn::Model m = gnn::load_model(*model);
  if (!gnn::is_graph_model(m.kind)) throw UsageError("viz needs a graph model");
  auto g = graph::ast_to_graph(p, m.vocab);
  std::optional<gnn::AttentionView> view;
  if (gnn::uses_attention(m.kind)) view = gnn::extract_attention(m, g);
  std::vector<double> conf;
  if (gnn::is_segmenter(m.kind)) conf = confidences_for(m, g);
  std::optional<std::span<const gnn::EdgeScore>> att;
  if (view) att = std::span<const gnn::EdgeScore>(view->edges);
  std::optional<std::span<const double>> cs;
  if (!conf.empty()) cs = std::span<const double>(conf);
  return emit_dot(p, g, att, cs);
}

std::string run_debug(const fs::path& program, const fs::path& clf, const fs::path& seg,
                      const interp::FuzzOptions& fuzz) {
  lang::Program p = read_program(program);
  gnn::Model cm = gnn::load_model(clf);
  gnn::Model sm = gnn::load_model(seg);
  if (!gnn::is_segmenter(sm.kind)) throw UsageError("--seg must be a segmentation model");
  auto [p0, p1] = probabilities_for(cm, p);
  json j;
  j["verdict"] = p0 > p1 ? "nonterminating" : "terminating";
  j["p_nonterminating"] = p0;
  if (p0 <= p1) return j.dump(2) + "\n";

  auto g = graph::ast_to_graph(p, sm.vocab);
  auto conf = confidences_for(sm, g);
  auto nodes = lang::flatten(p);
  lang::NodeId culprit = likely_culprit(nodes, conf);
  if (culprit == lang::kNoNode) {
    j["culprit"] = nullptr;
    return j.dump(2) + "\n";
  }
  j["culprit"] = {{"id", culprit},
                  {"line", nodes[static_cast<std::size_t>(culprit)].line},
                  {"confidence", conf[static_cast<std::size_t>(culprit)]}};
  auto sl = slicer::slice_for_loop(p, culprit);
  j["slice"] = lang::pretty_print(sl.program);
  auto w = slicer::find_witness(sl.program, sl.loop, fuzz);
  j["witness"] = w ? inputs_json(*w) : json(nullptr);
  return j.dump(2) + "\n";
}

}  // namespace termgnn::cli
