// termgnn command line. Every flag may also come from a TOML file given with
// --config; flags on the command line win.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "termgnn/cli/commands.hpp"

namespace {

using namespace termgnn;
namespace fs = std::filesystem;

void add_fuzz_flags(CLI::App* cmd, interp::FuzzOptions& f) {
  cmd->add_option("--inputs", f.n_inputs, "input vectors tried per program")->capture_default_str();
  cmd->add_option("--budget", f.step_budget, "interpreter step budget")->capture_default_str();
  cmd->add_option("--input-min", f.input_min)->capture_default_str();
  cmd->add_option("--input-max", f.input_max)->capture_default_str();
  cmd->add_option("--fuzz-seed", f.seed)->capture_default_str();
}

void emit(const std::string& text, const std::optional<fs::path>& out) {
  if (!out) {
    std::cout << text;
    return;
  }
  std::ofstream f(*out, std::ios::binary);
  if (!f) throw cli::InputError("cannot write " + out->string());
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Termination analysis of small imperative programs with graph neural networks"};
  app.set_config("--config", "", "TOML file supplying any flag");
  app.require_subcommand(1);

  cli::GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a labelled dataset");
  gen_cmd->add_option("--kind", gen.kind, "clf or seg")->check(CLI::IsMember({"clf", "seg"}))->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "number of records")->capture_default_str();
  gen_cmd->add_option("--split", gen.split, "training share")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  gen_cmd->add_option("--seed", gen.generator.seed)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen_cmd->add_option("--threads", gen.threads, "0 = all cores");
  gen_cmd->add_option("--min-loops", gen.generator.min_loops)->capture_default_str();
  gen_cmd->add_option("--max-loops", gen.generator.max_loops)->capture_default_str();
  gen_cmd->add_option("--max-nesting", gen.generator.max_nesting)->capture_default_str();
  gen_cmd->add_option("--max-params", gen.generator.max_params)->capture_default_str();
  gen_cmd->add_option("--nest-probability", gen.generator.nest_probability)->capture_default_str();
  gen_cmd->add_option("--faulty-probability", gen.generator.faulty_probability)->capture_default_str();
  gen_cmd->add_option("--branch-probability", gen.generator.branch_probability)->capture_default_str();
  add_fuzz_flags(gen_cmd, gen.fuzz);

  cli::TrainOptions train;
  double lr = 0.0;
  auto* train_cmd = app.add_subcommand("train", "train seeded model sessions");
  train_cmd->add_option("--model", train.model)
      ->check(CLI::IsMember({"gcn-clf", "gat-clf", "gcn-seg", "gat-seg", "rnn", "gru"}))
      ->capture_default_str();
  train_cmd->add_option("--data", train.data, "dataset directory")->required();
  train_cmd->add_option("--sessions", train.sessions)->capture_default_str();
  train_cmd->add_option("--out", train.out, "output directory")->required();
  train_cmd->add_option("--seed", train.seed)->capture_default_str();
  train_cmd->add_option("--max-epochs", train.max_epochs)->capture_default_str();
  train_cmd->add_option("--patience", train.patience)->capture_default_str();
  train_cmd->add_option("--batch-size", train.batch_size)->capture_default_str();
  auto* lr_opt = train_cmd->add_option("--lr", lr, "defaults to the model kind's rate");
  train_cmd->add_option("--hidden", train.hp.hidden)->capture_default_str();
  train_cmd->add_option("--layers", train.hp.graph_layers)->capture_default_str();
  train_cmd->add_option("--dense-hidden", train.hp.dense_hidden)->capture_default_str();
  train_cmd->add_option("--focal-gamma", train.hp.focal_gamma)->capture_default_str();
  train_cmd->add_option("--focal-alpha", train.hp.focal_alpha)->capture_default_str();
  train_cmd->add_option("--jobs", train.jobs, "parallel sessions, 0 = all cores");
  train_cmd->add_flag("--verbose", train.verbose, "log every epoch");

  cli::EvalOptions eval;
  std::optional<fs::path> eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "score models on a dataset split");
  eval_cmd->add_option("--model", eval.models, "model file, repeatable")->required();
  eval_cmd->add_option("--data", eval.data, "dataset directory")->required();
  eval_cmd->add_option("--split", eval.split)->check(CLI::IsMember({"train", "test"}))->capture_default_str();
  eval_cmd->add_option("--curves", eval.curves_dir, "write ROC and PR curves here");
  eval_cmd->add_option("--out", eval_out, "report file instead of stdout");

  fs::path model, program, clf, seg;
  lang::NodeId loop = lang::kNoNode;
  interp::FuzzOptions fuzz;
  std::optional<fs::path> viz_model, out;

  auto* predict_cmd = app.add_subcommand("predict", "class probabilities for one program");
  predict_cmd->add_option("--model", model)->required();
  predict_cmd->add_option("program", program)->required();

  auto* segment_cmd = app.add_subcommand("segment", "per-node confidences for one program");
  segment_cmd->add_option("--model", model)->required();
  segment_cmd->add_option("program", program)->required();

  auto* slice_cmd = app.add_subcommand("slice", "slice a program at a loop");
  slice_cmd->add_option("program", program)->required();
  slice_cmd->add_option("--loop", loop, "node id of the loop")->required();

  auto* witness_cmd = app.add_subcommand("witness", "search an input that keeps a loop running");
  witness_cmd->add_option("program", program)->required();
  witness_cmd->add_option("--loop", loop, "node id of the loop")->required();
  add_fuzz_flags(witness_cmd, fuzz);

  auto* viz_cmd = app.add_subcommand("viz", "render the AST as DOT");
  viz_cmd->add_option("--model", viz_model, "graph model for attention or confidences");
  viz_cmd->add_option("program", program)->required();
  viz_cmd->add_option("--out", out, "DOT file instead of stdout");

  auto* debug_cmd = app.add_subcommand("debug", "verdict, culprit loop, slice and witness");
  debug_cmd->add_option("program", program)->required();
  debug_cmd->add_option("--clf", clf, "classifier model")->required();
  debug_cmd->add_option("--seg", seg, "segmentation model")->required();
  add_fuzz_flags(debug_cmd, fuzz);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitUsage;
  }

  try {
    if (*gen_cmd) {
      cli::run_gen(gen, std::cerr);
    } else if (*train_cmd) {
      if (*lr_opt) train.learning_rate = lr;
      cli::run_train(train, std::cerr);
    } else if (*eval_cmd) {
      emit(cli::run_eval(eval), eval_out);
    } else if (*predict_cmd) {
      std::cout << cli::run_predict(model, program);
    } else if (*segment_cmd) {
      std::cout << cli::run_segment(model, program);
    } else if (*slice_cmd) {
      std::cout << cli::run_slice(program, loop);
    } else if (*witness_cmd) {
      std::cout << cli::run_witness(program, loop, fuzz);
    } else if (*viz_cmd) {
      emit(cli::run_viz(viz_model, program), out);
    } else if (*debug_cmd) {
      std::cout << cli::run_debug(program, clf, seg, fuzz);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code_for(e);
  }
  return cli::kExitOk;
}
