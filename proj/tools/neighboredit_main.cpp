#include <CLI11.hpp>
#include <iostream>

#include "ne/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"NeighborEdit: edit-based non-autoregressive generation from retrieved neighbors"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "TOML config file")->required();
  app.add_option("--set", overrides, "override config keys, e.g. --set train.max_steps=100");

  auto* build = app.add_subcommand("build-datastore", "build vocabulary, tfidf index and datastore");
  build->fallthrough();

  std::string retrieve_split = "train";
  auto* retrieve = app.add_subcommand("retrieve", "write the nearest-neighbor file for a split");
  retrieve->fallthrough();
  retrieve->add_option("--split", retrieve_split, "train|dev|test")->required();

  auto* train = app.add_subcommand("train", "imitation-learning training loop");
  train->fallthrough();

  std::string gen_split = "test", gen_init = "neighbor", gen_checkpoint;
  bool gen_trace = false;
  auto* generate = app.add_subcommand("generate", "iterative decoding over a split");
  generate->fallthrough();
  generate->add_option("--split", gen_split, "train|dev|test")->required();
  generate->add_option("--checkpoint", gen_checkpoint, "checkpoint directory (default: best)");
  generate->add_option("--init", gen_init, "neighbor|empty");
  generate->add_flag("--trace", gen_trace, "write per-iteration canvases as JSON lines");

  std::string eval_hyps, eval_refs, eval_hyps_b;
  auto* evaluate = app.add_subcommand("evaluate", "BLEU/ChrF report, optional significance test");
  evaluate->fallthrough();
  evaluate->add_option("--hyps", eval_hyps, "hypotheses file")->required();
  evaluate->add_option("--refs", eval_refs, "references file")->required();
  evaluate->add_option("--hyps-b", eval_hyps_b, "second system for paired bootstrap");

  std::string analyze_split = "test", analyze_hyps;
  auto* analyze = app.add_subcommand("analyze", "neighbor-similarity vs sentence-BLEU scatter");
  analyze->fallthrough();
  analyze->add_option("--split", analyze_split, "train|dev|test")->required();
  analyze->add_option("--hyps", analyze_hyps, "hypotheses file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const ne::RunConfig cfg = ne::load_config(config_path, overrides);
    if (build->parsed()) {
      ne::cmd_build_datastore(cfg);
    } else if (retrieve->parsed()) {
      ne::cmd_retrieve(cfg, retrieve_split);
    } else if (train->parsed()) {
      ne::cmd_train(cfg);
    } else if (generate->parsed()) {
      const std::string ckpt =
          gen_checkpoint.empty() ? cfg.paths.checkpoint_dir + "/best" : gen_checkpoint;
      ne::cmd_generate(cfg, ckpt, gen_split, gen_init, gen_trace);
    } else if (evaluate->parsed()) {
      std::cout << ne::cmd_evaluate(cfg, eval_hyps, eval_refs, eval_hyps_b) << "\n";
    } else if (analyze->parsed()) {
      ne::cmd_analyze(cfg, analyze_split, analyze_hyps);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
