#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "plume/error.hpp"
#include "plume/graph.hpp"
#include "plume/model.hpp"
#include "plume/pipeline.hpp"

namespace {

using plume::pipeline::RunConfig;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<std::string> features;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration (defaults apply when omitted)");
  cmd->add_option("--seed", f.seed, "Override the run seed");
  cmd->add_option("--variant", f.variant, "Model variant")->check(CLI::IsMember({"mgn_lstm", "mgn"}));
  cmd->add_option("--features", f.features, "Graph feature configuration")
      ->check(CLI::IsMember({"baseline", "trans", "relperm", "both"}));
  cmd->add_option("--out", f.out, "Output directory");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : plume::pipeline::load_run_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.variant) c.model.variant = plume::model::parse_variant(*f.variant);
  if (f.features) {
    c.data.features = plume::graph::parse_feature_config(*f.features);
    c.data.features_explicit = true;
    c.model.node_in = plume::graph::node_input_width(c.data.features);
    c.model.edge_in = plume::graph::edge_input_width(c.data.features);
  }
  if (f.out) c.out = *f.out;
  c.validate();
  return c;
}

std::string default_data(const RunConfig& c, const std::string& split) {
  return (std::filesystem::path(c.out) / (split + ".mgnl")).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plume: graph surrogate for CO2 plume migration on faulted meshes"};
  app.require_subcommand(1);

  CommonFlags gen_f, train_f, eval_f, cmp_f, exp_f;
  std::string train_data, eval_data, eval_ckpt, cmp_data, cmp_lstm, cmp_mgn;
  std::optional<std::size_t> train_steps, eval_steps;
  std::uint64_t export_id = 0;
  bool export_sim = false;
  std::optional<std::size_t> gen_steps;

  auto* gen = app.add_subcommand("gen-data", "Generate meshes, geomodels and simulations into train/test archives");
  add_common(gen, gen_f);
  gen->add_option("--steps", gen_steps, "Number of report steps to simulate");

  auto* train = app.add_subcommand("train", "Train a surrogate and write a checkpoint and CSV log");
  add_common(train, train_f);
  train->add_option("--data", train_data, "Training archive (default <out>/train.mgnl)");
  train->add_option("--steps", train_steps, "Training horizon in steps");

  auto* eval = app.add_subcommand("rollout-eval", "Roll out a checkpoint on an archive and report metrics");
  add_common(eval, eval_f);
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval->add_option("--data", eval_data, "Evaluation archive (default <out>/test.mgnl)");
  eval->add_option("--steps", eval_steps, "Rollout length (default: all steps in the archive)");

  auto* cmp = app.add_subcommand("compare", "Side-by-side ensemble summary of MGN-LSTM and MGN");
  add_common(cmp, cmp_f);
  cmp->add_option("--lstm", cmp_lstm, "MGN-LSTM checkpoint")->required();
  cmp->add_option("--mgn", cmp_mgn, "MGN checkpoint")->required();
  cmp->add_option("--data", cmp_data, "Evaluation archive (default <out>/test.mgnl)");

  auto* exp = app.add_subcommand("export-mesh", "Write one realization's mesh (text + VTK), optionally simulated");
  add_common(exp, exp_f);
  exp->add_option("--id", export_id, "Realization id");
  exp->add_flag("--simulate", export_sim, "Also run the simulator and export every snapshot");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      RunConfig c = resolve(gen_f);
      if (gen_steps) {
        c.schedule.report_steps = *gen_steps;
        if (c.training.n_steps > *gen_steps) c.training.n_steps = *gen_steps;
        c.validate();
      }
      plume::pipeline::cmd_gen_data(c, std::cout);
    } else if (train->parsed()) {
      RunConfig c = resolve(train_f);
      if (train_steps) {
        c.training.n_steps = *train_steps;
        c.training.validate();
      }
      plume::pipeline::cmd_train(c, train_data.empty() ? default_data(c, "train") : train_data, std::cout);
    } else if (eval->parsed()) {
      RunConfig c = resolve(eval_f);
      const std::string data = eval_data.empty() ? default_data(c, "test") : eval_data;
      std::size_t n = 0;
      if (eval_steps) {
        n = *eval_steps;
      } else {
        n = plume::io::load_dataset(data).info.n_steps;
      }
      plume::pipeline::cmd_rollout_eval(c, eval_ckpt, data, n, std::cout);
    } else if (cmp->parsed()) {
      RunConfig c = resolve(cmp_f);
      plume::pipeline::cmd_compare(c, cmp_lstm, cmp_mgn, cmp_data.empty() ? default_data(c, "test") : cmp_data,
                                   std::cout);
    } else if (exp->parsed()) {
      plume::pipeline::cmd_export_mesh(resolve(exp_f), export_id, export_sim, std::cout);
    }
  } catch (const plume::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const plume::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
