#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gsheaf/data.hpp"
#include "gsheaf/error.hpp"
#include "gsheaf/experiments.hpp"
#include "gsheaf/gsnn/checkpoint.hpp"
#include "gsheaf/gsnn/train.hpp"
#include "gsheaf/verify.hpp"

namespace fs = std::filesystem;
using namespace gsheaf;

namespace {

struct ModelFlags {
  std::vector<std::string> models;
  ModelConfig cfg;
};

void add_model_flags(CLI::App* cmd, ModelFlags& f, bool many) {
  std::vector<std::string> names;
  for (ModelKind k : all_model_kinds()) names.push_back(to_string(k));
  auto* opt = cmd->add_option("--model", f.models, many ? "Models (repeat or comma-separate)" : "Model")
                  ->check(CLI::IsMember(names))
                  ->delimiter(',');
  if (!many) opt->expected(1);
  cmd->add_option("--layers", f.cfg.layers, "Diffusion / message-passing layers");
  cmd->add_option("--hidden", f.cfg.hidden, "Channels (GSNN, NSD) or feature width");
  cmd->add_option("--stalk-dim", f.cfg.stalk_dim, "Stalk dimension");
  cmd->add_option("--map-hidden", f.cfg.map_hidden, "Hidden width of the restriction-map network");
  cmd->add_option("--readout-hidden", f.cfg.readout_hidden, "Hidden width of the readout");
  cmd->add_option("--samples", f.cfg.samples, "Draws per node for sampling models");
  cmd->add_option("--lr", f.cfg.lr, "Learning rate");
  cmd->add_option("--epochs", f.cfg.epochs, "Maximum epochs");
  cmd->add_option("--patience", f.cfg.patience, "Early-stopping patience");
  cmd->add_option("--weight-decay", f.cfg.weight_decay, "Decoupled weight decay");
  cmd->add_option("--sheaf-decay", f.cfg.sheaf_decay, "Weight decay of the restriction-map network");
  cmd->add_option("--sinkhorn-eps", f.cfg.sinkhorn.epsilon, "Sinkhorn epsilon (<= 0: 0.1 x median cost)");
  cmd->add_option("--sinkhorn-iters", f.cfg.sinkhorn.iters, "Sinkhorn iterations");
}

std::vector<ModelKind> kinds_of(const std::vector<std::string>& names) {
  std::vector<ModelKind> out;
  for (const std::string& n : names) out.push_back(model_kind_from_string(n));
  return out;
}

std::string dataset_id(const std::string& path) { return fs::path(path).stem().string(); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw PathError("cannot create " + dir + ": " + ec.message());
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw PathError("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian sheaf diffusion experiments"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Write a dataset as JSON");
  std::string source = "ba", gen_out;
  SynthConfig sc;
  WeatherConfig wc;
  gen->add_option("--source", source, "ba, ws or weather")->check(CLI::IsMember({"ba", "ws", "weather"}));
  gen->add_option("--nodes", sc.nodes, "Number of nodes");
  gen->add_option("--ba-m", sc.ba_m, "Barabasi-Albert attachment count");
  gen->add_option("--ws-k", sc.ws_k, "Watts-Strogatz mean degree");
  gen->add_option("--ws-p", sc.ws_p, "Watts-Strogatz rewiring probability");
  gen->add_option("--dim", sc.dim, "Input and target dimension");
  gen->add_option("--target-samples", sc.target_samples, "Target draws per node");
  gen->add_option("--df", sc.df, "Inverse-Wishart degrees of freedom (<= 0: dim + 3)");
  gen->add_option("--seed", sc.seed, "Generator and split seed");
  gen->add_option("--stations", wc.stations_csv, "Weather stations CSV");
  gen->add_option("--measurements", wc.measurements_csv, "Weather measurements CSV");
  gen->add_option("--radius-km", wc.radius_km, "Station graph radius");
  gen->add_option("--input-columns", wc.input_columns, "Input measurement columns")->delimiter(',');
  gen->add_option("--target-columns", wc.target_columns, "Target measurement columns")->delimiter(',');
  gen->add_option("--input-from", wc.input_from, "First input date (YYYY-MM-DD)");
  gen->add_option("--input-to", wc.input_to, "Last input date");
  gen->add_option("--target-from", wc.target_from, "First target date");
  gen->add_option("--target-to", wc.target_to, "Last target date");
  gen->add_option("--out", gen_out, "Output JSON path")->required();

  // train
  auto* trn = app.add_subcommand("train", "Train one model and write checkpoint and history");
  ModelFlags train_flags;
  std::string train_dataset, train_dir = ".";
  std::uint64_t train_seed = 0;
  add_model_flags(trn, train_flags, false);
  trn->add_option("--dataset", train_dataset, "Dataset JSON")->required();
  trn->add_option("--seed", train_seed, "Model seed");
  trn->add_option("--out-dir", train_dir, "Output directory");

  // sweep
  auto* swp = app.add_subcommand("sweep", "Train models x seeds and write results.csv / summary.csv");
  ModelFlags sweep_flags;
  std::string sweep_dataset, sweep_dir = ".";
  int sweep_seeds = 10;
  std::uint64_t sweep_base = 0;
  add_model_flags(swp, sweep_flags, true);
  swp->add_option("--dataset", sweep_dataset, "Dataset JSON")->required();
  swp->add_option("--seeds", sweep_seeds, "Runs per model (seeds base, base + 1, ...)");
  swp->add_option("--base-seed", sweep_base, "First seed");
  swp->add_option("--out-dir", sweep_dir, "Output directory");

  // energy
  auto* eng = app.add_subcommand("energy", "Depth sweep with per-layer Dirichlet energies");
  ModelFlags energy_flags;
  std::string energy_dataset, energy_dir = ".";
  int energy_seeds = 1;
  std::uint64_t energy_base = 0;
  std::vector<int> depths{1, 2, 4, 8};
  add_model_flags(eng, energy_flags, true);
  eng->add_option("--dataset", energy_dataset, "Dataset JSON")->required();
  eng->add_option("--depths", depths, "Depths")->delimiter(',');
  eng->add_option("--seeds", energy_seeds, "Runs per (model, depth)");
  eng->add_option("--base-seed", energy_base, "First seed");
  eng->add_option("--out-dir", energy_dir, "Output directory");

  // verify
  auto* ver = app.add_subcommand("verify", "Run the property checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      Dataset ds;
      if (source == "weather") {
        wc.seed = sc.seed;
        ds = load_weather(wc);
      } else {
        sc.model = source == "ba" ? GraphModel::barabasi_albert : GraphModel::watts_strogatz;
        ds = synthesize(sc);
      }
      write_dataset(ds, gen_out);
      std::cout << "wrote " << gen_out << " (" << ds.num_nodes() << " nodes, "
                << ds.graph.num_edges() << " edges)\n";
      return 0;
    }
    if (trn->parsed()) {
      const Dataset ds = read_dataset(train_dataset);
      ModelConfig cfg = train_flags.cfg;
      cfg.kind = train_flags.models.empty() ? ModelKind::gsnn_orth
                                            : model_kind_from_string(train_flags.models.front());
      cfg.seed = train_seed;
      auto model = make_model(cfg, ds);
      const TrainResult tr = train(*model, ds);
      ensure_dir(train_dir);
      save_checkpoint(*model, (fs::path(train_dir) / "checkpoint.json").string());
      write_history_csv(tr.history, (fs::path(train_dir) / "history.csv").string());
      const EvalResult ev = evaluate(*model, ds, SplitName::test);
      nlohmann::json summary{{"model", to_string(cfg.kind)}, {"dataset", dataset_id(train_dataset)},
                             {"seed", cfg.seed}, {"test_mean_w2", ev.mean}, {"test_sd_w2", ev.sd},
                             {"epochs", tr.history.size()}, {"best_epoch", tr.best_epoch},
                             {"best_val", tr.best_val}, {"seconds", tr.seconds},
                             {"status", tr.aborted ? "aborted" : "ok"}, {"abort_reason", tr.abort_reason}};
      write_json(summary, (fs::path(train_dir) / "summary.json").string());
      std::cout << std::setprecision(6) << to_string(cfg.kind) << " test W2 " << ev.mean << " +- "
                << ev.sd << " after " << tr.history.size() << " epochs\n";
      if (tr.aborted) {
        std::cerr << "training aborted (" << tr.abort_reason << "); outputs hold the best parameters\n";
        return 1;
      }
      return 0;
    }
    if (swp->parsed()) {
      const Dataset ds = read_dataset(sweep_dataset);
      SweepOptions opts;
      opts.models = sweep_flags.models.empty() ? all_model_kinds() : kinds_of(sweep_flags.models);
      opts.base = sweep_flags.cfg;
      opts.seeds = sweep_seeds;
      opts.base_seed = sweep_base;
      opts.dataset_id = dataset_id(sweep_dataset);
      const std::vector<RunRecord> records = run_sweep(ds, opts);
      const std::vector<SummaryRow> rows = summarize(records);
      ensure_dir(sweep_dir);
      write_results_csv(records, (fs::path(sweep_dir) / "results.csv").string());
      write_summary_csv(rows, (fs::path(sweep_dir) / "summary.csv").string());
      nlohmann::json runs = nlohmann::json::array();
      bool aborted = false;
      for (const RunRecord& r : records) {
        runs.push_back({{"model", r.model}, {"dataset", r.dataset}, {"seed", r.seed},
                        {"mean_w2", r.mean_w2}, {"sd_w2", r.sd_w2}, {"epochs", r.epochs},
                        {"seconds", r.seconds}, {"status", r.aborted ? "aborted" : "ok"}});
        aborted = aborted || r.aborted;
      }
      write_json(runs, (fs::path(sweep_dir) / "results.json").string());
      std::cout << format_summary(rows);
      if (aborted) {
        std::cerr << "some runs aborted on numeric errors; see the status column\n";
        return 1;
      }
      return 0;
    }
    if (eng->parsed()) {
      const Dataset ds = read_dataset(energy_dataset);
      EnergyOptions opts;
      opts.models = energy_flags.models.empty()
                        ? std::vector<ModelKind>{ModelKind::gcn, ModelKind::gsnn_diag,
                                                 ModelKind::gsnn_orth, ModelKind::gsnn_gen}
                        : kinds_of(energy_flags.models);
      opts.base = energy_flags.cfg;
      opts.depths = depths;
      opts.seeds = energy_seeds;
      opts.base_seed = energy_base;
      opts.dataset_id = dataset_id(energy_dataset);
      const std::vector<EnergyRecord> records = run_energy(ds, opts);
      ensure_dir(energy_dir);
      write_depth_csv(records, (fs::path(energy_dir) / "depth_w2.csv").string());
      write_layer_energy_csv(records, (fs::path(energy_dir) / "layer_energy.csv").string());
      nlohmann::json runs = nlohmann::json::array();
      bool aborted = false;
      std::cout << std::setprecision(6);
      for (const EnergyRecord& r : records) {
        runs.push_back({{"model", r.model}, {"depth", r.depth}, {"seed", r.seed},
                        {"mean_w2", r.mean_w2}, {"sd_w2", r.sd_w2}, {"epochs", r.epochs},
                        {"energies", r.energies}, {"status", r.aborted ? "aborted" : "ok"}});
        aborted = aborted || r.aborted;
        std::cout << r.model << " depth " << r.depth << " seed " << r.seed << ": W2 " << r.mean_w2
                  << '\n';
      }
      write_json(runs, (fs::path(energy_dir) / "energy_runs.json").string());
      if (aborted) {
        std::cerr << "some runs aborted on numeric errors; see energy_runs.json\n";
        return 1;
      }
      return 0;
    }
    if (ver->parsed()) {
      bool ok = true;
      for (const CheckResult& r : run_verify(std::cout)) ok = ok && r.pass();
      std::cout << (ok ? "all checks passed\n" : "some checks failed\n");
      return ok ? 0 : 1;
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 1;
  } catch (const FactorizationError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 1;
  } catch (const ParameterError& e) {
    std::cerr << "invalid arguments: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
