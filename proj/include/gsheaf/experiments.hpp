#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gsheaf/data.hpp"
#include "gsheaf/gsnn/model.hpp"

namespace gsheaf {

/// One trained (model, dataset, seed) run.
struct RunRecord {
  std::string model;
  std::string dataset;
  std::uint64_t seed = 0;
  double mean_w2 = 0.0;
  double sd_w2 = 0.0;
  int epochs = 0;
  double seconds = 0.0;
  bool aborted = false;
};

struct SummaryRow {
  std::string model;
  double mean = 0.0;
  double sd = 0.0;  // sample sd of the per-run means
  int runs = 0;
};

/// Worker count: GSL_THREADS if set and positive, else the hardware concurrency.
int worker_count();

/// Runs jobs 0..count-1 on up to `threads` workers; job(i) must be independent.
void parallel_for(int count, int threads, const std::function<void(int)>& job);

struct SweepOptions {
  std::vector<ModelKind> models;
  ModelConfig base;  // kind and seed are overwritten per run
  int seeds = 10;
  std::uint64_t base_seed = 0;
  int threads = 0;  // <= 0: worker_count()
  std::string dataset_id = "dataset";
};

/// Trains every (model, seed) pair with seed = base_seed + index and reports
/// test-split W2. Rows are ordered by model, then seed.
std::vector<RunRecord> run_sweep(const Dataset& ds, const SweepOptions& opts);

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);

/// Full-precision CSV files.
void write_results_csv(const std::vector<RunRecord>& records, const std::string& path);
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path);
/// Human-readable table with 6 significant digits.
std::string format_summary(const std::vector<SummaryRow>& rows);

struct EnergyOptions {
  std::vector<ModelKind> models;
  ModelConfig base;
  std::vector<int> depths{1, 2, 4, 8};
  int seeds = 1;
  std::uint64_t base_seed = 0;
  int threads = 0;
  std::string dataset_id = "dataset";
};

struct EnergyRecord {
  std::string model;
  int depth = 0;
  std::uint64_t seed = 0;
  double mean_w2 = 0.0;
  double sd_w2 = 0.0;
  int epochs = 0;
  bool aborted = false;
  std::vector<double> energies;  // one per layer of the trained model
};

/// Trains every (model, depth, seed) triple; rows ordered by model, depth, seed.
std::vector<EnergyRecord> run_energy(const Dataset& ds, const EnergyOptions& opts);

/// Per-depth W2 rows "model,depth,mean_w2,sd_w2,runs" (mean and sd across seeds).
void write_depth_csv(const std::vector<EnergyRecord>& records, const std::string& path);
/// Per-layer energies "model,depth,layer,energy" averaged across seeds.
void write_layer_energy_csv(const std::vector<EnergyRecord>& records, const std::string& path);

}  // namespace gsheaf
