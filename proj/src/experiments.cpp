#include "gsheaf/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "gsheaf/error.hpp"
#include "gsheaf/gsnn/train.hpp"

namespace gsheaf {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw PathError("cannot write " + path);
  out << std::setprecision(17);
  return out;
}

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& xs) {
  MeanSd r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return r;
}

struct Outcome {
  EvalResult eval;
  TrainResult train;
  std::vector<double> energies;
};

Outcome train_and_test(const ModelConfig& cfg, const Dataset& ds, bool energies) {
  auto model = make_model(cfg, ds);
  Outcome o;
  o.train = train(*model, ds);
  o.eval = evaluate(*model, ds, SplitName::test);
  if (energies) o.energies = layer_energies(*model);
  return o;
}

}  // namespace

int worker_count() {
  if (const char* env = std::getenv("GSL_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, int threads, const std::function<void(int)>& job) {
  if (threads <= 0) threads = worker_count();
  threads = std::max(1, std::min(threads, count));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

std::vector<RunRecord> run_sweep(const Dataset& ds, const SweepOptions& opts) {
  if (opts.seeds < 1) throw ParameterError("sweep: seeds must be >= 1");
  const int runs = static_cast<int>(opts.models.size()) * opts.seeds;
  std::vector<RunRecord> records(runs);
  parallel_for(runs, opts.threads, [&](int i) {
    ModelConfig cfg = opts.base;
    cfg.kind = opts.models[i / opts.seeds];
    cfg.seed = opts.base_seed + static_cast<std::uint64_t>(i % opts.seeds);
    const Outcome o = train_and_test(cfg, ds, false);
    RunRecord& r = records[i];
    r.model = to_string(cfg.kind);
    r.dataset = opts.dataset_id;
    r.seed = cfg.seed;
    r.mean_w2 = o.eval.mean;
    r.sd_w2 = o.eval.sd;
    r.epochs = static_cast<int>(o.train.history.size());
    r.seconds = o.train.seconds;
    r.aborted = o.train.aborted;
  });
  return records;
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
  std::vector<SummaryRow> rows;
  std::map<std::string, std::vector<double>> by_model;
  for (const RunRecord& r : records) {
    if (!by_model.count(r.model)) rows.push_back({r.model, 0.0, 0.0, 0});
    by_model[r.model].push_back(r.mean_w2);
  }
  for (SummaryRow& row : rows) {
    const MeanSd m = mean_sd(by_model[row.model]);
    row.mean = m.mean;
    row.sd = m.sd;
    row.runs = static_cast<int>(by_model[row.model].size());
  }
  return rows;
}

void write_results_csv(const std::vector<RunRecord>& records, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "model,dataset,seed,mean_w2,sd_w2,epochs,seconds,status\n";
  for (const RunRecord& r : records) {
    out << r.model << ',' << r.dataset << ',' << r.seed << ',' << r.mean_w2 << ',' << r.sd_w2 << ','
        << r.epochs << ',' << r.seconds << ',' << (r.aborted ? "aborted" : "ok") << '\n';
  }
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "model,mean_w2,sd_w2,runs\n";
  for (const SummaryRow& r : rows) out << r.model << ',' << r.mean << ',' << r.sd << ',' << r.runs << '\n';
}

std::string format_summary(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "model" << std::setw(14) << "mean W2" << std::setw(14) << "sd"
     << "runs\n";
  os << std::setprecision(6);
  for (const SummaryRow& r : rows) {
    os << std::left << std::setw(16) << r.model << std::setw(14) << r.mean << std::setw(14) << r.sd
       << r.runs << '\n';
  }
  return os.str();
}

std::vector<EnergyRecord> run_energy(const Dataset& ds, const EnergyOptions& opts) {
  if (opts.seeds < 1) throw ParameterError("energy: seeds must be >= 1");
  const int per_model = static_cast<int>(opts.depths.size()) * opts.seeds;
  const int runs = static_cast<int>(opts.models.size()) * per_model;
  std::vector<EnergyRecord> records(runs);
  parallel_for(runs, opts.threads, [&](int i) {
    ModelConfig cfg = opts.base;
    cfg.kind = opts.models[i / per_model];
    cfg.layers = opts.depths[(i % per_model) / opts.seeds];
    cfg.seed = opts.base_seed + static_cast<std::uint64_t>(i % opts.seeds);
    const Outcome o = train_and_test(cfg, ds, true);
    EnergyRecord& r = records[i];
    r.model = to_string(cfg.kind);
    r.depth = cfg.layers;
    r.seed = cfg.seed;
    r.mean_w2 = o.eval.mean;
    r.sd_w2 = o.eval.sd;
    r.epochs = static_cast<int>(o.train.history.size());
    r.aborted = o.train.aborted;
    r.energies = o.energies;
  });
  return records;
}

void write_depth_csv(const std::vector<EnergyRecord>& records, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "model,depth,mean_w2,sd_w2,runs\n";
  for (std::size_t i = 0; i < records.size();) {
    std::vector<double> values;
    std::size_t j = i;
    for (; j < records.size() && records[j].model == records[i].model &&
           records[j].depth == records[i].depth;
         ++j) {
      values.push_back(records[j].mean_w2);
    }
    const MeanSd m = mean_sd(values);
    out << records[i].model << ',' << records[i].depth << ',' << m.mean << ',' << m.sd << ','
        << values.size() << '\n';
    i = j;
  }
}

void write_layer_energy_csv(const std::vector<EnergyRecord>& records, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "model,depth,layer,energy\n";
  for (std::size_t i = 0; i < records.size();) {
    std::size_t j = i;
    std::vector<double> sums(records[i].energies.size(), 0.0);
    for (; j < records.size() && records[j].model == records[i].model &&
           records[j].depth == records[i].depth;
         ++j) {
      for (std::size_t l = 0; l < sums.size() && l < records[j].energies.size(); ++l) {
        sums[l] += records[j].energies[l];
      }
    }
    for (std::size_t l = 0; l < sums.size(); ++l) {
      out << records[i].model << ',' << records[i].depth << ',' << l + 1 << ','
          << sums[l] / static_cast<double>(j - i) << '\n';
    }
    i = j;
  }
}

}  // namespace gsheaf
