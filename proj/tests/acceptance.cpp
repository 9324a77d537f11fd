// Acceptance suite: one PASS/FAIL line per criterion. Arguments select
// criteria by number; no arguments runs all of them.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "gsheaf/data.hpp"
#include "gsheaf/experiments.hpp"
#include "gsheaf/verify.hpp"

using namespace gsheaf;

namespace {

using Clock = std::chrono::steady_clock;

// Oversmoothing setup.
constexpr int kSmoothNodes = 100;
constexpr int kSmoothM = 25;
constexpr double kSmoothBudget = 20.0 * 60.0;
constexpr double kGcnEnergyRatio = 1e-3;
constexpr double kGsnnEnergyFactor = 2.0;
constexpr double kGcnDegradation = 3.0;
constexpr double kGsnnDrift = 1.5;
constexpr int kSmoothEpochs = 300;

// Ordering setup.
constexpr int kOrderNodes = 200;
constexpr int kOrderM = 50;
constexpr int kOrderSeeds = 5;
constexpr double kOrderBudget = 45.0 * 60.0;
constexpr int kOrderEpochs = 600;

// Shared training budget for the two learning experiments.
constexpr int kSinkhornIters = 50;
constexpr int kHidden = 16;

constexpr double kVerifyBudget = 180.0;

double since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

CheckResult finish(int id, std::string name, double budget, Clock::time_point start, bool ok,
                   std::string detail) {
  CheckResult r;
  r.id = id;
  r.name = std::move(name);
  r.budget_seconds = budget;
  r.seconds = since(start);
  r.numeric_pass = ok;
  r.detail = std::move(detail);
  return r;
}

ModelConfig experiment_config() {
  ModelConfig cfg;
  cfg.hidden = kHidden;
  cfg.sinkhorn.iters = kSinkhornIters;
  return cfg;
}

std::string num(double x) {
  std::ostringstream ss;
  ss.precision(4);
  ss << x;
  return ss.str();
}

CheckResult check_oversmoothing() {
  const auto start = Clock::now();
  SynthConfig sc;
  sc.nodes = kSmoothNodes;
  sc.ba_m = kSmoothM;
  sc.seed = 1;
  const Dataset ds = synthesize(sc);
  EnergyOptions opts;
  opts.models = {ModelKind::gcn, ModelKind::gsnn_diag, ModelKind::gsnn_orth, ModelKind::gsnn_gen};
  opts.base = experiment_config();
  opts.base.epochs = kSmoothEpochs;
  opts.seeds = 1;
  opts.base_seed = 0;
  const std::vector<EnergyRecord> rows = run_energy(ds, opts);

  std::map<std::string, std::map<int, const EnergyRecord*>> by;
  for (const EnergyRecord& r : rows) by[r.model][r.depth] = &r;
  bool ok = true;
  std::ostringstream detail;

  // Per-layer energies inside the depth-8 models.
  const std::vector<double>& gcn = by["gcn"][8]->energies;
  const double gcn_ratio = gcn.back() / gcn.front();
  const bool gcn_energy = gcn_ratio < kGcnEnergyRatio;
  const std::vector<double>& orth = by["gsnn_orth"][8]->energies;
  const auto [lo, hi] = std::minmax_element(orth.begin(), orth.end());
  const double orth_factor = *hi / std::max(*lo, 1e-300);
  const bool orth_energy = orth_factor < kGsnnEnergyFactor;
  detail << "gcn energy L8/L1 " << num(gcn_ratio) << (gcn_energy ? " ok" : " FAIL")
         << "; orth energy max/min " << num(orth_factor) << (orth_energy ? " ok" : " FAIL");
  ok = ok && gcn_energy && orth_energy;

  // Test W2 at depth 8 relative to depth 1.
  for (const std::string model : {"gcn", "gsnn_diag", "gsnn_orth", "gsnn_gen"}) {
    const double w1 = by[model][1]->mean_w2, w8 = by[model][8]->mean_w2;
    const double ratio = w8 / w1;
    const bool pass = model == "gcn" ? ratio > kGcnDegradation
                                     : std::max(ratio, 1.0 / ratio) <= kGsnnDrift;
    detail << "; " << model << " W2 " << num(w1) << "->" << num(w8) << (pass ? " ok" : " FAIL");
    ok = ok && pass;
  }
  for (const EnergyRecord& r : rows) ok = ok && !r.aborted;
  return finish(9, "oversmoothing (depth sweep)", kSmoothBudget, start, ok, detail.str());
}

CheckResult check_ordering() {
  const auto start = Clock::now();
  SynthConfig sc;
  sc.nodes = kOrderNodes;
  sc.ba_m = kOrderM;
  sc.seed = 1;
  const Dataset ds = synthesize(sc);
  SweepOptions opts;
  opts.models = {ModelKind::gsnn_gen, ModelKind::gsnn_graphlap, ModelKind::gaussian_gcn};
  opts.base = experiment_config();
  opts.base.epochs = kOrderEpochs;
  opts.seeds = kOrderSeeds;
  opts.base_seed = 0;
  const std::vector<RunRecord> runs = run_sweep(ds, opts);
  std::map<std::string, SummaryRow> s;
  for (const SummaryRow& row : summarize(runs)) s[row.model] = row;

  bool ok = true;
  std::ostringstream detail;
  const SummaryRow& gen = s["gsnn_gen"];
  detail << "gsnn_gen " << num(gen.mean) << "+-" << num(gen.sd);
  for (const std::string other : {"gsnn_graphlap", "gaussian_gcn"}) {
    const SummaryRow& o = s[other];
    const double pooled = std::sqrt(0.5 * (gen.sd * gen.sd + o.sd * o.sd));
    const double margin = o.mean - gen.mean;
    const bool pass = margin > pooled;
    detail << "; " << other << " " << num(o.mean) << "+-" << num(o.sd) << " margin " << num(margin)
           << " pooled sd " << num(pooled) << (pass ? " ok" : " FAIL");
    ok = ok && pass;
  }
  for (const RunRecord& r : runs) ok = ok && !r.aborted;
  return finish(10, "model ordering on BA(200, 50)", kOrderBudget, start, ok, detail.str());
}

CheckResult check_verify_command() {
  const auto start = Clock::now();
  const std::string cmd = std::string(GSHEAF_BINARY) + " verify > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return finish(11, "verify command", kVerifyBudget, start, code == 0,
                "exit code " + std::to_string(code));
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  auto selected = [&](int id) { return wanted.empty() || wanted.count(id) > 0; };

  std::vector<std::function<CheckResult()>> checks = property_checks();
  checks.push_back(check_oversmoothing);
  checks.push_back(check_ordering);
  checks.push_back(check_verify_command);

  bool all = true;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    if (!selected(static_cast<int>(i) + 1)) continue;
    const CheckResult r = checks[i]();
    std::cout << format_check(r) << std::endl;
    all = all && r.pass();
  }
  return all ? 0 : 1;
}
