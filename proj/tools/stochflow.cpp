// Command-line driver: strong-convergence and error-vs-effort reports,
// shuffle reductions, quadrature rate checks and local error gap
// estimates for linear Stratonovich SDE integrators.
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <exception>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "stochflow/config.hpp"
#include "stochflow/harness.hpp"
#include "stochflow/integrals.hpp"
#include "stochflow/localgap.hpp"
#include "stochflow/schemes.hpp"
#include "stochflow/shuffle.hpp"
#include "stochflow/system.hpp"
#include "stochflow/wiener.hpp"
#include "stochflow/word.hpp"

namespace {

using nlohmann::json;
using namespace stochflow;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

ExperimentSpec spec_from_config(const std::string& config_path,
                                std::uint64_t seed, int workers,
                                const std::string& out_dir) {
  ExperimentSpec spec;
  if (!config_path.empty()) {
    Config cfg = Config::parse_file(config_path);
    cfg.restrict_keys({"fixture", "schemes", "T", "h_list", "n_paths",
                       "n_batches", "Q", "ref_factor"});
    spec.fixture = cfg.get_string("fixture", spec.fixture);
    spec.schemes = cfg.get_strings("schemes", {});
    spec.T = cfg.get_double("T", spec.T);
    spec.h_list = cfg.get_doubles("h_list", {});
    spec.n_paths = static_cast<int>(cfg.get_int("n_paths", spec.n_paths));
    spec.n_batches = static_cast<int>(cfg.get_int("n_batches", spec.n_batches));
    spec.fixed_Q = cfg.get_int("Q", 0);
    spec.ref_factor = static_cast<int>(cfg.get_int("ref_factor", spec.ref_factor));
  }
  if (spec.h_list.empty())
    for (int k = 4; k <= 9; ++k) spec.h_list.push_back(std::ldexp(spec.T, -k));
  spec.seed = seed;
  spec.workers = workers;
  spec.out_dir = out_dir;
  return spec;
}

json scheme_summaries(const ExperimentSpec& spec, const ErrorReport& report,
                      bool vs_effort) {
  json out = json::object();
  for (const std::string& label : spec.schemes) {
    std::vector<double> xs, ys;
    for (const ErrorRow& row : report.rows) {
      if (row.scheme != label || !(row.error > 0)) continue;
      const double effort =
          static_cast<double>(row.eval_flops) + static_cast<double>(row.quad_ops);
      xs.push_back(vs_effort ? effort : row.h);
      ys.push_back(row.error);
    }
    json entry;
    entry["points"] = xs.size();
    if (xs.size() >= 4) entry["slope"] = slope(xs, ys);
    out[label] = entry;
  }
  return out;
}

int cmd_convergence(const std::string& config_path, std::uint64_t seed,
                    int workers, const std::string& out_dir) {
  ExperimentSpec spec = spec_from_config(config_path, seed, workers, out_dir);
  Experiment exp(spec);
  ErrorReport report = exp.run();
  write_file(out_dir + "/convergence.csv", report_csv(report));
  json summary;
  summary["fixture"] = spec.fixture;
  summary["seed"] = spec.seed;
  summary["n_paths"] = spec.n_paths;
  summary["error_vs_h"] = scheme_summaries(spec, report, false);
  write_file(out_dir + "/convergence_summary.json", summary.dump(2) + "\n");
  std::cout << report_csv(report);
  return 0;
}

int cmd_effort(const std::string& config_path, std::uint64_t seed, int workers,
               const std::string& out_dir) {
  ExperimentSpec spec = spec_from_config(config_path, seed, workers, out_dir);
  Experiment exp(spec);
  ErrorReport report = exp.run();
  const auto crossovers = exp.effort_model(report);
  write_file(out_dir + "/effort.csv", report_csv(report));
  json summary;
  summary["fixture"] = spec.fixture;
  summary["error_vs_effort"] = scheme_summaries(spec, report, true);
  json regimes = json::array();
  for (const ErrorRow& row : report.rows)
    regimes.push_back({{"scheme", row.scheme}, {"h", row.h}, {"regime", row.regime}});
  summary["regimes"] = regimes;
  json cross = json::object();
  for (const auto& [label, h] : crossovers) cross[label] = h;
  summary["crossover_h"] = cross;
  // Echo of the effort-exponent table beta(M, l).
  json beta_table = json::array();
  for (double M : {1.0, 1.5, 2.0, 2.5, 3.0})
    for (int l = 2; l <= static_cast<int>(M + 1.0); ++l)
      beta_table.push_back({{"M", M}, {"l", l}, {"beta", beta(M, l)}});
  summary["beta_table"] = beta_table;
  write_file(out_dir + "/effort_summary.json", summary.dump(2) + "\n");
  std::cout << report_csv(report);
  return 0;
}

int cmd_shuffle(const std::string& word_text, bool as_pattern) {
  const Word w = word_from_string(word_text);
  if (as_pattern) {
    const ShuffleSystem sys = solve_shuffle_system(w);
    std::cout << "pattern " << word_str(w) << ": rank " << sys.rank << ", "
              << sys.n_equations << " equations, " << sys.n_unknowns
              << " unknowns\n";
    std::cout << "generators:";
    for (const Word& g : sys.generators) std::cout << ' ' << "J_" << word_str(g);
    std::cout << "\n";
    for (const auto& [lhs, rhs] : sys.reduction)
      std::cout << "J_" << word_str(lhs) << " = " << to_string(rhs) << "\n";
    return 0;
  }
  const WordStats stats = word_stats(w);
  if (stats.constant) {
    std::cout << "J_" << word_str(w) << " exact: closed form in (h, dW)\n";
    return 0;
  }
  const WordClass cls = classify_word(w);
  std::cout << "J_" << word_str(w) << " class: " << word_class_name(cls) << "\n";
  try {
    const JExpr reduced = parts_reduce(w);
    std::cout << "J_" << word_str(w) << " = " << to_string(reduced) << "\n";
  } catch (const std::invalid_argument&) {
    // No integration-by-parts reduction; classification already printed.
  }
  return 0;
}

int cmd_quadcheck(const std::string& word_text, double h, int q_levels,
                  int n_paths, std::uint64_t seed) {
  const Word w = word_from_string(word_text);
  const RatePair rate = quadrature_rate(w);
  const std::int64_t q_fine = std::int64_t(1) << (q_levels + 5);
  std::vector<double> qs, errs;
  std::cout << "word " << word_str(w) << ": predicted rate h^" << rate.h_exponent
            << " / Q^" << rate.q_exponent << "\n";
  std::cout << "Q,rms_error\n";
  for (int level = 0; level < q_levels; ++level) {
    const std::int64_t Q = std::int64_t(1) << level;
    double sum_sq = 0.0;
    for (int path = 0; path < n_paths; ++path) {
      const WienerGrid fine = generate(1 + *std::max_element(w.begin(), w.end()),
                                       h, 1, q_fine, seed,
                                       static_cast<std::uint64_t>(path));
      const StepSlice fine_slice = StepSlice::from_grid(fine, 0);
      const double truth =
          conditional_expectation(w, fine_slice, IntegralMode::linear_path);
      const WienerGrid coarse = coarsen(fine, q_fine / Q);
      const StepSlice slice = StepSlice::from_grid(coarse, 0);
      const double approx =
          conditional_expectation(w, slice, IntegralMode::brownian_bridge);
      const double e = approx - truth;
      sum_sq += e * e;
    }
    const double rms = std::sqrt(sum_sq / n_paths);
    std::cout << Q << ',' << rms << '\n';
    qs.push_back(static_cast<double>(Q));
    errs.push_back(rms);
  }
  if (qs.size() >= 4 && errs.back() > 0.0)
    std::cout << "measured Q-slope: " << slope(qs, errs)
              << " (predicted " << -rate.q_exponent << ")\n";
  return 0;
}

int cmd_localerr(const std::string& fixture, double h, std::int64_t Q,
                 int n_samples, const std::string& scheme_a,
                 const std::string& scheme_b, std::uint64_t seed) {
  const LinearSDESystem sys = fixture_by_name(fixture);
  const LocalGapResult gap = local_error_gap(sys, h, Q, n_samples, scheme_a,
                                             scheme_b, seed);
  std::cout << "local error gap " << scheme_a << " - " << scheme_b
            << " on " << fixture << " (h=" << h << ", Q=" << Q << ", n="
            << n_samples << ")\n";
  std::cout << "lambda_min = " << gap.lambda_min << " +/- " << gap.std_error
            << "\n";
  std::cout << (gap.lambda_min >= -3.0 * gap.std_error
                    ? "gap is non-negative within noise\n"
                    : "gap has a significant negative direction\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"strong integrators for linear Stratonovich SDEs"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  std::uint64_t seed = 0;
  int workers = 1;
  app.add_option("--config", config_path, "flat key=value config file");
  app.add_option("--seed", seed, "master RNG seed");
  app.add_option("--workers", workers, "worker threads for path sampling");
  app.add_option("--out", out_dir, "output directory for reports");
  // Global flags may follow the subcommand name.
  app.fallthrough();

  auto* conv = app.add_subcommand("convergence", "global error vs stepsize");
  auto* eff = app.add_subcommand("effort", "global error vs computational effort");

  std::string shuffle_word;
  bool shuffle_pattern = false;
  auto* shuf = app.add_subcommand("shuffle", "shuffle-algebra reduction of a word");
  shuf->add_option("word", shuffle_word, "word over {0..9}")->required();
  shuf->add_flag("--pattern", shuffle_pattern,
                 "solve the full relation system for the letter pattern");

  std::string quad_word = "12";
  double quad_h = 0.5;
  int quad_levels = 6, quad_paths = 2000;
  auto* quad = app.add_subcommand("quadcheck", "measured vs predicted quadrature rates");
  quad->add_option("word", quad_word, "word over {0..9}");
  quad->add_option("--step", quad_h, "step size");
  quad->add_option("--levels", quad_levels, "number of Q doublings");
  quad->add_option("--paths", quad_paths, "Monte Carlo paths");

  std::string le_fixture = "linear-2w", le_a = "neumann-1", le_b = "magnus-1";
  double le_h = 0.125;
  std::int64_t le_Q = 16;
  int le_samples = 2000;
  auto* le = app.add_subcommand("localerr", "one-step local error gap estimate");
  le->add_option("--fixture", le_fixture, "fixture name");
  le->add_option("--step", le_h, "step size");
  le->add_option("--Q", le_Q, "quadrature subdivisions");
  le->add_option("--samples", le_samples, "Monte Carlo samples");
  le->add_option("--scheme-a", le_a, "first scheme");
  le->add_option("--scheme-b", le_b, "second scheme");

  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(out_dir);
    if (conv->parsed()) return cmd_convergence(config_path, seed, workers, out_dir);
    if (eff->parsed()) return cmd_effort(config_path, seed, workers, out_dir);
    if (shuf->parsed()) return cmd_shuffle(shuffle_word, shuffle_pattern);
    if (quad->parsed())
      return cmd_quadcheck(quad_word, quad_h, quad_levels, quad_paths, seed);
    if (le->parsed())
      return cmd_localerr(le_fixture, le_h, le_Q, le_samples, le_a, le_b, seed);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
