#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "permtest/io.hpp"
#include "permtest/procedures.hpp"
#include "permtest/simlab.hpp"

using namespace permtest;

namespace {

struct Common {
  double alpha = 0.05;
  std::size_t perms = 999;
  std::uint64_t seed = 0;
  bool exact = false;
  unsigned threads = 1;
  std::string input;
  std::string output;
};

struct TestArgs {
  std::string stat;
  std::vector<double> bandwidth;
  std::optional<double> smoothness;
  std::string bins;
  bool adaptive = false;
  std::size_t categories = 0;
  std::string label = "group";
  std::vector<std::string> y_cols, z_cols;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--alpha", c.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--perms", c.perms, "Monte Carlo permutations B")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_flag("--exact", c.exact, "Enumerate all permutations");
  cmd->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
  cmd->add_option("--input", c.input, "Data CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--output", c.output, "Write JSON here instead of stdout");
}

PermutationPlan plan_of(const Common& c) {
  PermutationPlan p = c.exact ? PermutationPlan::exact() : PermutationPlan::monte_carlo(c.perms, c.seed);
  p.seed = c.seed;
  p.workers = c.threads;
  return p;
}

void emit(const nlohmann::json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << j.dump(2) << '\n';
}

PointSet columns_as_points(const CsvTable& t, const std::vector<std::size_t>& cols,
                           const std::vector<std::size_t>& rows) {
  std::vector<std::vector<double>> data;
  for (auto c : cols) data.push_back(t.numeric(c));
  std::vector<double> coords;
  for (auto r : rows)
    for (const auto& col : data) coords.push_back(col[r]);
  return PointSet(cols.size(), std::move(coords));
}

std::vector<int> column_as_categories(const CsvTable& t, std::size_t col,
                                      const std::vector<std::size_t>& rows) {
  const auto all = t.categories(col);
  std::vector<int> out;
  for (auto r : rows) out.push_back(all[r]);
  return out;
}

std::size_t category_count(const std::vector<int>& a, const std::vector<int>& b, std::size_t given) {
  int m = 0;
  for (int v : a) m = std::max(m, v);
  for (int v : b) m = std::max(m, v);
  if (given != 0 && static_cast<std::size_t>(m) > given)
    throw std::domain_error("category " + std::to_string(m) + " exceeds --categories " +
                            std::to_string(given));
  return given != 0 ? given : static_cast<std::size_t>(m);
}

std::vector<std::size_t> resolve_columns(const CsvTable& t, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& n : names) out.push_back(t.column_index(n));
  return out;
}

nlohmann::json adaptive_json(std::string_view name, const AdaptiveOutcome& a) {
  auto j = outcome_json(name, a.combined);
  j["gamma_max"] = a.grid.gamma_max;
  j["per_test_alpha"] = a.grid.per_test_alpha;
  j["warnings"] = a.grid.warnings;
  auto parts = nlohmann::json::array();
  for (std::size_t i = 0; i < a.per_kappa.size(); ++i) {
    auto p = outcome_json(name, a.per_kappa[i]);
    p["kappa"] = a.grid.kappas[i];
    parts.push_back(p);
  }
  j["per_kappa"] = parts;
  return j;
}

BandwidthChoice bandwidth_of(const TestArgs& a) {
  if (!a.bandwidth.empty()) return a.bandwidth;
  return SmoothnessRule{a.smoothness.value_or(1.0)};
}

nlohmann::json run_twosample(const Common& c, const TestArgs& a) {
  const auto t = CsvTable::read_file(c.input);
  const auto label = t.column_index(a.label);
  std::vector<std::size_t> rows_y, rows_z;
  std::string first;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto& v = t.cell(r, label);
    if (first.empty()) first = v;
    if (v == first) {
      rows_y.push_back(r);
    } else {
      if (!rows_z.empty() && t.cell(rows_z.front(), label) != v)
        throw std::invalid_argument("label column has more than two groups");
      rows_z.push_back(r);
    }
  }
  if (rows_z.empty()) throw std::invalid_argument("label column has a single group");

  std::vector<std::size_t> value_cols;
  if (!a.y_cols.empty()) {
    value_cols = resolve_columns(t, a.y_cols);
  } else {
    for (std::size_t i = 0; i < t.header().size(); ++i)
      if (i != label) value_cols.push_back(i);
  }
  if (value_cols.empty()) throw std::invalid_argument("no value columns");

  const auto plan = plan_of(c);
  const std::string stat = a.stat.empty() ? "multinomial-l2" : a.stat;
  if (stat == "mmd") {
    TwoSamplePooled pts{columns_as_points(t, value_cols, rows_y), columns_as_points(t, value_cols, rows_z)};
    return outcome_json("mmd", mmd_test(pts, bandwidth_of(a), c.alpha, plan));
  }
  if (stat != "multinomial-l2" && stat != "l1-split")
    throw std::invalid_argument("twosample supports --stat multinomial-l2, l1-split or mmd");

  if (a.adaptive || !a.bins.empty()) {
    if (stat != "multinomial-l2") throw std::invalid_argument("binning applies to multinomial-l2");
    TwoSamplePooled pts{columns_as_points(t, value_cols, rows_y), columns_as_points(t, value_cols, rows_z)};
    if (a.adaptive) return adaptive_json("adaptive-two-sample", adaptive_two_sample(pts, c.alpha, plan));
    if (a.bins == "auto") {
      auto j = outcome_json("holder-two-sample", holder_two_sample(pts, a.smoothness.value_or(1.0), c.alpha, plan));
      j["kappa"] = holder_kappa_two_sample(pts.n1(), pts.y.dim(), a.smoothness.value_or(1.0));
      return j;
    }
    const auto kappa = std::stoul(a.bins);
    auto j = outcome_json("binned-two-sample", binned_two_sample(pts, kappa, c.alpha, plan));
    j["kappa"] = kappa;
    return j;
  }

  if (value_cols.size() != 1) throw std::invalid_argument("categorical tests need one value column");
  const auto y = column_as_categories(t, value_cols[0], rows_y);
  const auto z = column_as_categories(t, value_cols[0], rows_z);
  const auto d = category_count(y, z, a.categories);
  if (stat == "l1-split") return outcome_json("l1-split-two-sample", l1_split_two_sample(y, z, d, c.alpha, plan));
  return outcome_json("multinomial-l2-two-sample", multinomial_l2_two_sample(y, z, d, c.alpha, plan));
}

nlohmann::json run_independence(const Common& c, const TestArgs& a) {
  const auto t = CsvTable::read_file(c.input);
  std::vector<std::size_t> yc, zc;
  if (!a.y_cols.empty() || !a.z_cols.empty()) {
    if (a.y_cols.empty() || a.z_cols.empty()) throw std::invalid_argument("give both --y and --z");
    yc = resolve_columns(t, a.y_cols);
    zc = resolve_columns(t, a.z_cols);
  } else if (t.header().size() == 2) {
    yc = {0};
    zc = {1};
  } else {
    throw std::invalid_argument("more than two columns: name them with --y and --z");
  }
  std::vector<std::size_t> rows(t.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;

  const auto plan = plan_of(c);
  const std::string stat = a.stat.empty() ? "multinomial-l2" : a.stat;
  if (stat == "hsic") {
    PairedSample p{columns_as_points(t, yc, rows), columns_as_points(t, zc, rows)};
    return outcome_json("hsic", hsic_test(p, bandwidth_of(a), bandwidth_of(a), c.alpha, plan));
  }
  if (stat != "multinomial-l2" && stat != "l1-split")
    throw std::invalid_argument("independence supports --stat multinomial-l2, l1-split or hsic");

  if (a.adaptive || !a.bins.empty()) {
    if (stat != "multinomial-l2") throw std::invalid_argument("binning applies to multinomial-l2");
    PairedSample p{columns_as_points(t, yc, rows), columns_as_points(t, zc, rows)};
    if (a.adaptive) return adaptive_json("adaptive-independence", adaptive_independence(p, c.alpha, plan));
    if (a.bins == "auto") {
      const double s = a.smoothness.value_or(1.0);
      auto j = outcome_json("holder-independence", holder_independence(p, s, c.alpha, plan));
      j["kappa"] = holder_kappa_independence(p.size(), p.y.dim(), p.z.dim(), s);
      return j;
    }
    const auto kappa = std::stoul(a.bins);
    auto j = outcome_json("binned-independence", binned_independence(p, kappa, c.alpha, plan));
    j["kappa"] = kappa;
    return j;
  }

  if (yc.size() != 1 || zc.size() != 1)
    throw std::invalid_argument("categorical tests need one Y column and one Z column");
  const auto y = column_as_categories(t, yc[0], rows);
  const auto z = column_as_categories(t, zc[0], rows);
  const auto d1 = category_count(y, {}, a.categories);
  const auto d2 = category_count(z, {}, a.categories);
  if (stat == "l1-split")
    return outcome_json("l1-split-independence", l1_split_independence(y, z, d1, d2, c.alpha, plan));
  return outcome_json("multinomial-l2-independence", multinomial_l2_independence(y, z, d1, d2, c.alpha, plan));
}

nlohmann::json run_poisson(const Common& c, const TestArgs& a) {
  if (!a.stat.empty() && a.stat != "chisq") throw std::invalid_argument("poisson-chisq supports --stat chisq");
  const auto t = CsvTable::read_file(c.input);
  const auto label = t.column_index(a.label);
  std::vector<std::vector<double>> cols;
  for (std::size_t i = 0; i < t.header().size(); ++i)
    if (i != label) cols.push_back(t.numeric(i));
  const std::size_t d = cols.size();
  if (d == 0) throw std::invalid_argument("no count columns");
  std::vector<std::int64_t> ry, rz;
  std::string first;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto& g = t.cell(r, label);
    if (first.empty()) first = g;
    auto& dst = g == first ? ry : rz;
    for (const auto& col : cols) {
      const double v = col[r];
      if (v < 0 || v != std::floor(v)) throw std::domain_error("counts must be nonnegative integers");
      dst.push_back(static_cast<std::int64_t>(v));
    }
  }
  const auto counts = PoissonCounts::from_individuals(d, std::move(ry), std::move(rz));
  return outcome_json("poisson-chisq", poisson_chisq_test(counts, c.alpha, plan_of(c)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Permutation tests built on degenerate U-statistics"};
  app.require_subcommand(1);

  Common common;
  TestArgs args;
  auto add_test_opts = [&](CLI::App* cmd, bool with_bins) {
    add_common(cmd, common);
    cmd->add_option("--stat", args.stat, "Statistic")
        ->check(CLI::IsMember({"multinomial-l2", "l1-split", "mmd", "hsic", "chisq"}));
    cmd->add_option("--label", args.label, "Group label column");
    if (!with_bins) return;
    cmd->add_option("--bandwidth", args.bandwidth, "Gaussian bandwidths (one value or one per axis)");
    cmd->add_option("--smoothness", args.smoothness, "Smoothness s for bandwidth and bin rules");
    cmd->add_option("--bins", args.bins, "Bins per axis (integer or auto)");
    cmd->add_flag("--adaptive", args.adaptive, "Adaptive union over dyadic bin counts");
    cmd->add_option("--categories", args.categories, "Number of categories d (default: largest seen)");
    cmd->add_option("--y", args.y_cols, "Y value columns");
    cmd->add_option("--z", args.z_cols, "Z value columns (independence)");
  };

  auto* two = app.add_subcommand("twosample", "Two-sample test");
  add_test_opts(two, true);
  auto* ind = app.add_subcommand("independence", "Independence test");
  add_test_opts(ind, true);
  auto* poi = app.add_subcommand("poisson-chisq", "Poisson-sampling chi-square two-sample test");
  add_test_opts(poi, false);

  auto* sim = app.add_subcommand("simulate", "Run a simulation experiment");
  std::string kind, config_path, sim_output;
  std::optional<std::uint64_t> sim_seed;
  std::optional<unsigned> sim_threads;
  sim->add_option("experiment", kind, "threshold, qq, histogram or power")
      ->required()
      ->check(CLI::IsMember({"threshold", "qq", "histogram", "power"}));
  sim->add_option("--config", config_path, "Experiment JSON")->check(CLI::ExistingFile);
  sim->add_option("--output", sim_output, "CSV output path (default: config output, else stdout)");
  sim->add_option("--seed", sim_seed, "Override the config seed");
  sim->add_option("--threads", sim_threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*two) emit(run_twosample(common, args), common.output);
    if (*ind) emit(run_independence(common, args), common.output);
    if (*poi) emit(run_poisson(common, args), common.output);
    if (*sim) {
      nlohmann::json j = nlohmann::json::object();
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        try {
          j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
          throw std::invalid_argument(std::string("config: ") + e.what());
        }
      }
      if (j.contains("experiment") && j["experiment"] != kind)
        throw std::invalid_argument("config experiment does not match the subcommand");
      j["experiment"] = kind;
      auto cfg = ExperimentConfig::from_json(j);
      if (sim_seed) cfg.seed = *sim_seed;
      if (sim_threads) cfg.workers = *sim_threads;
      const std::string path = sim_output.empty() ? cfg.output : sim_output;
      if (path.empty()) {
        run_experiment(cfg, std::cout);
      } else {
        std::ofstream out(path);
        if (!out) throw std::invalid_argument("cannot write " + path);
        run_experiment(cfg, out);
      }
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::length_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
