#include "permtest/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "permtest/calibration.hpp"
#include "permtest/io.hpp"
#include "permtest/parallel.hpp"
#include "permtest/procedures.hpp"
#include "permtest/summation.hpp"

namespace permtest {

namespace {

constexpr double kDeltaSlack = 1e-12;

void check_signs(const std::vector<int>& s, std::size_t d, const char* who) {
  if (s.size() != d) throw std::domain_error(std::string(who) + ": need one sign per category");
  long sum = 0;
  for (int v : s) {
    if (v != 1 && v != -1) throw std::domain_error(std::string(who) + ": signs must be +1 or -1");
    sum += v;
  }
  if (sum != 0) throw std::domain_error(std::string(who) + ": signs must be balanced");
}

std::vector<int> signs_or_default(const std::vector<int>& s, std::size_t d) {
  return s.empty() ? balanced_signs(d) : s;
}

double l2_norm(const std::vector<double>& p) {
  CompensatedSum s;
  for (double v : p) s += v * v;
  return std::sqrt(s.value());
}

std::vector<double> mixture(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m[i] = 0.5 * a[i] + 0.5 * b[i];
  return m;
}

double two_sample_u_of(const std::vector<int>& y, const std::vector<int>& z, std::size_t d) {
  return multinomial_two_sample_statistic(y, z, d).fn({});
}

// Per-trial generator for configuration block `block` (a gamma, a d value,
// a multiplier) so that blocks do not share streams.
Rng trial_rng(std::uint64_t seed, std::size_t block, std::size_t trial) {
  return Rng::stream(stream_seed(seed, block), trial);
}

template <class T>
std::vector<T> read_list(const nlohmann::json& j, const char* key) {
  if (!j.is_array()) throw std::invalid_argument(std::string("config: '") + key + "' must be a list");
  std::vector<T> out;
  for (const auto& v : j) out.push_back(v.get<T>());
  return out;
}

}  // namespace

// ---- distributions -----------------------------------------------------------------

std::vector<int> balanced_signs(std::size_t d) {
  if (d == 0 || d % 2 != 0) throw std::domain_error("balanced signs need an even d");
  std::vector<int> s(d, 1);
  std::fill(s.begin() + static_cast<std::ptrdiff_t>(d / 2), s.end(), -1);
  return s;
}

std::vector<double> pmf(const DistSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::vector<double> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PowerLaw>) {
          if (s.d == 0) throw std::domain_error("power law: d must be positive");
          if (!std::isfinite(s.gamma)) throw std::domain_error("power law: gamma must be finite");
          std::vector<double> p(s.d);
          for (std::size_t k = 0; k < s.d; ++k) p[k] = std::pow(static_cast<double>(k + 1), s.gamma);
          CompensatedSum total;
          for (double v : p) total += v;
          for (double& v : p) v /= total.value();
          return p;
        } else if constexpr (std::is_same_v<T, Uniform>) {
          if (s.d == 0) throw std::domain_error("uniform: d must be positive");
          return std::vector<double>(s.d, 1.0 / static_cast<double>(s.d));
        } else if constexpr (std::is_same_v<T, PerturbedHypercube>) {
          if (s.d == 0 || s.d % 2 != 0) throw std::domain_error("perturbation: d must be even");
          const double cap = 1.0 / static_cast<double>(s.d);
          if (s.delta < 0.0 || s.delta > cap + kDeltaSlack)
            throw std::domain_error("perturbation: delta must lie in [0, 1/d]");
          const auto signs = signs_or_default(s.signs, s.d);
          check_signs(signs, s.d, "perturbation");
          std::vector<double> p(s.d);
          for (std::size_t k = 0; k < s.d; ++k) p[k] = std::max(0.0, cap + s.delta * signs[k]);
          return p;
        } else if constexpr (std::is_same_v<T, JointPerturbed>) {
          if (s.d1 == 0 || s.d1 % 2 != 0 || s.d2 == 0 || s.d2 % 2 != 0)
            throw std::domain_error("joint perturbation: d1 and d2 must be even");
          const double cap = 1.0 / static_cast<double>(s.d1 * s.d2);
          if (s.delta < 0.0 || s.delta > cap + kDeltaSlack)
            throw std::domain_error("joint perturbation: delta must lie in [0, 1/(d1 d2)]");
          const auto sy = signs_or_default(s.signs_y, s.d1);
          const auto sz = signs_or_default(s.signs_z, s.d2);
          check_signs(sy, s.d1, "joint perturbation");
          check_signs(sz, s.d2, "joint perturbation");
          std::vector<double> p(s.d1 * s.d2);
          for (std::size_t a = 0; a < s.d1; ++a)
            for (std::size_t b = 0; b < s.d2; ++b)
              p[a * s.d2 + b] = std::max(0.0, cap + s.delta * sy[a] * sz[b]);
          return p;
        } else {
          throw std::domain_error("pmf: continuous distribution has no probability vector");
        }
      },
      spec);
}

CategoricalSampler::CategoricalSampler(std::vector<double> p) : cdf_(std::move(p)) {
  if (cdf_.empty()) throw std::domain_error("categorical sampler: empty pmf");
  CompensatedSum s;
  for (double& v : cdf_) {
    if (!(v >= 0.0)) throw std::domain_error("categorical sampler: negative probability");
    s += v;
    v = s.value();
  }
  const double total = cdf_.back();
  if (!(total > 0.0)) throw std::domain_error("categorical sampler: zero total mass");
  for (double& v : cdf_) v /= total;
  cdf_.back() = 1.0;
}

int CategoricalSampler::operator()(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf_.begin(),
                                                   static_cast<std::ptrdiff_t>(cdf_.size()) - 1)) +
         1;
}

std::vector<int> CategoricalSampler::draw(std::size_t n, Rng& rng) const {
  std::vector<int> out(n);
  for (auto& v : out) v = (*this)(rng);
  return out;
}

PointSet lift_to_unit_interval(const std::vector<int>& cells, std::size_t kappa, Rng& rng) {
  std::vector<double> x(cells.size());
  const double k = static_cast<double>(kappa);
  for (std::size_t i = 0; i < cells.size(); ++i)
    x[i] = (static_cast<double>(cells[i] - 1) + rng.uniform()) / k;
  return PointSet::scalars(std::move(x));
}

Dataset sample(const DistSpec& spec, std::size_t n, Rng& rng) {
  Dataset out;
  if (const auto* j = std::get_if<JointPerturbed>(&spec)) {
    const CategoricalSampler draw(pmf(spec));
    out.y.resize(n);
    out.z.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int cell = draw(rng) - 1;
      out.y[i] = cell / static_cast<int>(j->d2) + 1;
      out.z[i] = cell % static_cast<int>(j->d2) + 1;
    }
  } else if (const auto* u = std::get_if<ContinuousUniform>(&spec)) {
    std::vector<double> c(n * u->dim);
    for (auto& v : c) v = rng.uniform();
    out.points = PointSet(u->dim, std::move(c));
  } else if (const auto* g = std::get_if<GaussianLocation>(&spec)) {
    std::normal_distribution<double> nd(g->shift, 1.0);
    std::vector<double> c(n * g->dim);
    for (auto& v : c) v = nd(rng);
    out.points = PointSet(g->dim, std::move(c));
  } else {
    out.y = CategoricalSampler(pmf(spec)).draw(n, rng);
  }
  return out;
}

// ---- error rates ------------------------------------------------------------------

double binomial_se(double p, std::size_t trials) {
  return trials == 0 ? 0.0 : std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

ErrorRate estimate_error_rates(const std::function<bool(std::size_t, Rng&)>& trial,
                               std::size_t trials, std::uint64_t seed, unsigned workers) {
  if (trials < 100) throw std::invalid_argument("estimate_error_rates: need at least 100 trials");
  std::vector<char> hits(trials, 0);
  parallel_for(trials, workers, [&](std::size_t i) {
    Rng rng = Rng::stream(seed, i);
    hits[i] = trial(i, rng) ? 1 : 0;
  });
  ErrorRate r;
  r.trials = trials;
  r.rate = static_cast<double>(std::count(hits.begin(), hits.end(), 1)) / static_cast<double>(trials);
  r.se = binomial_se(r.rate, trials);
  return r;
}

// ---- statistics helpers -------------------------------------------------------------

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (j == b.size() || (i < a.size() && a[i] <= b[j]))
      x = a[i];
    else
      x = b[j];
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return best;
}

double sample_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("sample_quantile: empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double sample_skewness(const std::vector<double>& x) {
  if (x.size() < 3) return 0.0;
  CompensatedSum s;
  for (double v : x) s += v;
  const double mean = s.value() / static_cast<double>(x.size());
  CompensatedSum m2, m3;
  for (double v : x) {
    const double c = v - mean;
    m2 += c * c;
    m3 += c * c * c;
  }
  const double n = static_cast<double>(x.size());
  const double var = m2.value() / n;
  if (var <= 0.0) return 0.0;
  return (m3.value() / n) / std::pow(var, 1.5);
}

// ---- configuration -------------------------------------------------------------------

std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::Threshold: return "threshold";
    case Experiment::QQ: return "qq";
    case Experiment::Histogram: return "histogram";
    case Experiment::Power: return "power";
  }
  return "unknown";
}

Experiment parse_experiment(const std::string& name) {
  if (name == "threshold") return Experiment::Threshold;
  if (name == "qq") return Experiment::QQ;
  if (name == "histogram") return Experiment::Histogram;
  if (name == "power") return Experiment::Power;
  throw std::invalid_argument("unknown experiment '" + name + "'");
}

ExperimentConfig ExperimentConfig::defaults(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  switch (e) {
    case Experiment::Threshold:
      break;
    case Experiment::QQ:
      c.n1 = c.n2 = 200;
      c.permutations = 2000;
      c.null_replicates = 2000;
      c.d_values = {5, 100, 1000};
      break;
    case Experiment::Histogram:
      c.n1 = c.n2 = 100;
      c.null_replicates = 1000;
      c.d_values = {5, 100, 10000};
      break;
    case Experiment::Power:
      c.design = "multinomial-two-sample";
      c.n1 = c.n2 = 200;
      c.d = 10;
      c.d1 = c.d2 = 2;
      c.trials = 500;
      c.permutations = 199;
      break;
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  if (!j.contains("experiment")) throw std::invalid_argument("config: missing 'experiment'");
  ExperimentConfig c = defaults(parse_experiment(j.at("experiment").get<std::string>()));
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "experiment") continue;
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "trials") c.trials = v.get<std::size_t>();
      else if (key == "B" || key == "permutations") c.permutations = v.get<std::size_t>();
      else if (key == "alpha") c.alpha = v.get<double>();
      else if (key == "workers") c.workers = v.get<unsigned>();
      else if (key == "output") c.output = v.get<std::string>();
      else if (key == "design") c.design = v.get<std::string>();
      else if (key == "n1") c.n1 = v.get<std::size_t>();
      else if (key == "n2") c.n2 = v.get<std::size_t>();
      else if (key == "n") c.n1 = c.n2 = v.get<std::size_t>();
      else if (key == "d") c.d = v.get<std::size_t>();
      else if (key == "d1") c.d1 = v.get<std::size_t>();
      else if (key == "d2") c.d2 = v.get<std::size_t>();
      else if (key == "gammas") c.gammas = read_list<double>(v, "gammas");
      else if (key == "C_grid") c.c_grid = read_list<double>(v, "C_grid");
      else if (key == "d_values") c.d_values = read_list<std::size_t>(v, "d_values");
      else if (key == "scenarios") c.scenarios = read_list<std::string>(v, "scenarios");
      else if (key == "null_replicates" || key == "replicates") c.null_replicates = v.get<std::size_t>();
      else if (key == "multipliers") c.multipliers = read_list<double>(v, "multipliers");
      else if (key == "smoothness") c.smoothness = v.get<double>();
      else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (c.experiment == Experiment::Threshold && c.design == "independence" && !j.contains("n") &&
      !j.contains("n1"))
    c.n1 = c.n2 = 100;
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (permutations < 1) throw std::invalid_argument("config: B must be >= 1");
  check_alpha(alpha);
  const auto need = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(std::string("config: ") + msg);
  };
  switch (experiment) {
    case Experiment::Threshold:
      need(design == "two-sample" || design == "independence",
           "threshold design must be two-sample or independence");
      need(!gammas.empty() && !c_grid.empty(), "gammas and C_grid must be non-empty");
      need(n1 >= 2 && n2 >= 2 && d >= 1 && d1 >= 1 && d2 >= 1, "sizes too small");
      break;
    case Experiment::QQ:
      for (const auto& s : scenarios)
        need(s == "null" || s == "alternative", "scenarios must be null or alternative");
      [[fallthrough]];
    case Experiment::Histogram:
      need(!d_values.empty(), "d_values must be non-empty");
      for (auto v : d_values) need(v >= 1, "d_values must be positive");
      need(n1 >= 2 && n2 >= 2, "n1 and n2 must be >= 2");
      need(null_replicates >= 1, "replicates must be >= 1");
      break;
    case Experiment::Power:
      need(design == "multinomial-two-sample" || design == "multinomial-independence" ||
               design == "mmd" || design == "hsic",
           "power design must be multinomial-two-sample, multinomial-independence, mmd or hsic");
      need(!multipliers.empty(), "multipliers must be non-empty");
      for (double m : multipliers) need(m >= 0.0, "multipliers must be nonnegative");
      need(smoothness > 0.0, "smoothness must be positive");
      break;
  }
}

// ---- threshold sensitivity -------------------------------------------------------------

std::vector<ThresholdRow> experiment_threshold_sensitivity(const ExperimentConfig& cfg) {
  cfg.validate();
  const bool indep = cfg.design == "independence";
  std::vector<ThresholdRow> rows;
  for (std::size_t g = 0; g < cfg.gammas.size(); ++g) {
    const double gamma = cfg.gammas[g];
    std::vector<double> stat(cfg.trials);
    std::vector<char> perm_reject(cfg.trials);
    double norm = 0.0, scale = 0.0;
    if (indep) {
      const auto py = pmf(PowerLaw{cfg.d1, gamma}), pz = pmf(PowerLaw{cfg.d2, gamma});
      norm = l2_norm(py) * l2_norm(pz);
      scale = static_cast<double>(cfg.n1);
      const CategoricalSampler sy(py), sz(pz);
      parallel_for(cfg.trials, cfg.workers, [&](std::size_t t) {
        Rng rng = trial_rng(cfg.seed, g, t);
        const auto y = sy.draw(cfg.n1, rng);
        const auto z = sz.draw(cfg.n1, rng);
        const auto s = multinomial_independence_statistic(y, z, cfg.d1, cfg.d2);
        const auto o = run_test(s, PermutationPlan::monte_carlo(cfg.permutations, rng()), cfg.alpha);
        stat[t] = o.statistic;
        perm_reject[t] = o.reject;
      });
    } else {
      const auto p = pmf(PowerLaw{cfg.d, gamma});
      norm = l2_norm(p);
      scale = static_cast<double>(cfg.n1);
      const CategoricalSampler sp(p);
      parallel_for(cfg.trials, cfg.workers, [&](std::size_t t) {
        Rng rng = trial_rng(cfg.seed, g, t);
        const auto y = sp.draw(cfg.n1, rng);
        const auto z = sp.draw(cfg.n2, rng);
        const auto s = multinomial_two_sample_statistic(y, z, cfg.d);
        const auto o = run_test(s, PermutationPlan::monte_carlo(cfg.permutations, rng()), cfg.alpha);
        stat[t] = o.statistic;
        perm_reject[t] = o.reject;
      });
    }
    const double trials = static_cast<double>(cfg.trials);
    const double pr = static_cast<double>(std::count(perm_reject.begin(), perm_reject.end(), 1)) / trials;
    rows.push_back({"permutation", std::numeric_limits<double>::quiet_NaN(), gamma, pr,
                    binomial_se(pr, cfg.trials)});
    for (double c : cfg.c_grid) {
      const double threshold = c * norm / scale;
      const auto hits = std::count_if(stat.begin(), stat.end(), [&](double u) { return u > threshold; });
      const double r = static_cast<double>(hits) / trials;
      rows.push_back({"threshold", c, gamma, r, binomial_se(r, cfg.trials)});
    }
  }
  return rows;
}

// ---- Q-Q ----------------------------------------------------------------------------

std::vector<QQRow> experiment_qq(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<QQRow> rows;
  std::size_t block = 0;
  for (const auto& scenario : cfg.scenarios) {
    for (std::size_t d : cfg.d_values) {
      const auto py = pmf(Uniform{d});
      const auto pz = scenario == "null" ? py : pmf(PowerLaw{d, 1.0});
      const auto reference = scenario == "null" ? py : mixture(py, pz);

      Rng data_rng = trial_rng(cfg.seed, block, 0);
      const auto y = CategoricalSampler(py).draw(cfg.n1, data_rng);
      const auto z = CategoricalSampler(pz).draw(cfg.n2, data_rng);
      PermutationPlan plan = PermutationPlan::monte_carlo(cfg.permutations, data_rng(), cfg.workers);
      plan.include_identity = false;
      const auto dist = permutation_distribution(multinomial_two_sample_statistic(y, z, d), plan);

      const CategoricalSampler ref(reference);
      std::vector<double> null(cfg.null_replicates);
      parallel_for(cfg.null_replicates, cfg.workers, [&](std::size_t r) {
        Rng rng = trial_rng(cfg.seed, block, r + 1);
        const auto a = ref.draw(cfg.n1, rng);
        const auto b = ref.draw(cfg.n2, rng);
        null[r] = two_sample_u_of(a, b, d);
      });
      std::sort(null.begin(), null.end());

      QQRow row;
      row.scenario = scenario;
      row.d = d;
      for (int k = 1; k <= 99; ++k) {
        const double q = k / 100.0;
        row.q.push_back(q);
        row.permutation.push_back(sample_quantile(dist.replicates, q));
        row.null.push_back(sample_quantile(null, q));
      }
      row.ks = ks_distance(dist.replicates, null);
      rows.push_back(std::move(row));
      ++block;
    }
  }
  return rows;
}

// ---- null histogram -------------------------------------------------------------------

std::vector<HistogramRow> experiment_null_histogram(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<HistogramRow> rows;
  for (std::size_t b = 0; b < cfg.d_values.size(); ++b) {
    const std::size_t d = cfg.d_values[b];
    const CategoricalSampler s(pmf(Uniform{d}));
    HistogramRow row;
    row.d = d;
    row.values.resize(cfg.null_replicates);
    parallel_for(cfg.null_replicates, cfg.workers, [&](std::size_t r) {
      Rng rng = trial_rng(cfg.seed, b, r);
      const auto y = s.draw(cfg.n1, rng);
      const auto z = s.draw(cfg.n2, rng);
      row.values[r] = two_sample_u_of(y, z, d);
    });
    CompensatedSum sum, sq;
    for (double v : row.values) sum += v;
    const double n = static_cast<double>(row.values.size());
    row.mean = sum.value() / n;
    for (double v : row.values) sq += (v - row.mean) * (v - row.mean);
    row.se = n > 1 ? std::sqrt(sq.value() / (n - 1) / n) : 0.0;
    row.skewness = sample_skewness(row.values);
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---- power ------------------------------------------------------------------------------

namespace {

struct PowerDesign {
  double distance_per_delta = 0.0;  // L2 distance = delta * this
  double delta_cap = 0.0;
  std::function<double(double)> rate;  // rate scale at a given delta
};

PowerDesign power_design(const ExperimentConfig& cfg) {
  PowerDesign p;
  const double n1 = static_cast<double>(cfg.n1);
  if (cfg.design == "multinomial-two-sample") {
    const double d = static_cast<double>(cfg.d);
    p.distance_per_delta = std::sqrt(d);
    p.delta_cap = 1.0 / d;
    p.rate = [=](double delta) { return std::pow(1.0 / d + delta * delta * d, 0.25) / std::sqrt(n1); };
  } else if (cfg.design == "multinomial-independence") {
    const double cells = static_cast<double>(cfg.d1 * cfg.d2);
    p.distance_per_delta = std::sqrt(cells);
    p.delta_cap = 1.0 / cells;
    p.rate = [=](double delta) {
      return std::pow(1.0 / cells + delta * delta * cells, 0.25) / std::sqrt(n1);
    };
  } else if (cfg.design == "mmd") {
    const double d = static_cast<double>(cfg.d);
    p.distance_per_delta = d;
    p.delta_cap = 1.0 / d;
    const double r = std::pow(n1, -2.0 * cfg.smoothness / (4.0 * cfg.smoothness + 1.0));
    p.rate = [=](double) { return r; };
  } else {
    const double cells = static_cast<double>(cfg.d1 * cfg.d2);
    p.distance_per_delta = cells;
    p.delta_cap = 1.0 / cells;
    const double r = std::pow(n1, -2.0 * cfg.smoothness / (4.0 * cfg.smoothness + 2.0));
    p.rate = [=](double) { return r; };
  }
  return p;
}

}  // namespace

double rate_delta(const ExperimentConfig& cfg, double multiplier) {
  if (multiplier < 0.0) throw std::domain_error("rate_delta: multiplier must be nonnegative");
  if (multiplier == 0.0) return 0.0;
  const auto p = power_design(cfg);
  auto gap = [&](double delta) { return delta * p.distance_per_delta - multiplier * p.rate(delta); };
  if (gap(p.delta_cap) < 0.0)
    throw std::domain_error("rate_delta: multiplier " + format_double(multiplier) +
                            " needs a perturbation beyond the admissible range");
  double lo = 0.0, hi = p.delta_cap;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) < 0.0 ? lo : hi) = mid;
  }
  return hi;
}

std::vector<PowerRow> experiment_power(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto design = power_design(cfg);
  std::vector<PowerRow> rows;
  for (std::size_t b = 0; b < cfg.multipliers.size(); ++b) {
    const double mult = cfg.multipliers[b];
    const double delta = rate_delta(cfg, mult);
    std::vector<char> hits(cfg.trials);
    const auto plan_for = [&](Rng& rng) {
      return PermutationPlan::monte_carlo(cfg.permutations, rng());
    };

    if (cfg.design == "multinomial-two-sample" || cfg.design == "mmd") {
      const CategoricalSampler base(pmf(Uniform{cfg.d}));
      const CategoricalSampler alt(pmf(PerturbedHypercube{cfg.d, delta, {}}));
      const bool continuous = cfg.design == "mmd";
      parallel_for(cfg.trials, cfg.workers, [&](std::size_t t) {
        Rng rng = trial_rng(cfg.seed, b, t);
        const auto y = alt.draw(cfg.n1, rng);
        const auto z = base.draw(cfg.n2, rng);
        if (continuous) {
          TwoSamplePooled pts{lift_to_unit_interval(y, cfg.d, rng), lift_to_unit_interval(z, cfg.d, rng)};
          hits[t] = mmd_test(pts, SmoothnessRule{cfg.smoothness}, cfg.alpha, plan_for(rng)).reject;
        } else {
          hits[t] = multinomial_l2_two_sample(y, z, cfg.d, cfg.alpha, plan_for(rng)).reject;
        }
      });
    } else {
      const DistSpec joint = JointPerturbed{cfg.d1, cfg.d2, delta, {}, {}};
      const bool continuous = cfg.design == "hsic";
      parallel_for(cfg.trials, cfg.workers, [&](std::size_t t) {
        Rng rng = trial_rng(cfg.seed, b, t);
        const auto data = sample(joint, cfg.n1, rng);
        if (continuous) {
          PairedSample pairs{lift_to_unit_interval(data.y, cfg.d1, rng),
                             lift_to_unit_interval(data.z, cfg.d2, rng)};
          hits[t] = hsic_test(pairs, SmoothnessRule{cfg.smoothness}, SmoothnessRule{cfg.smoothness},
                              cfg.alpha, plan_for(rng))
                        .reject;
        } else {
          hits[t] = multinomial_l2_independence(data.y, data.z, cfg.d1, cfg.d2, cfg.alpha,
                                                plan_for(rng))
                        .reject;
        }
      });
    }
    const double power =
        static_cast<double>(std::count(hits.begin(), hits.end(), 1)) / static_cast<double>(cfg.trials);
    rows.push_back({cfg.design, mult, delta, delta * design.distance_per_delta, power,
                    binomial_se(power, cfg.trials)});
  }
  return rows;
}

// ---- CSV -----------------------------------------------------------------------------------

void write_csv(std::ostream& out, const std::vector<ThresholdRow>& rows) {
  write_csv_preamble(out, "threshold");
  out << "method,C,gamma,type1,se\n";
  for (const auto& r : rows) {
    out << r.method << ',' << (std::isnan(r.c) ? std::string() : format_double(r.c)) << ','
        << format_double(r.gamma) << ',' << format_double(r.type1) << ',' << format_double(r.se)
        << '\n';
  }
}

void write_csv(std::ostream& out, const std::vector<QQRow>& rows) {
  write_csv_preamble(out, "qq");
  out << "scenario,d,q,permutation,null,ks\n";
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.q.size(); ++i)
      out << r.scenario << ',' << r.d << ',' << format_double(r.q[i]) << ','
          << format_double(r.permutation[i]) << ',' << format_double(r.null[i]) << ','
          << format_double(r.ks) << '\n';
}

void write_csv(std::ostream& out, const std::vector<HistogramRow>& rows) {
  write_csv_preamble(out, "histogram");
  for (const auto& r : rows)
    out << "# d=" << r.d << " mean=" << format_double(r.mean) << " se=" << format_double(r.se)
        << " skewness=" << format_double(r.skewness) << '\n';
  out << "d,replicate,statistic\n";
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.values.size(); ++i)
      out << r.d << ',' << i << ',' << format_double(r.values[i]) << '\n';
}

void write_csv(std::ostream& out, const std::vector<PowerRow>& rows) {
  write_csv_preamble(out, "power");
  out << "test,multiplier,delta,distance,power,se\n";
  for (const auto& r : rows)
    out << r.test << ',' << format_double(r.multiplier) << ',' << format_double(r.delta) << ','
        << format_double(r.distance) << ',' << format_double(r.power) << ',' << format_double(r.se)
        << '\n';
}

void run_experiment(const ExperimentConfig& cfg, std::ostream& out) {
  switch (cfg.experiment) {
    case Experiment::Threshold: write_csv(out, experiment_threshold_sensitivity(cfg)); break;
    case Experiment::QQ: write_csv(out, experiment_qq(cfg)); break;
    case Experiment::Histogram: write_csv(out, experiment_null_histogram(cfg)); break;
    case Experiment::Power: write_csv(out, experiment_power(cfg)); break;
  }
}

}  // namespace permtest
