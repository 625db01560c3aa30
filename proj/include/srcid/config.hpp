#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "srcid/error.hpp"
#include "srcid/helmholtz.hpp"
#include "srcid/model.hpp"
#include "srcid/prior.hpp"
#include "srcid/smc.hpp"

namespace srcid {

/// Multi-line validation failure: one violated constraint per line.
class ValidationError : public ConfigError {
 public:
  explicit ValidationError(std::vector<std::string> problems)
      : ConfigError(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "invalid configuration:";
    for (const auto& line : p) s += "\n  " + line;
    return s;
  }
  std::vector<std::string> problems_;
};

struct StudySettings {
  // mse driver
  std::size_t mse_n_div = 32;
  std::size_t mse_reference_particles = 200000;
  std::vector<std::size_t> mse_particles{200, 400, 800, 1600, 3200, 6400};
  std::size_t mse_repetitions = 20;
  // hellinger / eh drivers
  std::size_t ref_n_div = 64;
  std::vector<std::size_t> n_div{4, 8, 16, 32};
  std::size_t h_particles = 50000;
  std::size_t h_repetitions = 10;
};

struct AnalysisSettings {
  double eps = 0.04;
  std::size_t grid_nx = 201;
  std::size_t grid_ny = 201;
  std::vector<Rect> conditional;  // rectangles Q of P_emp(. | Q, k)
  std::size_t conditional_k = 2;
  std::size_t peaks = 2;
  int table_k_min = 0;
  int table_k_max = 7;
};

struct ExperimentConfig {
  std::string name = "experiment";
  Rect domain = kUnitSquare;
  BoundaryTagging tagging;
  HelmholtzParams physics;
  Complex neumann_value{0.0, 0.0};  // constant g on Neumann faces
  std::vector<Rect> source_rects;
  double kappa = 0.05;
  SourceConfig truth;
  std::vector<Point2> measurements;
  std::vector<double> noise_variances;
  std::optional<ComplexVector> data;  // external y; synthetic data is used otherwise
  bool data_noise = true;              // add one noise draw to synthetic data
  CountLaw count_law = PoissonCount{2.0};
  Complex amp_mean{10.0, 10.0};
  double amp_variance = 2.0;
  std::vector<double> betas{0.0, 0.03, 0.3, 1.0};
  KernelParams kernel;
  ResamplingScheme resampling = ResamplingScheme::Multinomial;
  std::size_t particles = 100000;
  std::size_t n_div = 64;
  Point2 prediction{0.5, 0.25};
  double prediction_t = 1.0;
  AnalysisSettings analysis;
  StudySettings study;
  std::uint64_t seed = 1;
  std::size_t workers = 1;

  SourceDomain source_domain() const { return SourceDomain(source_rects, kappa, domain); }
  NoiseModel noise() const { return NoiseModel(noise_variances); }
  PriorSpec prior() const { return PriorSpec(count_law, amp_mean, amp_variance, source_domain()); }
  TemperSchedule schedule() const { return TemperSchedule(betas); }
  NeumannData neumann() const {
    if (neumann_value == Complex{}) return {};
    const Complex g = neumann_value;
    return [g](Point2) { return g; };
  }
  /// Finest mesh among all drivers; synthetic data lives on it.
  std::size_t finest_n_div() const {
    return std::max({n_div, study.mse_n_div, study.ref_n_div});
  }
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? std::string{} : item.substr(b, e - b + 1));
  }
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& s, const std::string& key) {
  std::vector<T> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) {
    std::istringstream ts(tok);
    if constexpr (std::is_same_v<T, bool>) ts >> std::boolalpha;
    T v{};
    if (!(ts >> v) || !(ts >> std::ws).eof()) throw ConfigError(key + ": cannot parse '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

/// Comma-separated groups of `width` numbers each.
inline std::vector<std::vector<double>> parse_groups(const std::string& s, std::size_t width, const std::string& key) {
  std::vector<std::vector<double>> out;
  if (s.find_first_not_of(" \t") == std::string::npos) return out;
  for (const auto& g : split(s, ',')) {
    auto v = parse_list<double>(g, key);
    if (v.size() != width)
      throw ConfigError(key + ": expected groups of " + std::to_string(width) + " numbers, got '" + g + "'");
    out.push_back(std::move(v));
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const boost::property_tree::ptree& tree) : tree_(tree) {}

  std::optional<std::string> raw(const std::string& key) const {
    if (auto v = tree_.get_optional<std::string>(key)) return *v;
    return std::nullopt;
  }

  template <class T>
  void scalar(const std::string& key, T& out) {
    const auto v = raw(key);
    if (!v) return;
    seen(key);
    try {
      auto list = parse_list<T>(*v, key);
      if (list.size() != 1) throw ConfigError(key + ": expected a single value");
      out = list[0];
    } catch (const ConfigError& e) {
      problems.push_back(e.what());
    }
  }

  template <class T>
  void list(const std::string& key, std::vector<T>& out) {
    const auto v = raw(key);
    if (!v) return;
    seen(key);
    try {
      out = parse_list<T>(*v, key);
    } catch (const ConfigError& e) {
      problems.push_back(e.what());
    }
  }

  void groups(const std::string& key, std::size_t width, std::vector<std::vector<double>>& out) {
    const auto v = raw(key);
    if (!v) return;
    seen(key);
    try {
      out = parse_groups(*v, width, key);
    } catch (const ConfigError& e) {
      problems.push_back(e.what());
    }
  }

  void complex(const std::string& key, Complex& out) {
    std::vector<double> v;
    list(key, v);
    if (!raw(key)) return;
    if (v.size() != 2)
      problems.push_back(key + ": expected 're im'");
    else
      out = {v[0], v[1]};
  }

  void point(const std::string& key, Point2& out) {
    std::vector<double> v;
    list(key, v);
    if (!raw(key)) return;
    if (v.size() != 2)
      problems.push_back(key + ": expected 'x y'");
    else
      out = {v[0], v[1]};
  }

  void text(const std::string& key, std::string& out) {
    if (auto v = raw(key)) {
      seen(key);
      out = *v;
    }
  }

  std::vector<std::string> unknown_keys() const {
    std::vector<std::string> out;
    for (const auto& [section, sub] : tree_)
      for (const auto& [key, value] : sub) {
        const std::string full = section + "." + key;
        if (std::find(seen_.begin(), seen_.end(), full) == seen_.end()) out.push_back(full);
      }
    return out;
  }

  std::vector<std::string> problems;

 private:
  void seen(const std::string& key) { seen_.push_back(key); }
  const boost::property_tree::ptree& tree_;
  std::vector<std::string> seen_;
};

inline BoundaryTag parse_tag(const std::string& s, std::vector<std::string>& problems) {
  if (s == "Z" || s == "impedance") return BoundaryTag::Impedance;
  if (s == "N" || s == "neumann") return BoundaryTag::Neumann;
  problems.push_back("domain.boundary: unknown tag '" + s + "' (use Z or N)");
  return BoundaryTag::Impedance;
}

inline Rect to_rect(const std::vector<double>& v) { return {v[0], v[1], v[2], v[3]}; }

}  // namespace detail

/// Cross-checks that involve several sections. Every violation is collected.
inline std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> p;
  auto guard = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      p.push_back(e.what());
    }
  };
  guard([&] { c.physics.validate(); });
  if (!c.domain.valid()) p.push_back("domain.rect: degenerate rectangle");
  std::optional<SourceDomain> sd;
  guard([&] { sd.emplace(c.source_domain()); });
  if (c.measurements.empty()) p.push_back("measurements.points: at least one point required");
  if (c.noise_variances.size() != c.measurements.size())
    p.push_back("measurements.noise_variance: " + std::to_string(c.noise_variances.size()) +
                " variances for " + std::to_string(c.measurements.size()) + " points");
  guard([&] { (void)c.noise(); });
  if (sd) {
    for (std::size_t j = 0; j < c.measurements.size(); ++j)
      guard([&] { sd->check_measurement_point(c.measurements[j], "measurements.points[" + std::to_string(j) + "]"); });
    guard([&] { sd->check_measurement_point(c.prediction, "prediction.point"); });
    for (std::size_t l = 0; l < c.truth.k(); ++l)
      if (!sd->contains(c.truth.sources[l].x))
        p.push_back("truth.sources[" + std::to_string(l) + "]: position outside the source domain");
    guard([&] { (void)c.prior(); });
  }
  if (c.data && static_cast<std::size_t>(c.data->size()) != c.measurements.size())
    p.push_back("measurements.data: " + std::to_string(c.data->size()) + " values for " +
                std::to_string(c.measurements.size()) + " points");
  guard([&] { (void)c.schedule(); });
  guard([&] { c.kernel.validate(); });
  if (c.particles == 0) p.push_back("smc.particles: must be positive");
  if (c.n_div == 0) p.push_back("mesh.n_div: must be positive");
  if (!(c.analysis.eps > 0.0)) p.push_back("analysis.eps: must be positive");
  if (c.analysis.grid_nx < 2 || c.analysis.grid_ny < 2) p.push_back("analysis.grid: need at least 2 points per axis");
  for (std::size_t i = 0; i < c.analysis.conditional.size(); ++i) {
    const Rect& q = c.analysis.conditional[i];
    if (!q.valid() || q.x0 < c.domain.x0 || q.x1 > c.domain.x1 || q.y0 < c.domain.y0 || q.y1 > c.domain.y1)
      p.push_back("analysis.conditional[" + std::to_string(i) + "]: Q must be a rectangle inside the domain");
  }
  if (c.analysis.table_k_min < 0 || c.analysis.table_k_max < c.analysis.table_k_min)
    p.push_back("analysis.table_k: need 0 <= min <= max");
  const auto& s = c.study;
  if (s.mse_n_div == 0) p.push_back("study.mse_n_div: must be positive");
  if (s.mse_particles.size() < 3) p.push_back("study.mse_particles: at least 3 particle counts required");
  for (auto n : s.mse_particles)
    if (n == 0) p.push_back("study.mse_particles: counts must be positive");
  if (s.mse_reference_particles == 0) p.push_back("study.mse_reference_particles: must be positive");
  if (s.mse_repetitions < 2) p.push_back("study.mse_repetitions: at least 2 repetitions required");
  if (s.n_div.size() < 3) p.push_back("study.n_div: at least 3 study meshes required");
  for (auto n : s.n_div)
    if (!(n > 0 && n < s.ref_n_div))
      p.push_back("study.n_div: study mesh " + std::to_string(n) +
                  " must be coarser than the reference mesh (h_ref < h required)");
  if (s.h_particles == 0) p.push_back("study.h_particles: must be positive");
  if (s.h_repetitions < 1) p.push_back("study.h_repetitions: must be positive");
  if (c.workers == 0) p.push_back("run.workers: must be positive");
  return p;
}

/// Parses INI text. Throws ValidationError listing every problem found.
inline ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<config>") {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(origin + ": parse error: " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ExperimentConfig c;
  detail::Reader r(tree);

  r.text("run.name", c.name);
  r.scalar("run.seed", c.seed);
  r.scalar("run.workers", c.workers);

  std::vector<double> rect;
  r.list("domain.rect", rect);
  if (r.raw("domain.rect")) {
    if (rect.size() == 4)
      c.domain = detail::to_rect(rect);
    else
      r.problems.push_back("domain.rect: expected 'x0 x1 y0 y1'");
  }
  if (auto b = r.raw("domain.boundary")) {
    std::vector<std::string> tags;
    r.list("domain.boundary", tags);
    if (tags.size() != 4) {
      r.problems.push_back("domain.boundary: expected four tags (bottom right top left)");
    } else {
      c.tagging = {detail::parse_tag(tags[0], r.problems), detail::parse_tag(tags[1], r.problems),
                   detail::parse_tag(tags[2], r.problems), detail::parse_tag(tags[3], r.problems)};
    }
  }

  r.scalar("physics.zeta", c.physics.zeta);
  r.scalar("physics.c", c.physics.c);
  r.scalar("physics.rho", c.physics.rho);
  r.scalar("physics.alpha_zeta", c.physics.alpha_zeta);
  r.scalar("physics.beta_zeta", c.physics.beta_zeta);
  r.complex("physics.neumann_value", c.neumann_value);

  r.scalar("sources.kappa", c.kappa);
  std::vector<std::vector<double>> groups;
  r.groups("sources.rects", 4, groups);
  for (const auto& g : groups) c.source_rects.push_back(detail::to_rect(g));
  if (!r.raw("sources.rects")) r.problems.push_back("sources.rects: required");

  groups.clear();
  r.groups("truth.sources", 4, groups);
  for (const auto& g : groups) c.truth.sources.push_back({{g[2], g[3]}, {g[0], g[1]}});

  groups.clear();
  r.groups("measurements.points", 2, groups);
  for (const auto& g : groups) c.measurements.push_back({g[0], g[1]});
  std::vector<double> var;
  r.list("measurements.noise_variance", var);
  if (var.size() == 1)
    c.noise_variances.assign(c.measurements.size(), var[0]);
  else
    c.noise_variances = var;
  r.scalar("measurements.data_noise", c.data_noise);
  groups.clear();
  r.groups("measurements.data", 2, groups);
  if (!groups.empty()) {
    ComplexVector y(static_cast<Eigen::Index>(groups.size()));
    for (std::size_t j = 0; j < groups.size(); ++j) y[static_cast<Eigen::Index>(j)] = {groups[j][0], groups[j][1]};
    c.data = y;
  }

  std::string law = "poisson";
  r.text("prior.count", law);
  if (law == "poisson") {
    double lambda = 2.0;
    r.scalar("prior.lambda", lambda);
    c.count_law = PoissonCount{lambda};
  } else if (law == "explicit") {
    std::vector<double> pmf;
    r.list("prior.pmf", pmf);
    c.count_law = ExplicitCount{pmf};
  } else {
    r.problems.push_back("prior.count: expected 'poisson' or 'explicit'");
  }
  r.complex("prior.amp_mean", c.amp_mean);
  r.scalar("prior.amp_variance", c.amp_variance);

  r.list("smc.betas", c.betas);
  r.scalar("smc.gamma_x", c.kernel.gamma_x);
  r.scalar("smc.gamma_alpha", c.kernel.gamma_alpha);
  r.scalar("smc.n_mcmc", c.kernel.n_mcmc);
  r.scalar("smc.particles", c.particles);
  std::string scheme = "multinomial";
  r.text("smc.resampling", scheme);
  if (scheme == "multinomial")
    c.resampling = ResamplingScheme::Multinomial;
  else if (scheme == "systematic")
    c.resampling = ResamplingScheme::Systematic;
  else
    r.problems.push_back("smc.resampling: expected 'multinomial' or 'systematic'");

  r.scalar("mesh.n_div", c.n_div);

  r.point("prediction.point", c.prediction);
  r.scalar("prediction.t", c.prediction_t);

  r.scalar("analysis.eps", c.analysis.eps);
  std::vector<std::size_t> grid;
  r.list("analysis.grid", grid);
  if (r.raw("analysis.grid")) {
    if (grid.size() == 2) {
      c.analysis.grid_nx = grid[0];
      c.analysis.grid_ny = grid[1];
    } else {
      r.problems.push_back("analysis.grid: expected 'nx ny'");
    }
  }
  groups.clear();
  r.groups("analysis.conditional", 4, groups);
  for (const auto& g : groups) c.analysis.conditional.push_back(detail::to_rect(g));
  r.scalar("analysis.conditional_k", c.analysis.conditional_k);
  r.scalar("analysis.peaks", c.analysis.peaks);
  std::vector<int> krange;
  r.list("analysis.table_k", krange);
  if (r.raw("analysis.table_k")) {
    if (krange.size() == 2) {
      c.analysis.table_k_min = krange[0];
      c.analysis.table_k_max = krange[1];
    } else {
      r.problems.push_back("analysis.table_k: expected 'min max'");
    }
  }

  r.scalar("study.mse_n_div", c.study.mse_n_div);
  r.scalar("study.mse_reference_particles", c.study.mse_reference_particles);
  r.list("study.mse_particles", c.study.mse_particles);
  r.scalar("study.mse_repetitions", c.study.mse_repetitions);
  r.scalar("study.ref_n_div", c.study.ref_n_div);
  r.list("study.n_div", c.study.n_div);
  r.scalar("study.h_particles", c.study.h_particles);
  r.scalar("study.h_repetitions", c.study.h_repetitions);

  for (const auto& k : r.unknown_keys()) r.problems.push_back(k + ": unknown key");

  auto problems = std::move(r.problems);
  for (auto& p : validate(c)) problems.push_back(std::move(p));
  if (!problems.empty()) {
    for (auto& p : problems) p = origin + ": " + p;
    throw ValidationError(std::move(problems));
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

}  // namespace srcid
