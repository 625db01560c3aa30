#pragma once

#include <openssl/evp.h>

#include <charconv>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "srcid/analysis.hpp"
#include "srcid/config.hpp"
#include "srcid/helmholtz.hpp"
#include "srcid/model.hpp"
#include "srcid/smc.hpp"

#ifndef SRCID_VERSION
#define SRCID_VERSION "0.0.0"
#endif

namespace srcid {

inline constexpr const char* kVersion = SRCID_VERSION;

// ---------------------------------------------------------------------------
// Output files

/// Shortest round-trip decimal representation.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : columns_(header.size()) { add(header); }

  template <class... Ts>
  void row(const Ts&... cells) {
    std::vector<std::string> r;
    (r.push_back(cell(cells)), ...);
    if (r.size() != columns_) throw std::logic_error("csv: row width differs from header");
    add(r);
  }

  const std::string& text() const { return text_; }

 private:
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <std::integral T>
  static std::string cell(T v) {
    return std::to_string(v);
  }

  void add(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
    text_ += '\n';
  }

  std::size_t columns_;
  std::string text_;
};

/// Collects the files of one run. Files are written as they are produced;
/// if the run fails, `discard` removes everything written so far.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const { return dir_; }
  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

  void write(const std::string& name, const std::string& bytes) {
    std::filesystem::create_directories(dir_);
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    written_.push_back(path);
    out << bytes;
    if (!out) throw std::runtime_error("cannot write " + path.string());
    files_.emplace_back(name, sha256_hex(bytes));
  }

  void csv(const std::string& name, const CsvTable& table) { write(name, table.text()); }
  void json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(1) + "\n"); }

  void discard() noexcept {
    std::error_code ec;
    for (const auto& p : written_) std::filesystem::remove(p, ec);
    written_.clear();
    files_.clear();
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
  std::vector<std::pair<std::string, std::string>> files_;
};

// ---------------------------------------------------------------------------
// Discretized problem

/// FEM system, measurement cache and prediction functionals on one mesh.
struct Discretization {
  std::shared_ptr<const AssembledSystem> system;
  std::shared_ptr<const ObservationCache> cache;
  std::shared_ptr<const Functionals> functionals;

  Discretization(const ExperimentConfig& cfg, std::size_t n_div) {
    auto mesh = std::make_shared<const StructuredTriMesh>(n_div, cfg.domain, cfg.tagging);
    system = std::make_shared<const AssembledSystem>(std::move(mesh), cfg.physics);
    const SourceDomain dom = cfg.source_domain();
    cache = std::make_shared<const ObservationCache>(*system, cfg.measurements, dom, cfg.neumann());
    functionals =
        std::make_shared<const Functionals>(*system, cfg.prediction, dom, cfg.prediction_t, cfg.neumann());
  }

  double h() const { return system->mesh().h(); }
  std::size_t n_div() const { return system->mesh().n_div(); }
};

/// Data vector y: the configured measurements, or G_h(u_exact) on the finest
/// configured mesh, plus one noise draw from the labelled stream "noise" when
/// data_noise is set.
inline ComplexVector make_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.data) return *cfg.data;
  const Discretization fine(cfg, cfg.finest_n_div());
  Rng rng(seed, "noise");
  return synth_data(*fine.cache, cfg.noise(), cfg.truth, cfg.data_noise ? &rng : nullptr);
}

inline SmcResult run_posterior_smc(const ExperimentConfig& cfg, const Potential& psi, std::size_t particles,
                                   std::uint64_t stream) {
  return run_smc(cfg.prior(), psi, cfg.schedule(), cfg.kernel, particles, stream,
                 SmcOptions{cfg.workers, cfg.resampling});
}

// ---------------------------------------------------------------------------
// Posterior analysis (separation, experiment2)

struct PosteriorAnalysis {
  ComplexVector data;
  double h = 0.0;
  SmcResult smc;
  HeatGrid p_emp;
  std::map<std::size_t, HeatGrid> p_emp_k;
  std::vector<HeatGrid> conditional;
  std::vector<Peak> peaks;
  std::map<std::size_t, double> k_pmf;
  MapIndices map;
  std::array<double, Functionals::kCount> functionals{};
};

inline PosteriorAnalysis analyse_posterior(const ExperimentConfig& cfg, std::uint64_t seed) {
  PosteriorAnalysis out;
  out.data = make_data(cfg, seed);
  const Discretization disc(cfg, cfg.n_div);
  out.h = disc.h();
  const Potential psi(*disc.cache, cfg.noise(), out.data);
  out.smc = run_posterior_smc(cfg, psi, cfg.particles, stream_seed(seed, "posterior"));
  const Ensemble& ens = out.smc.ensemble;
  const auto spec = HeatGrid::zeros(cfg.domain, cfg.analysis.grid_nx, cfg.analysis.grid_ny);
  const double eps = cfg.analysis.eps;
  out.p_emp = p_emp(ens, spec, eps);
  out.k_pmf = posterior_k_pmf(ens);
  for (const auto& [k, mass] : out.k_pmf)
    if (k > 0 && mass > 0.0 && static_cast<int>(k) >= cfg.analysis.table_k_min && static_cast<int>(k) <= cfg.analysis.table_k_max)
      out.p_emp_k.emplace(k, p_emp_given_k(ens, k, spec, eps));
  for (const auto& q : cfg.analysis.conditional)
    out.conditional.push_back(p_emp_conditional(ens, q, cfg.analysis.conditional_k, spec, eps));
  out.peaks = local_maxima(out.p_emp, cfg.analysis.peaks, 1.5 * eps);
  out.map = map_indices(ens);
  out.functionals = disc.functionals->expectations(ens);
  return out;
}

// ---------------------------------------------------------------------------
// MSE in N

struct MseRow {
  std::string functional;
  std::size_t n;
  double mse;
  double variance;  // sample variance over runs of the squared error
  std::size_t runs;
};

struct MseStudy {
  std::array<double, Functionals::kCount> reference{};
  std::size_t reference_particles = 0;
  std::vector<MseRow> rows;
  std::vector<RateFit> fits;  // one per functional
};

inline double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline MseStudy mse_study(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto& st = cfg.study;
  const ComplexVector y = make_data(cfg, seed);
  const Discretization disc(cfg, st.mse_n_div);
  const Potential psi(*disc.cache, cfg.noise(), y);
  MseStudy out;
  out.reference_particles = st.mse_reference_particles;
  out.reference = disc.functionals->expectations(
      run_posterior_smc(cfg, psi, st.mse_reference_particles, stream_seed(seed, "mse-reference")).ensemble);
  std::array<std::vector<double>, Functionals::kCount> mse_by_f;
  for (std::size_t i = 0; i < st.mse_particles.size(); ++i) {
    std::array<std::vector<double>, Functionals::kCount> sq;
    for (std::size_t r = 0; r < st.mse_repetitions; ++r) {
      const auto res = run_posterior_smc(cfg, psi, st.mse_particles[i], stream_seed(seed, "mse", {i, r}));
      const auto e = disc.functionals->expectations(res.ensemble);
      for (std::size_t f = 0; f < Functionals::kCount; ++f) sq[f].push_back((e[f] - out.reference[f]) * (e[f] - out.reference[f]));
    }
    for (std::size_t f = 0; f < Functionals::kCount; ++f) {
      double m = 0.0;
      for (double v : sq[f]) m += v;
      m /= static_cast<double>(sq[f].size());
      out.rows.push_back({Functionals::names[f], st.mse_particles[i], m, sample_variance(sq[f]), st.mse_repetitions});
      mse_by_f[f].push_back(m);
    }
  }
  std::vector<double> ns(st.mse_particles.begin(), st.mse_particles.end());
  for (std::size_t f = 0; f < Functionals::kCount; ++f) {
    bool positive = true;
    for (double v : mse_by_f[f]) positive = positive && v > 0.0;
    if (positive) {
      out.fits.push_back(fit_rate(ns, mse_by_f[f], RateModel::InverseN));
    } else {
      RateFit nan_fit{RateModel::InverseN, ns, mse_by_f[f], std::numeric_limits<double>::quiet_NaN(),
                      std::numeric_limits<double>::quiet_NaN()};
      out.fits.push_back(nan_fit);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convergence in h (hellinger, eh)

struct HellingerRow {
  std::size_t n_div;
  double h;
  double hellinger;  // mean over runs
  double variance;
  std::size_t runs;
};

struct EhRow {
  std::string functional;
  std::size_t n_div;
  double h;
  double e_h;       // |mean_r E_h[f] - mean_r E_ref[f]|
  double e_h_is;    // |mean_r of the paired importance-sampling difference|
  double variance;  // sample variance over runs of E_h[f]
  std::size_t runs;
};

struct EhReferenceRow {
  std::string functional;
  std::size_t n_div;
  double h;
  double mean;
  double variance;
  std::size_t runs;
};

struct HStudy {
  std::vector<HellingerRow> hellinger;
  RateFit hellinger_fit;
  std::vector<EhRow> eh;
  std::vector<EhReferenceRow> reference;
  std::vector<RateFit> eh_fits;     // direct estimator, per functional
  std::vector<RateFit> eh_is_fits;  // importance-sampling estimator, per functional
};

namespace detail {
inline RateFit fit_or_nan(std::span<const double> x, std::span<const double> e, RateModel model) {
  for (double v : e)
    if (!(v > 0.0)) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      return RateFit{model, {x.begin(), x.end()}, {e.begin(), e.end()}, nan, nan};
    }
  return fit_rate(x, e, model);
}
}  // namespace detail

/// Every run r uses the SMC stream ("h-study", r) on all meshes, so study and
/// reference ensembles of one run share their random numbers.
inline HStudy h_study(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto& st = cfg.study;
  const ComplexVector y = make_data(cfg, seed);
  const NoiseModel noise = cfg.noise();
  const Discretization ref(cfg, st.ref_n_div);
  const Potential psi_ref(*ref.cache, noise, y);
  std::vector<Discretization> study;
  std::vector<Potential> psi;
  study.reserve(st.n_div.size());
  psi.reserve(st.n_div.size());
  for (auto n : st.n_div) {
    study.emplace_back(cfg, n);
    psi.emplace_back(*study.back().cache, noise, y);
  }
  constexpr std::size_t F = Functionals::kCount;
  const std::size_t M = st.n_div.size(), R = st.h_repetitions;
  std::vector<std::vector<double>> hell(M);
  std::vector<std::array<std::vector<double>, F>> e_h(M), is_diff(M);
  std::array<std::vector<double>, F> e_ref;

  for (std::size_t r = 0; r < R; ++r) {
    const std::uint64_t stream = stream_seed(seed, "h-study", {r});
    const SmcResult res_ref = run_posterior_smc(cfg, psi_ref, st.h_particles, stream);
    const Ensemble& er = res_ref.ensemble;
    const auto fr = ref.functionals->expectations(er);
    for (std::size_t f = 0; f < F; ++f) e_ref[f].push_back(fr[f]);
    for (std::size_t i = 0; i < M; ++i) {
      const SmcResult res_h = run_posterior_smc(cfg, psi[i], st.h_particles, stream);
      const Ensemble& eh = res_h.ensemble;
      const auto on_h = cross_potentials(eh, psi[i], psi_ref, cfg.workers);
      const auto on_ref = cross_potentials(er, psi[i], psi_ref, cfg.workers);
      hell[i].push_back(hellinger_estimate(eh.weights, on_h, er.weights, on_ref));

      const auto fh = study[i].functionals->expectations(eh);
      for (std::size_t f = 0; f < F; ++f) e_h[i][f].push_back(fh[f]);

      // E_h[f_h] - E_ref[f_ref], estimated once from each ensemble.
      std::vector<double> a(er.size());
      for (std::size_t n = 0; n < er.size(); ++n) a[n] = on_ref.psi_ref[n] - on_ref.psi_h[n];
      const auto fh_on_ref = study[i].functionals->expectations(er.particles, tilt_weights(er.weights, a));
      a.resize(eh.size());
      for (std::size_t n = 0; n < eh.size(); ++n) a[n] = on_h.psi_h[n] - on_h.psi_ref[n];
      const auto fref_on_h = ref.functionals->expectations(eh.particles, tilt_weights(eh.weights, a));
      for (std::size_t f = 0; f < F; ++f) is_diff[i][f].push_back(0.5 * ((fh_on_ref[f] - fr[f]) + (fh[f] - fref_on_h[f])));
    }
  }

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  HStudy out;
  std::vector<double> hs, hv;
  std::array<std::vector<double>, F> ed, ei;
  for (std::size_t i = 0; i < M; ++i) {
    const double h = study[i].h();
    hs.push_back(h);
    out.hellinger.push_back({st.n_div[i], h, mean(hell[i]), sample_variance(hell[i]), R});
    hv.push_back(out.hellinger.back().hellinger);
    for (std::size_t f = 0; f < F; ++f) {
      const double d = std::abs(mean(e_h[i][f]) - mean(e_ref[f]));
      const double di = std::abs(mean(is_diff[i][f]));
      out.eh.push_back({Functionals::names[f], st.n_div[i], h, d, di, sample_variance(e_h[i][f]), R});
      ed[f].push_back(d);
      ei[f].push_back(di);
    }
  }
  for (std::size_t f = 0; f < F; ++f)
    out.reference.push_back({Functionals::names[f], st.ref_n_div, ref.h(), mean(e_ref[f]), sample_variance(e_ref[f]), R});
  out.hellinger_fit = detail::fit_or_nan(hs, hv, RateModel::LogH);
  for (std::size_t f = 0; f < F; ++f) {
    out.eh_fits.push_back(detail::fit_or_nan(hs, ed[f], RateModel::LogH));
    out.eh_is_fits.push_back(detail::fit_or_nan(hs, ei[f], RateModel::LogH));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline CsvTable heat_grid_csv(const HeatGrid& g) {
  CsvTable t({"x", "y", "value"});
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) t.row(g.x(i), g.y(j), g.at(i, j));
  return t;
}

inline nlohmann::json heat_grid_json(const HeatGrid& g, const ExperimentConfig& cfg, const std::string& title) {
  nlohmann::json j;
  j["title"] = title;
  j["nx"] = g.nx;
  j["ny"] = g.ny;
  j["extent"] = {g.extent.x0, g.extent.x1, g.extent.y0, g.extent.y1};
  j["layout"] = "row-major, y slow";
  j["eps"] = cfg.analysis.eps;
  j["values"] = g.values;
  auto& truth = j["truth"] = nlohmann::json::array();
  for (const auto& s : cfg.truth.sources) truth.push_back({s.x.x, s.x.y});
  auto& meas = j["measurements"] = nlohmann::json::array();
  for (const auto& z : cfg.measurements) meas.push_back({z.x, z.y});
  return j;
}

inline CsvTable diagnostics_csv(const std::vector<SmcStepDiagnostics>& steps) {
  CsvTable t({"step", "beta_kernel", "beta_to", "acceptance", "ess", "log_normalizer_increment"});
  for (const auto& s : steps) t.row(s.step, s.beta_kernel, s.beta_to, s.acceptance, s.ess, s.log_normalizer_increment);
  return t;
}

inline void write_posterior(OutputSet& out, const ExperimentConfig& cfg, const PosteriorAnalysis& a, bool k_table) {
  {
    CsvTable t({"index", "x", "y", "y_re", "y_im"});
    for (std::size_t j = 0; j < cfg.measurements.size(); ++j)
      t.row(j, cfg.measurements[j].x, cfg.measurements[j].y, a.data[static_cast<Eigen::Index>(j)].real(),
            a.data[static_cast<Eigen::Index>(j)].imag());
    out.csv("data.csv", t);
  }
  out.csv("smc_diagnostics.csv", diagnostics_csv(a.smc.steps));
  out.csv("p_emp.csv", heat_grid_csv(a.p_emp));
  out.json("p_emp.json", heat_grid_json(a.p_emp, cfg, "P_emp"));
  for (const auto& [k, g] : a.p_emp_k) {
    out.csv("p_emp_k" + std::to_string(k) + ".csv", heat_grid_csv(g));
    out.json("p_emp_k" + std::to_string(k) + ".json", heat_grid_json(g, cfg, "P_emp | k = " + std::to_string(k)));
  }
  for (std::size_t i = 0; i < a.conditional.size(); ++i) {
    const Rect& q = cfg.analysis.conditional[i];
    auto j = heat_grid_json(a.conditional[i], cfg, "P_emp | Q, k = " + std::to_string(cfg.analysis.conditional_k));
    j["q"] = {q.x0, q.x1, q.y0, q.y1};
    out.csv("conditional_" + std::to_string(i) + ".csv", heat_grid_csv(a.conditional[i]));
    out.json("conditional_" + std::to_string(i) + ".json", j);
  }
  {
    CsvTable t({"rank", "x", "y", "value"});
    for (std::size_t i = 0; i < a.peaks.size(); ++i) t.row(i + 1, a.peaks[i].x.x, a.peaks[i].x.y, a.peaks[i].value);
    out.csv("peaks.csv", t);
  }
  const PriorSpec prior = cfg.prior();
  const auto& w = a.smc.ensemble.weights;
  auto map_weight = [&](std::size_t k) {
    const auto it = a.map.per_k.find(k);
    return it == a.map.per_k.end() ? 0.0 : w[it->second];
  };
  {
    std::size_t kmax = static_cast<std::size_t>(cfg.analysis.table_k_max);
    if (!a.k_pmf.empty()) kmax = std::max(kmax, a.k_pmf.rbegin()->first);
    CsvTable t({"k", "prior", "posterior", "map_weight"});
    for (std::size_t k = 0; k <= kmax; ++k) {
      const auto it = a.k_pmf.find(k);
      t.row(k, prior_k_pmf(prior, static_cast<int>(k)), it == a.k_pmf.end() ? 0.0 : it->second, map_weight(k));
    }
    out.csv("k_pmf.csv", t);
  }
  if (k_table) {
    CsvTable t({"k", "prior", "posterior", "map_weight"});
    for (int k = cfg.analysis.table_k_min; k <= cfg.analysis.table_k_max; ++k) {
      const auto it = a.k_pmf.find(static_cast<std::size_t>(k));
      t.row(k, prior_k_pmf(prior, k), it == a.k_pmf.end() ? 0.0 : it->second, map_weight(static_cast<std::size_t>(k)));
    }
    out.csv("k_table.csv", t);
  }
  {
    CsvTable t({"scope", "k", "index", "weight", "source", "x", "y", "alpha_re", "alpha_im"});
    auto emit = [&](const std::string& scope, std::size_t n) {
      const auto& u = a.smc.ensemble.particles[n];
      if (u.empty()) t.row(scope, u.k(), n, w[n], std::string{}, std::string{}, std::string{}, std::string{}, std::string{});
      for (std::size_t l = 0; l < u.k(); ++l)
        t.row(scope, u.k(), n, w[n], l, u.sources[l].x.x, u.sources[l].x.y, u.sources[l].alpha.real(),
              u.sources[l].alpha.imag());
    };
    emit("global", a.map.global);
    for (const auto& [k, n] : a.map.per_k) emit("k", n);
    out.csv("map.csv", t);
  }
  {
    CsvTable t({"functional", "value"});
    for (std::size_t f = 0; f < Functionals::kCount; ++f) t.row(Functionals::names[f], a.functionals[f]);
    out.csv("functionals.csv", t);
  }
}

inline void write_mse(OutputSet& out, const MseStudy& s) {
  CsvTable t({"functional", "N", "mse", "variance", "runs"});
  for (const auto& r : s.rows) t.row(r.functional, r.n, r.mse, r.variance, r.runs);
  out.csv("mse.csv", t);
  CsvTable ref({"functional", "N_ref", "value"});
  for (std::size_t f = 0; f < Functionals::kCount; ++f) ref.row(Functionals::names[f], s.reference_particles, s.reference[f]);
  out.csv("mse_reference.csv", ref);
  CsvTable rate({"functional", "model", "slope", "constant"});
  for (std::size_t f = 0; f < Functionals::kCount; ++f)
    rate.row(Functionals::names[f], "inverse_n", s.fits[f].slope, s.fits[f].constant);
  out.csv("mse_rate.csv", rate);
}

inline void write_hellinger(OutputSet& out, const HStudy& s) {
  CsvTable t({"n_div", "h", "hellinger", "variance", "runs"});
  for (const auto& r : s.hellinger) t.row(r.n_div, r.h, r.hellinger, r.variance, r.runs);
  out.csv("hellinger.csv", t);
  CsvTable rate({"model", "slope", "constant", "slope_log_h", "order_h"});
  rate.row("log_h", s.hellinger_fit.slope, s.hellinger_fit.constant, s.hellinger_fit.slope_log_h,
           s.hellinger_fit.order_h);
  out.csv("hellinger_rate.csv", rate);
}

inline void write_eh(OutputSet& out, const HStudy& s) {
  CsvTable t({"functional", "n_div", "h", "e_h", "e_h_is", "variance", "runs"});
  for (const auto& r : s.eh) t.row(r.functional, r.n_div, r.h, r.e_h, r.e_h_is, r.variance, r.runs);
  out.csv("eh.csv", t);
  CsvTable ref({"functional", "n_div", "h", "mean", "variance", "runs"});
  for (const auto& r : s.reference) ref.row(r.functional, r.n_div, r.h, r.mean, r.variance, r.runs);
  out.csv("eh_reference.csv", ref);
  CsvTable rate({"functional", "estimator", "slope", "constant", "slope_log_h", "order_h"});
  for (std::size_t f = 0; f < Functionals::kCount; ++f) {
    const auto& d = s.eh_fits[f];
    const auto& i = s.eh_is_fits[f];
    rate.row(Functionals::names[f], "direct", d.slope, d.constant, d.slope_log_h, d.order_h);
    rate.row(Functionals::names[f], "importance", i.slope, i.constant, i.slope_log_h, i.order_h);
  }
  out.csv("eh_rate.csv", rate);
}

// ---------------------------------------------------------------------------
// Drivers

inline const std::vector<std::string>& driver_names() {
  static const std::vector<std::string> names{"separation", "mse", "hellinger", "eh", "experiment2"};
  return names;
}

struct RunRequest {
  std::string driver;
  ExperimentConfig config;
  std::string config_text;  // hashed into the manifest
  std::uint64_t seed;
  std::filesystem::path out_dir;
};

/// Runs one driver and writes its outputs plus manifest.json. On failure all
/// files written by this run are removed and the error is rethrown with the
/// driver name attached.
inline std::vector<std::pair<std::string, std::string>> run_experiment(const RunRequest& req) {
  OutputSet out(req.out_dir);
  try {
    const auto& cfg = req.config;
    if (req.driver == "separation" || req.driver == "experiment2") {
      write_posterior(out, cfg, analyse_posterior(cfg, req.seed), req.driver == "experiment2");
    } else if (req.driver == "mse") {
      write_mse(out, mse_study(cfg, req.seed));
    } else if (req.driver == "hellinger") {
      write_hellinger(out, h_study(cfg, req.seed));
    } else if (req.driver == "eh") {
      write_eh(out, h_study(cfg, req.seed));
    } else {
      throw ConfigError("unknown driver '" + req.driver + "'");
    }
    nlohmann::json m;
    m["driver"] = req.driver;
    m["config"] = cfg.name;
    m["config_sha256"] = sha256_hex(req.config_text);
    m["seed"] = req.seed;
    m["version"] = kVersion;
    auto& files = m["files"] = nlohmann::json::array();
    for (const auto& [name, hash] : out.files()) files.push_back({{"name", name}, {"sha256", hash}});
    out.json("manifest.json", m);
  } catch (const std::exception& e) {
    out.discard();
    throw std::runtime_error(req.driver + ": " + e.what());
  }
  return out.files();
}

}  // namespace srcid
