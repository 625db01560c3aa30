// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//   acceptance [--configs DIR] [criterion numbers...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "srcid/experiments.hpp"
#include "support/manufactured.hpp"

namespace fs = std::filesystem;
using namespace srcid;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

fs::path g_configs = SRCID_CONFIG_DIR;

ExperimentConfig experiment(const std::string& name) { return load_config(g_configs / (name + ".ini")); }

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Point2 random_measurement_point(const SourceDomain& dom, Rng& rng) {
  for (;;) {
    const Point2 z{rng.uniform(), rng.uniform()};
    if (dom.in_measurement_domain(z)) return z;
  }
}

Outcome fem_convergence() {
  const auto cfg = experiment("experiment1");
  std::vector<double> err;
  for (int k = 3; k <= 6; ++k) err.push_back(testing::manufactured_error(std::size_t{1} << k, cfg.physics));
  double worst = 1e300;
  std::string orders;
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    const double p = std::log2(err[i] / err[i + 1]);
    worst = std::min(worst, p);
    orders += (i ? " " : "") + fmt3(p);
  }
  return {worst >= 1.9, "L2 orders " + orders + " (need >= 1.9)"};
}

Outcome reciprocity() {
  const auto cfg = experiment("experiment1");
  const SourceDomain dom = cfg.source_domain();
  Rng rng(cfg.seed, "acceptance-reciprocity");
  double worst = 0.0;
  for (int k : {4, 5}) {
    const AssembledSystem sys = assemble(std::make_shared<const StructuredTriMesh>(std::size_t{1} << k), cfg.physics);
    for (int i = 0; i < 20; ++i) {
      const Point2 x = dom.sample(rng);
      const Point2 z = random_measurement_point(dom, rng);
      const Complex gxz = sys.green_value(x, z), gzx = sys.green_value(z, x);
      worst = std::max(worst, std::abs(gxz - gzx) / std::max(std::abs(gxz), 1.0));
    }
  }
  return {worst <= 1e-8, "max scaled defect " + fmt3(worst) + " (need <= 1e-8)"};
}

Outcome pointwise_rate() {
  const auto cfg = experiment("experiment1");
  const SourceDomain dom = cfg.source_domain();
  Rng rng(cfg.seed, "acceptance-pointwise");
  std::vector<std::pair<Point2, Point2>> pairs;
  for (int i = 0; i < 10; ++i) {
    const Point2 x = dom.sample(rng);
    pairs.emplace_back(x, random_measurement_point(dom, rng));
  }
  const std::vector<std::size_t> n_div{4, 8, 16, 32};
  const auto rows = pointwise_error_study(cfg.physics, pairs, n_div, 128);
  std::vector<double> h, e;
  for (const auto& r : rows) h.push_back(r.h), e.push_back(r.error);
  const auto fit = fit_rate(h, e, RateModel::LogH);
  return {fit.order_h >= 1.7 && fit.order_h <= 2.3,
          "order p in C|ln h|h^p = " + fmt3(fit.order_h) + " (need [1.7, 2.3]); plain log-h slope " +
              fmt3(fit.slope_log_h)};
}

Outcome prior_pmf() {
  const auto cfg = experiment("experiment2");
  const PriorSpec prior = cfg.prior();
  const double published[] = {0.195, 0.195, 0.156, 0.104, 0.060};
  double worst = 0.0;
  for (int k = 3; k <= 7; ++k) worst = std::max(worst, std::abs(prior_k_pmf(prior, k) - published[k - 3]));
  return {worst <= 0.001, "max |pmf - column| over k = 3..7: " + fmt3(worst) + " (need <= 0.001)"};
}

Outcome kernel_invariance() {
  const auto cfg = experiment("experiment1");
  const PriorSpec prior = cfg.prior();
  const auto zero = [](const SourceConfig&) { return 0.0; };
  const int n = 100000, steps = 10;
  long long proposed = 0, accepted = 0;
  double sk = 0, sa = 0, sx = 0, sy = 0;
  int m = 0;
  SourceConfig scratch;
  for (int i = 0; i < n; ++i) {
    Rng rng(cfg.seed, "acceptance-kernel", {static_cast<std::uint64_t>(i)});
    SourceConfig u = sample_prior(prior, rng);
    double pu = 0.0;
    for (int s = 0; s < steps; ++s) {
      const auto o = mh_step(u, pu, 0.0, prior, cfg.kernel, zero, rng, scratch);
      proposed += o.proposed;
      accepted += o.accepted;
    }
    sk += static_cast<double>(u.k());
    if (!u.empty()) {
      sa += u.sources[0].alpha.real();
      sx += u.sources[0].x.x;
      sy += u.sources[0].x.y;
      ++m;
    }
  }
  // Analytic prior values: Poisson mean, amplitude mean, centroid of the rectangle.
  const double lambda = std::get<PoissonCount>(cfg.count_law).lambda;
  const Rect& r = cfg.source_rects.at(0);
  const double z_k = (sk / n - lambda) / std::sqrt(lambda / n);
  const double z_a = (sa / m - cfg.amp_mean.real()) / std::sqrt(0.5 * cfg.amp_variance / m);
  const double z_x = (sx / m - 0.5 * (r.x0 + r.x1)) / (r.width() / std::sqrt(12.0 * m));
  const double z_y = (sy / m - 0.5 * (r.y0 + r.y1)) / (r.height() / std::sqrt(12.0 * m));
  const double rate = static_cast<double>(accepted) / static_cast<double>(proposed);
  const bool pass = std::abs(z_k) <= 4 && std::abs(z_a) <= 4 && std::abs(z_x) <= 4 && std::abs(z_y) <= 4 &&
                    accepted == proposed;
  return {pass, "z-scores k " + fmt3(z_k) + ", Re alpha1 " + fmt3(z_a) + ", x1 " + fmt3(z_x) + ", y1 " + fmt3(z_y) +
                    " (need |z| <= 4); acceptance " + fmt3(rate) + " over " + std::to_string(proposed) + " proposals"};
}

Outcome mse_rate() {
  const auto cfg = experiment("experiment1");
  const auto s = mse_study(cfg, cfg.seed);
  const double slope = s.fits[1].slope;
  return {slope >= -1.35 && slope <= -0.65, "f2 slope " + fmt3(slope) + " (need [-1.35, -0.65])"};
}

// Criteria 7 and 8 share one study.
const HStudy& shared_h_study() {
  static const HStudy s = [] {
    const auto cfg = experiment("experiment1");
    return h_study(cfg, cfg.seed);
  }();
  return s;
}

Outcome hellinger_rate() {
  const auto& s = shared_h_study();
  const double slope = s.hellinger_fit.slope;
  return {slope >= 0.8 && slope <= 1.2, "slope vs log(|ln h| h^2) " + fmt3(slope) + " (need [0.8, 1.2])"};
}

Outcome eh_rate() {
  const auto& s = shared_h_study();
  const double f1 = s.eh_fits[0].slope, f3 = s.eh_fits[2].slope;
  const bool pass = f1 >= 0.7 && f1 <= 1.3 && f3 >= 0.7 && f3 <= 1.3;
  return {pass, "f1 slope " + fmt3(f1) + ", f3 slope " + fmt3(f3) + " (need [0.7, 1.3]); importance-sampling slopes " +
                    fmt3(s.eh_is_fits[0].slope) + ", " + fmt3(s.eh_is_fits[2].slope)};
}

Outcome separation() {
  const auto cfg = experiment("experiment1");
  const auto a = analyse_posterior(cfg, cfg.seed);
  const double tol = cfg.analysis.eps + a.h;
  const Point2 t1{0.25, 0.75}, t2{0.75, 0.75};
  double peak_dist = std::numeric_limits<double>::infinity();
  if (a.peaks.size() == 2) {
    const Point2 p = a.peaks[0].x, q = a.peaks[1].x;
    peak_dist = std::min(std::max(distance(p, t1), distance(q, t2)), std::max(distance(p, t2), distance(q, t1)));
  }
  const auto cmax = local_maxima(a.conditional[0], 1, 0.0);
  const double cond_dist = cmax.empty() ? std::numeric_limits<double>::infinity() : distance(cmax[0].x, t2);
  std::string where;
  for (const auto& p : a.peaks) where += " (" + fmt3(p.x.x) + ", " + fmt3(p.x.y) + ")";
  return {peak_dist <= tol && cond_dist <= tol, "peaks" + where + ", max distance " + fmt3(peak_dist) +
                                                    "; conditional max distance " + fmt3(cond_dist) + " (need <= " +
                                                    fmt3(tol) + ")"};
}

Outcome second_experiment() {
  const auto cfg = experiment("experiment2");
  const Discretization disc(cfg, cfg.n_div);
  int good = 0;
  std::string summary;
  for (std::uint64_t r = 0; r < 10; ++r) {
    const std::uint64_t seed = stream_seed(cfg.seed, "acceptance-experiment2", {r});
    const Potential psi(*disc.cache, cfg.noise(), make_data(cfg, seed));
    const auto res = run_posterior_smc(cfg, psi, cfg.particles, stream_seed(seed, "posterior"));
    const auto pmf = posterior_k_pmf(res.ensemble);
    std::size_t mode = 0;
    double best = -1.0;
    for (const auto& [k, p] : pmf)
      if (p > best) best = p, mode = k;
    const double p3 = pmf.count(3) ? pmf.at(3) : 0.0;
    const bool ok = mode == 5 && p3 < 0.05;
    good += ok;
    summary += " " + std::to_string(mode) + "/" + fmt3(p3);
  }
  return {good >= 8, std::to_string(good) + "/10 runs with mode 5 and P(k=3) < 0.05 (need >= 8); mode/P(3):" + summary};
}

// Every driver on reduced-scale copies of the shipped configs: two runs with one
// worker and one with two workers must agree byte for byte.
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "srcid_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::string> bad;
  std::size_t compared = 0;
  for (const auto& [name, drivers] :
       std::vector<std::pair<std::string, std::vector<std::string>>>{{"experiment1", {"separation", "mse", "hellinger", "eh"}},
                                                                     {"experiment2", {"experiment2"}}}) {
    const std::string text = read_text(g_configs / (name + ".ini"));
    auto cfg = experiment(name);
    cfg.particles = 2000;
    cfg.analysis.grid_nx = cfg.analysis.grid_ny = 51;
    cfg.study.mse_reference_particles = 2000;
    cfg.study.mse_particles = {100, 200, 400};
    cfg.study.mse_repetitions = 3;
    cfg.study.h_particles = 1000;
    cfg.study.h_repetitions = 2;
    for (const auto& driver : drivers) {
      std::map<std::string, std::string> first;
      for (const auto& [tag, workers] : std::vector<std::pair<std::string, std::size_t>>{{"a", 1}, {"b", 1}, {"c", 2}}) {
        RunRequest req{driver, cfg, text, cfg.seed, root / driver / tag};
        req.config.workers = workers;
        run_experiment(req);
        std::map<std::string, std::string> files;
        for (const auto& e : fs::directory_iterator(req.out_dir)) files[e.path().filename().string()] = read_text(e.path());
        if (tag == "a")
          first = files;
        else if (files != first)
          bad.push_back(driver + "/" + tag);
        compared += files.size();
      }
    }
  }
  fs::remove_all(root);
  return {bad.empty(), std::to_string(compared) + " files compared across reruns and worker counts" +
                           (bad.empty() ? std::string() : "; mismatches:" + [&] {
                             std::string s;
                             for (const auto& b : bad) s += " " + b;
                             return s;
                           }())};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--configs" && i + 1 < argc)
      g_configs = argv[++i];
    else
      only.insert(std::stoi(a));
  }
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, fem_convergence}, {2, reciprocity},    {3, pointwise_rate}, {4, prior_pmf},
      {5, kernel_invariance}, {6, mse_rate},     {7, hellinger_rate}, {8, eh_rate},
      {9, separation},      {10, second_experiment}, {11, determinism}};
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  [" << fmt3(secs)
              << " s]" << std::endl;
  }
  return failed ? 1 : 0;
}
