// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cqt/cqt.hpp"
#include "cqt/experiment.hpp"
#include "support/ccr_descent.hpp"
#include "support/random.hpp"

namespace fs = std::filesystem;
using namespace cqt;
using cqt::testing::Rng;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char b[64];
  std::snprintf(b, sizeof b, f, v);
  return b;
}

Eigen::MatrixXcd random_complex_matrix(Index n, Rng& rng) { return cqt::testing::random_matrix(n, rng); }

// 1. Trace of the commutator vanishes.
Outcome trace_identity() {
  Rng rng(20240101);
  double worst = 0.0;  // max |Tr| / (||P|| ||Q||)
  long pairs = 0;
  for (Index n : {2, 4, 16, 64, 256}) {
    std::vector<CanonicalPair> constructed{build_ladder_pair({CcrSchemeKind::ladder, n, 1.0, 1.0, 1.0, 1.0})};
    if (n >= 3) constructed.push_back(build_grid_pair({CcrSchemeKind::grid, n, 1.0, 1.0, 4.0, 1.0}));
    for (const auto& pq : constructed) {
      const double scale = frobenius_norm(pq.momentum) * frobenius_norm(pq.position);
      worst = std::max(worst, std::abs(trace(commutator(pq.momentum, pq.position))) / std::max(scale, 1e-300));
      ++pairs;
    }
    for (int t = 0; t < 1000; ++t) {
      const OperatorMatrix p(random_complex_matrix(n, rng));
      const OperatorMatrix q(random_complex_matrix(n, rng));
      worst = std::max(worst, std::abs(trace(commutator(p, q))) / (frobenius_norm(p) * frobenius_norm(q)));
      ++pairs;
    }
  }
  return {worst <= 1e-10, std::to_string(pairs) + " pairs, max |Tr[P,Q]|/(|P||Q|) = " + fmt("%.3e", worst) +
                              " (limit 1e-10)"};
}

// 2. No N x N pair comes closer than hbar sqrt(N) to the CCR.
Outcome impossibility() {
  Rng rng(777);
  double worst_ratio = 1e300;
  double worst_corner = 0.0;
  long pairs = 0;
  for (Index n : {2, 4, 16, 64}) {
    const double hbar = 1.0;
    const double bound = ccr_lower_bound(n, hbar);
    const auto check = [&](const OperatorMatrix& p, const OperatorMatrix& q) {
      worst_ratio = std::min(worst_ratio, ccr_report(p, q, hbar).deviation / bound);
      ++pairs;
    };
    const auto ladder = build_ladder_pair({CcrSchemeKind::ladder, n, 1.0, 1.0, 1.0, hbar});
    check(ladder.momentum, ladder.position);
    const auto rep = ccr_report(ladder.momentum, ladder.position, hbar);
    worst_corner = std::max(worst_corner, std::abs(rep.diagonal_residuals.back() - (1.0 - static_cast<double>(n))));
    if (n >= 3) {
      const auto grid = build_grid_pair({CcrSchemeKind::grid, n, 1.0, 1.0, 3.0, hbar});
      check(grid.momentum, grid.position);
    }
    for (int t = 0; t < 200; ++t) {
      check(OperatorMatrix(random_complex_matrix(n, rng)), OperatorMatrix(random_complex_matrix(n, rng)));
      check(OperatorMatrix(cqt::testing::random_hermitian(n, rng), true),
            OperatorMatrix(cqt::testing::random_hermitian(n, rng), true));
    }
    for (int restart = 0; restart < 4; ++restart) {
      const auto out = cqt::testing::minimize_ccr_deviation(n, hbar, rng, n >= 64 ? 200 : 400);
      check(OperatorMatrix(out.p), OperatorMatrix(out.q));
    }
  }
  const bool pass = worst_ratio >= 1.0 - 1e-9 && worst_corner <= 1e-10;
  return {pass, std::to_string(pairs) + " pairs, min deviation/(hbar sqrt N) = " + fmt("%.12f", worst_ratio) +
                    " (limit 1 - 1e-9); ladder corner |r - (1-N)| max = " + fmt("%.2e", worst_corner) +
                    " (limit 1e-10)"};
}

// 3. Box spectrum.
Outcome box_spectrum() {
  double worst_rel = 0.0;
  bool exact = true;
  int systems = 0;
  std::vector<Index> sizes;
  for (Index n = 1; n <= 64; ++n) sizes.push_back(n);
  for (Index n : {100, 128, 255, 256, 500, 512, 777, 1000, 1023, 1024}) sizes.push_back(n);
  for (Index n : sizes) {
    const BoxSystem sys{0.5 + 0.01 * static_cast<double>(n % 7), 0.3 + 0.1 * static_cast<double>(n % 5), 1.0, n};
    const OperatorMatrix h = hamiltonian_matrix(sys);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        const Complex want = i == j ? Complex(energy(i + 1, sys)) : Complex(0.0);
        if (h(i, j) != want) exact = false;
      }
    const double nn = static_cast<double>(n);
    const double closed = sys.energy_scale() * nn * (nn + 1.0) * (2.0 * nn + 1.0) / 6.0;
    worst_rel = std::max(worst_rel, std::abs(trace(h).real() - closed) / closed);
    ++systems;
  }
  return {exact && worst_rel <= 1e-12, std::to_string(systems) + " systems up to N = 1024, entries exact: " +
                                           (exact ? "yes" : "no") + ", max trace rel. error = " +
                                           fmt("%.3e", worst_rel) + " (limit 1e-12)"};
}

// 4. Box reconstruction.
Outcome box_reconstruction() {
  Rng rng(4096);
  double worst = 0.0;
  bool zero_walls = true;
  std::uniform_int_distribution<Index> cutoff(1, 64);
  for (int t = 0; t < 100; ++t) {
    const BoxSystem sys{1.0, 0.5 + 0.05 * t, 1.0, cutoff(rng)};
    const BoxState s(sys, cqt::testing::random_unit_vector(sys.cutoff, rng), Norm::unit);
    worst = std::max(worst, parseval_check(s, 4096));
    if (eval_wavefunction(s, 0.0) != Complex(0.0) || eval_wavefunction(s, sys.width) != Complex(0.0)) zero_walls = false;
  }
  return {worst <= 1e-8 && zero_walls, "100 states, max Parseval discrepancy = " + fmt("%.3e", worst) +
                                           " (limit 1e-8), boundary values exactly 0: " + (zero_walls ? "yes" : "no")};
}

// 5. Propagator convergence.
Outcome propagator_convergence() {
  PropagatorRequest tmpl;
  tmpl.mode = TimeMode::imaginary_time;
  tmpl.grid = {8.0, 257};
  tmpl.method = Quadrature::tensor_grid;
  const int ks[] = {4, 8, 16, 32, 64};
  const auto scan = convergence_scan(tmpl, PotentialSpec::harmonic(1.0), ks);
  double lo = 1e300, hi = 0.0;
  std::string ratios;
  for (std::size_t i = 1; i < scan.size(); ++i) {
    const double r = scan[i - 1].relative_error / scan[i].relative_error;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    ratios += (i > 1 ? ", " : "") + fmt("%.3f", r);
  }
  const double final_err = scan.back().relative_error;

  PropagatorRequest rt;
  rt.mode = TimeMode::real_time;
  rt.slices = 1;
  const Complex amp = sliced_amplitude(rt, PotentialSpec::free()).amplitude;
  const double k1 = std::abs(amp - analytic_free_propagator(0, 0, 1, 1, 1, TimeMode::real_time));

  const bool pass = lo >= 3.5 && hi <= 4.5 && final_err <= 0.01 && k1 <= 1e-12;
  return {pass, "ratios per doubling K=4..64: " + ratios + " (range [3.5, 4.5]); rel. error at K=64 = " +
                    fmt("%.3e", final_err) + " (limit 1e-2); free K=1 real-time |diff| = " + fmt("%.1e", k1) +
                    " (limit 1e-12)"};
}

// 6. Chapman-Kolmogorov for the free particle.
Outcome chapman_kolmogorov() {
  const double tau = 1.0;
  const double a = 0.3;
  const double b = -0.7;
  const double L = 12.0;
  const Index m = 513;
  const double h = 2.0 * L / static_cast<double>(m - 1);
  const auto single = [&](double x1, double x2) {
    PropagatorRequest r;
    r.q_start = Configuration{x1};
    r.q_end = Configuration{x2};
    r.duration = tau;
    r.mode = TimeMode::imaginary_time;
    return sliced_amplitude(r, PotentialSpec::free()).amplitude;
  };
  Complex composed = 0.0;
  for (Index j = 0; j < m; ++j) {
    const double y = -L + static_cast<double>(j) * h;
    composed += ((j == 0 || j == m - 1) ? 0.5 * h : h) * single(a, y) * single(y, b);
  }
  const Complex oracle = analytic_free_propagator(a, b, 1.0, 1.0, 2.0 * tau, TimeMode::imaginary_time);
  const double rel = std::abs(composed - oracle) / std::abs(oracle);

  // The same composition carried out by the sliced integrator itself (K = 2 over 2 tau).
  PropagatorRequest two;
  two.q_start = Configuration{a};
  two.q_end = Configuration{b};
  two.duration = 2.0 * tau;
  two.slices = 2;
  two.grid = {L, m};
  two.mode = TimeMode::imaginary_time;
  const double rel2 = std::abs(sliced_amplitude(two, PotentialSpec::free()).amplitude - oracle) / std::abs(oracle);
  return {rel <= 1e-4 && rel2 <= 1e-4, "tau + tau vs 2 tau at L = 12, M = 513: rel. error " + fmt("%.3e", rel) +
                                           " (explicit), " + fmt("%.3e", rel2) + " (K = 2 grid) (limit 1e-4)"};
}

// 7. Gaussian norm quadrature and trichotomy.
Outcome gaussian_norm() {
  double worst = 0.0;
  int cases = 0;
  for (int d = 1; d <= 6; ++d)
    for (int i = 0; i <= 22; ++i) {
      const double a = 0.5 + 0.25 * i;
      const double q = gaussian_norm_quadrature(d, a, 8.0 / std::sqrt(a), 257);
      const double want = gaussian_norm_analytic_dims(d, a).value();
      worst = std::max(worst, std::abs(q - want) / want);
      ++cases;
    }
  // Direct enumeration of the full 3-D grid for a spot check of separability.
  for (double a : {0.5, kPi, 6.0}) {
    const double q = gaussian_norm_tensor_grid(3, a, 8.0 / std::sqrt(a), 201);
    worst = std::max(worst, std::abs(q - gaussian_norm_analytic(1, a).value()) / gaussian_norm_analytic(1, a).value());
    ++cases;
  }
  const bool tri = limit_trichotomy(1.0, 200).behavior == LimitBehavior::diverges_to_inf &&
                   limit_trichotomy(kPi, 200).behavior == LimitBehavior::constant_1 &&
                   limit_trichotomy(4.0, 200).behavior == LimitBehavior::diverges_to_0;
  return {worst <= 1e-6 && tri, std::to_string(cases) + " (D, a) cases, max rel. error = " + fmt("%.3e", worst) +
                                    " (limit 1e-6); trichotomy on {1, pi, 4}: " + (tri ? "inf, 1, 0" : "WRONG")};
}

// 8. Precision scaling.
Outcome precision_scaling() {
  const int ns[] = {10, 20, 40, 80, 160};
  std::vector<double> lx, ly, digits;
  std::vector<int> whole;
  for (int n : ns) {
    const auto r = precision_requirement(n, 0.01);
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(r.delta_max));
    digits.push_back(r.pi_digits);
    whole.push_back(r.pi_digits_required);
  }
  const double mx = (lx[0] + lx[1] + lx[2] + lx[3] + lx[4]) / 5.0;
  const double my = (ly[0] + ly[1] + ly[2] + ly[3] + ly[4]) / 5.0;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  const double step = std::log10(2.0);
  double lo = 1e300, hi = 0.0;
  for (std::size_t i = 1; i < 5; ++i) {
    lo = std::min(lo, digits[i] - digits[i - 1]);
    hi = std::max(hi, digits[i] - digits[i - 1]);
  }
  std::string ints;
  for (int w : whole) ints += (ints.empty() ? "" : ",") + std::to_string(w);
  const bool pass = std::abs(slope + 1.0) <= 0.05 && lo >= 0.9 * step && hi <= 1.1 * step;
  return {pass, "fitted exponent = " + fmt("%.5f", slope) + " (target -1 +/- 0.05); digits gained per doubling in [" +
                    fmt("%.5f", lo) + ", " + fmt("%.5f", hi) + "] (target log10 2 = " + fmt("%.5f", step) +
                    " +/- 10%); whole digits " + ints};
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + std::string(CQT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 9. Determinism of the experiment runner.
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("cqt_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  int configs = 0;
  int files = 0;
  std::string failure;
  std::vector<fs::path> sources;
  for (const auto& e : fs::directory_iterator(CQT_CONFIG_DIR))
    if (e.path().extension() == ".conf") sources.push_back(e.path());
  std::sort(sources.begin(), sources.end());
  const std::string mc = (root / "mc.conf").string();
  {
    std::ofstream(mc) << "experiment = propagate\npotential = harmonic\nmethod = monte_carlo\nslices = 16\n"
                         "mc_samples = 50000\nseed = 2024\n";
  }
  sources.emplace_back(mc);

  for (const auto& src : sources) {
    ++configs;
    const fs::path a = root / (src.stem().string() + "_a");
    const fs::path b = root / (src.stem().string() + "_b");
    // The second run uses a different thread count; outputs must not depend on it.
    if (run_cli("run " + src.string() + " --out " + a.string(), "CQT_THREADS=1") != 0 ||
        run_cli("run " + src.string() + " --out " + b.string(), "CQT_THREADS=3") != 0) {
      failure = "run failed for " + src.filename().string();
      break;
    }
    const auto ma = nlohmann::json::parse(experiment::read_file(a / "manifest.json"));
    const auto mb = nlohmann::json::parse(experiment::read_file(b / "manifest.json"));
    if (ma["files"] != mb["files"]) failure = "manifest digests differ for " + src.filename().string();
    for (const auto& f : ma["files"]) {
      const std::string name = f["name"];
      const std::string da = experiment::read_file(a / name);
      if (da != experiment::read_file(b / name) || experiment::sha256_hex(da) != f["sha256"])
        failure = "bytes differ for " + src.filename().string() + "/" + name;
      ++files;
    }
  }
  fs::remove_all(root);
  if (!failure.empty()) return {false, failure};
  return {files > 0, std::to_string(configs) + " configs x 2 runs (1 vs 3 threads), " + std::to_string(files) +
                         " result files byte-identical with matching SHA-256"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"CCR trace identity", trace_identity},
      {"CCR impossibility bound", impossibility},
      {"box spectrum", box_spectrum},
      {"box reconstruction", box_reconstruction},
      {"propagator convergence", propagator_convergence},
      {"Chapman-Kolmogorov composition", chapman_kolmogorov},
      {"Gaussian norm", gaussian_norm},
      {"precision scaling", precision_scaling},
      {"determinism", determinism},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
