#pragma once

#include <chrono>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cqt/box.hpp"
#include "cqt/ccr.hpp"
#include "cqt/experiment/config.hpp"
#include "cqt/experiment/table.hpp"
#include "cqt/gaussian.hpp"
#include "cqt/propagator.hpp"

#ifndef CQT_VERSION
#define CQT_VERSION "0.0.0"
#endif

namespace cqt::experiment {

struct ManifestFile {
  std::string name;
  std::uintmax_t bytes;
  std::string sha256;
};

struct RunManifest {
  std::filesystem::path output_dir;
  std::filesystem::path manifest_path;
  std::vector<ManifestFile> files;
  double wall_clock_seconds;
};

/// Overrides taken from the command line; they win over the config file.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<OutputFormat> format;
};

namespace detail {

inline Complex random_unit_complex(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double re = u(rng);
  return {re, u(rng)};
}

inline std::vector<Table> run_ccr(const ExperimentConfig& cfg) {
  const std::string scheme_name = cfg.get_choice("scheme", "ladder", {"ladder", "grid"});
  const auto dims = cfg.get_int_list("N", {4});
  CcrScheme scheme;
  scheme.kind = scheme_name == "ladder" ? CcrSchemeKind::ladder : CcrSchemeKind::grid;
  scheme.hbar = cfg.get_real("hbar", 1.0);
  scheme.mass = cfg.get_real("mass", 1.0);
  scheme.omega = cfg.get_real("omega", 1.0);
  scheme.half_width = cfg.get_real("half_width", 1.0);
  const long long random_pairs = cfg.get_int("random_pairs", 0);
  if (random_pairs < 0) cfg.fail_key("random_pairs", "`random_pairs` must be >= 0");

  Table residuals{"residuals", {"scheme", "N", "n", "residual_re", "residual_im"}, {}};
  Table summary{"summary",
                {"scheme", "N", "pair", "trace_re", "trace_im", "trace_tolerance", "deviation", "lower_bound",
                 "deviation_over_bound"},
                {}};
  const auto summarize = [&](const std::string& kind, Index n, std::int64_t pair, const OperatorMatrix& p,
                             const OperatorMatrix& q) {
    const CcrReport rep = ccr_report(p, q, scheme.hbar);
    summary.add({kind, std::int64_t{n}, pair, rep.trace.real(), rep.trace.imag(),
                 1e-10 * frobenius_norm(p) * frobenius_norm(q), rep.deviation, rep.lower_bound,
                 rep.deviation / rep.lower_bound});
    return rep;
  };

  std::mt19937_64 rng(cfg.seed);
  for (long long raw : dims) {
    if (raw < 1) cfg.fail_key("N", "`N` entries must be >= 1");
    scheme.dim = static_cast<Index>(raw);
    const CanonicalPair pq = build_pair(scheme);
    const CcrReport rep = summarize(scheme_name, scheme.dim, 0, pq.momentum, pq.position);
    for (std::size_t i = 0; i < rep.diagonal_residuals.size(); ++i)
      residuals.add({scheme_name, std::int64_t{scheme.dim}, static_cast<std::int64_t>(i + 1),
                     rep.diagonal_residuals[i].real(), rep.diagonal_residuals[i].imag()});
    for (long long r = 0; r < random_pairs; ++r) {
      Eigen::MatrixXcd a(scheme.dim, scheme.dim);
      Eigen::MatrixXcd b(scheme.dim, scheme.dim);
      for (Index j = 0; j < scheme.dim; ++j)
        for (Index i = 0; i < scheme.dim; ++i) {
          a(i, j) = random_unit_complex(rng);
          b(i, j) = random_unit_complex(rng);
        }
      const Eigen::MatrixXcd ha = 0.5 * (a + a.adjoint());
      const Eigen::MatrixXcd hb = 0.5 * (b + b.adjoint());
      summarize("random", scheme.dim, r + 1, OperatorMatrix(ha, true), OperatorMatrix(hb, true));
    }
  }
  return {residuals, summary};
}

inline std::vector<Table> run_box(const ExperimentConfig& cfg) {
  BoxSystem sys;
  sys.mass = cfg.get_real("mass", 1.0);
  sys.width = cfg.get_real("width", 1.0);
  sys.hbar = cfg.get_real("hbar", 1.0);
  sys.cutoff = static_cast<Index>(cfg.get_int("cutoff", 8));
  sys.validate();
  const std::string state_kind = cfg.get_choice("state", "ground", {"ground", "random", "coefficients"});
  const double t = cfg.get_real("time", 0.0);
  const long long samples = cfg.get_int("samples", 201);
  const long long quad = cfg.get_int("quadrature_points", 4096);
  if (samples < 2) cfg.fail_key("samples", "`samples` must be >= 2");

  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(sys.cutoff);
  if (state_kind == "ground") {
    c(0) = 1.0;
  } else if (state_kind == "random") {
    std::mt19937_64 rng(cfg.seed);
    for (Index n = 0; n < sys.cutoff; ++n) c(n) = random_unit_complex(rng);
    c.normalize();
  } else {
    const auto list = cfg.get_real_list("coefficients", {});
    if (static_cast<Index>(list.size()) != sys.cutoff)
      cfg.fail_key("coefficients", "`coefficients` needs exactly `cutoff` = " + std::to_string(sys.cutoff) +
                                       " entries, got " + std::to_string(list.size()));
    for (Index n = 0; n < sys.cutoff; ++n) c(n) = list[static_cast<std::size_t>(n)];
    if (c.norm() == 0.0) cfg.fail_key("coefficients", "`coefficients` must not all be zero");
    c.normalize();
  }
  const BoxState state = spectral_evolve(BoxState(sys, c, Norm::unit), t);

  Table energies{"energies", {"n", "energy", "probability"}, {}};
  const auto p = probabilities(state);
  for (Index n = 1; n <= sys.cutoff; ++n)
    energies.add({std::int64_t{n}, energy(n, sys), p[static_cast<std::size_t>(n - 1)]});

  Table wave{"wavefunction", {"x", "re", "im", "density"}, {}};
  for (long long i = 0; i < samples; ++i) {
    // Endpoints are exact so the boundary samples are exact zeros.
    const double x = i == samples - 1 ? sys.width : sys.width * static_cast<double>(i) / static_cast<double>(samples - 1);
    const Complex psi = eval_wavefunction(state, x);
    wave.add({x, psi.real(), psi.imag(), std::norm(psi)});
  }

  Table summary{"summary", {"time", "revival_time", "quadrature_points", "parseval_discrepancy"}, {}};
  summary.add({t, revival_time(sys), std::int64_t{quad}, parseval_check(state, static_cast<Index>(quad))});
  return {energies, wave, summary};
}

inline Configuration parse_configuration(const ExperimentConfig& cfg, const std::string& key) {
  return Configuration(cfg.get_real_list(key, {0.0}));
}

inline std::vector<Table> run_propagate(const ExperimentConfig& cfg) {
  PropagatorRequest req;
  req.q_start = parse_configuration(cfg, "q_start");
  req.q_end = parse_configuration(cfg, "q_end");
  req.mass = cfg.get_real("mass", 1.0);
  req.hbar = cfg.get_real("hbar", 1.0);
  req.duration = cfg.get_real("duration", 1.0);
  req.mode = cfg.get_choice("mode", "imaginary_time", {"real_time", "imaginary_time"}) == "real_time"
                 ? TimeMode::real_time
                 : TimeMode::imaginary_time;
  if (cfg.has("half_width")) req.grid.half_width = cfg.get_real("half_width", 0.0);
  req.grid.points = static_cast<Index>(cfg.get_int("points", 257));
  const std::string method = cfg.get_choice("method", "automatic", {"automatic", "tensor_grid", "monte_carlo", "gaussian"});
  req.method = method == "tensor_grid" ? Quadrature::tensor_grid
               : method == "monte_carlo" ? Quadrature::monte_carlo
               : method == "gaussian"    ? Quadrature::gaussian
                                         : Quadrature::automatic;
  req.mc_samples = static_cast<Index>(cfg.get_int("mc_samples", 1 << 16));
  req.seed = cfg.seed;
  const bool timing = cfg.get_bool("timing", false);

  const std::string pot = cfg.get_choice("potential", "free", {"free", "harmonic", "box", "polynomial"});
  const PotentialSpec v = pot == "free"       ? PotentialSpec::free()
                          : pot == "harmonic" ? PotentialSpec::harmonic(cfg.get_real("omega", 1.0))
                          : pot == "box"      ? PotentialSpec::box(cfg.get_real("width", 1.0))
                                              : PotentialSpec::polynomial(cfg.get_real_list("coefficients", {0.0}));

  const auto slices = cfg.get_int_list("slices", {1, 2, 4, 8, 16, 32, 64});
  req.slices = 1;
  const std::optional<Complex> oracle = analytic_propagator(req, v);

  Table records{"propagate", {"K", "re", "im", "error", "error_kind", "nodes", "method", "seconds"}, {}};
  for (long long k : slices) {
    if (k < 1) cfg.fail_key("slices", "`slices` entries must be >= 1");
    req.slices = static_cast<int>(k);
    const auto t0 = std::chrono::steady_clock::now();
    const PropagatorResult r = sliced_amplitude(req, v);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* m = r.method == Quadrature::tensor_grid ? "tensor_grid"
                    : r.method == Quadrature::monte_carlo ? "monte_carlo"
                                                          : "gaussian";
    Cell err;
    std::string kind;
    if (oracle) {
      err = std::abs(r.amplitude - *oracle) / std::abs(*oracle);
      kind = "relative_to_analytic";
    } else {
      err = r.estimated_error;
      kind = "estimated_absolute";
    }
    records.add({std::int64_t{k}, r.amplitude.real(), r.amplitude.imag(), err, kind,
                 static_cast<std::int64_t>(r.quadrature_points), std::string(m),
                 timing ? Cell{secs} : Cell{std::monostate{}}});
  }
  return {records};
}

inline std::vector<Table> run_gaussian(const ExperimentConfig& cfg) {
  const double a = cfg.get_real("a", std::numbers::pi);
  const double declared = cfg.get_real("declared_precision", 0.0);
  const long long n_max = cfg.get_int("n_max", 100);
  const double eps = cfg.get_real("epsilon", 0.01);
  const auto ns = cfg.get_int_list("precision_N", {10, 20, 40, 80, 160});
  if (n_max < 1 || n_max > 1000000) cfg.fail_key("n_max", "`n_max` must lie in [1, 1000000]");

  const TrichotomyResult tri = limit_trichotomy(a, static_cast<int>(n_max), declared);
  Table scan{"scan", {"N", "a", "log_f", "f_flag"}, {}};
  for (std::size_t i = 0; i < tri.sequence.size(); ++i)
    scan.add({static_cast<std::int64_t>(i + 1), a, tri.sequence[i].log_value, std::string(to_string(tri.sequence[i].flag))});

  Table precision{"precision", {"N", "epsilon", "delta_max", "pi_digits", "pi_digits_exact"}, {}};
  for (long long n : ns) {
    if (n < 1 || n > (1LL << 30)) cfg.fail_key("precision_N", "`precision_N` entries must lie in [1, 2^30]");
    const PrecisionReport r = precision_requirement(static_cast<int>(n), eps);
    precision.add({std::int64_t{n}, eps, r.delta_max, std::int64_t{r.pi_digits_required}, r.pi_digits});
  }

  Table limit{"trichotomy", {"a", "declared_precision", "behavior"}, {}};
  limit.add({a, declared, std::string(to_string(tri.behavior))});
  return {scan, precision, limit};
}

inline std::string manifest_json(const ExperimentConfig& cfg, OutputFormat fmt, const std::vector<ManifestFile>& files,
                                 double seconds) {
  nlohmann::ordered_json j;
  j["tool"] = "cqt";
  j["version"] = CQT_VERSION;
  j["experiment"] = to_string(cfg.experiment);
  j["seed"] = cfg.seed;
  j["format"] = to_string(fmt);
  j["config_source"] = cfg.source;
  nlohmann::ordered_json snap = nlohmann::ordered_json::object();
  for (const auto& [k, v] : cfg.snapshot()) snap[k] = v;
  j["config"] = snap;
  j["wall_clock_seconds"] = seconds;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& f : files) arr.push_back({{"name", f.name}, {"bytes", f.bytes}, {"sha256", f.sha256}});
  j["files"] = arr;
  return j.dump(2) + "\n";
}

}  // namespace detail

/// Runs the configured experiment, writes one file per result table and a
/// manifest.json listing every file with its SHA-256 digest.
inline RunManifest run(ExperimentConfig cfg, const RunOverrides& overrides = {}) {
  namespace fs = std::filesystem;
  const auto start = std::chrono::steady_clock::now();
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.output_dir) cfg.output_dir = *overrides.output_dir;
  if (overrides.format) cfg.format = overrides.format;
  const OutputFormat fmt =
      cfg.format.value_or(cfg.experiment == ExperimentKind::propagate ? OutputFormat::json : OutputFormat::csv);

  std::vector<Table> tables;
  switch (cfg.experiment) {
    case ExperimentKind::ccr: tables = detail::run_ccr(cfg); break;
    case ExperimentKind::box: tables = detail::run_box(cfg); break;
    case ExperimentKind::propagate: tables = detail::run_propagate(cfg); break;
    case ExperimentKind::gaussian: tables = detail::run_gaussian(cfg); break;
  }
  cfg.reject_unused();

  // Serialize everything before touching the output directory.
  std::vector<std::pair<std::string, std::string>> payloads;
  for (const auto& t : tables) payloads.emplace_back(t.name + "." + to_string(fmt), serialize(t, fmt));

  RunManifest out;
  out.output_dir = cfg.output_dir;
  for (const auto& [name, body] : payloads) {
    write_atomic(out.output_dir / name, body);
    out.files.push_back({name, body.size(), sha256_hex(body)});
  }
  out.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.manifest_path = out.output_dir / "manifest.json";
  write_atomic(out.manifest_path, detail::manifest_json(cfg, fmt, out.files, out.wall_clock_seconds));
  return out;
}

}  // namespace cqt::experiment
