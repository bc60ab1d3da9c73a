#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "phi/cis.hpp"
#include "phi/em.hpp"
#include "phi/ising.hpp"

namespace phi {

/// Flat `key = value` configuration; weight matrix rows follow a `V:` line.
struct ExperimentConfig {
  std::string preset;
  std::size_t n = 0;
  std::vector<double> weights;
  std::vector<double> exterior;
  std::vector<double> betas;
  std::set<std::string> measures{"I", "SI", "G", "CII", "CIS", "T"};
  std::vector<std::size_t> w_sizes{2};
  std::size_t restarts = 10;
  std::uint64_t seed = 0;
  double em_tolerance = 1e-10;
  std::size_t em_max_iterations = 10000;
  bool independent_start = true;
  bool warm_start = true;
  double ips_tolerance = 1e-9;
  CisMethod cis_method = CisMethod::Newton;
  double cis_residual_tolerance = 1e-7;
  double stationary_tolerance = 1e-12;
  bool strict = false;
  std::size_t samples = 500;
  bool permute_latent = false;
  double segmentation_threshold = 0.2;
  std::size_t threads = 1;
  std::string output;

  IsingSystem system(double beta) const;
  EmConfig em_config() const;
  CisConfig cis_config() const;
  bool wants(const std::string& measure) const { return measures.count(measure) > 0; }
};

/// Throws ConfigError on malformed input. Φ_CIS for more than three nodes is
/// rejected unless `force` is set.
ExperimentConfig parse_config(std::string_view text, bool force = false);
ExperimentConfig load_config(const std::string& path, bool force = false);

/// `linear a b k` or `log a b k` (both ends included).
std::vector<double> beta_grid(std::string_view spec);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
  /// Column position by name; throws InvalidArgument when absent.
  std::size_t column(std::string_view name) const;
};

struct SweepRow {
  double beta = 0.0;
  std::optional<double> phi_I, phi_SI, phi_G, phi_CIS, phi_T;
  std::vector<std::optional<double>> phi_CII;  // one per w size
  std::vector<std::string> flags;
};

struct SweepOutcome {
  std::vector<SweepRow> rows;
  CsvTable table;
  bool all_converged = true;
};

SweepOutcome run_sweep(const ExperimentConfig& config);

struct Table1Stats {
  std::size_t w = 0;
  double min = 0.0, max = 0.0, mean = 0.0;
  std::vector<double> values;
};

struct Table1Outcome {
  std::vector<Table1Stats> stats;
  CsvTable table;
};

/// Divergence from random N_CIS samples to the N_CII family for each |W|.
Table1Outcome run_table1(const ExperimentConfig& config);

struct TraceOutcome {
  CsvTable table;
  std::size_t segment_marks = 0;
};

/// One em run per (β, restart) for a single |W|; marks β steps whose best
/// projections differ by more than the segmentation threshold.
TraceOutcome run_localmin_trace(const ExperimentConfig& config);

}  // namespace phi
