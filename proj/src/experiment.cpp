#include "phi/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "phi/error.hpp"
#include "phi/ips.hpp"
#include "phi/rng.hpp"

namespace phi {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> tokens(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) throw ConfigError(key + ": not a number: '" + text + "'");
  return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": not a non-negative integer: '" + text + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": expected true or false");
}

std::vector<double> number_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(to_double(key, item));
  return out;
}

/// Runs fn(0..count-1) on up to `threads` workers; results must be written by index.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, count); ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string field(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

std::vector<double> beta_grid(std::string_view spec) {
  const auto t = tokens(spec);
  if (t.size() != 4) throw ConfigError("beta_grid: expected `linear|log start stop count`");
  const double a = to_double("beta_grid", t[1]), b = to_double("beta_grid", t[2]);
  const std::size_t k = to_unsigned("beta_grid", t[3]);
  if (k == 0) throw ConfigError("beta_grid: count must be positive");
  std::vector<double> out;
  if (t[0] == "linear") {
    for (std::size_t i = 0; i < k; ++i)
      out.push_back(k == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(k - 1));
  } else if (t[0] == "log") {
    if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("beta_grid: log spacing needs positive ends");
    for (std::size_t i = 0; i < k; ++i)
      out.push_back(k == 1 ? a : a * std::pow(b / a, static_cast<double>(i) / static_cast<double>(k - 1)));
  } else {
    throw ConfigError("beta_grid: spacing must be linear or log");
  }
  return out;
}

ExperimentConfig parse_config(std::string_view text, bool force) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::set<std::string> seen;
  std::vector<std::vector<double>> matrix;
  bool in_matrix = false, has_matrix = false;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (line == "V:") {
      if (has_matrix) throw ConfigError(where + "duplicate V block");
      in_matrix = has_matrix = true;
      continue;
    }
    const auto eq = line.find('=');
    if (in_matrix && eq == std::string::npos) {
      matrix.push_back(number_list("V", line));
      continue;
    }
    in_matrix = false;
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key " + key);
    if (key == "preset") {
      cfg.preset = value;
    } else if (key == "beta_grid") {
      if (seen.count("betas")) throw ConfigError(where + "give either betas or beta_grid");
      cfg.betas = beta_grid(value);
    } else if (key == "betas") {
      if (seen.count("beta_grid")) throw ConfigError(where + "give either betas or beta_grid");
      cfg.betas = number_list(key, value);
    } else if (key == "measures") {
      cfg.measures.clear();
      for (const auto& m : split(value, ',')) {
        static const std::set<std::string> known{"I", "SI", "G", "CII", "CIS", "T"};
        if (!known.count(m)) throw ConfigError(where + "unknown measure " + m);
        cfg.measures.insert(m);
      }
    } else if (key == "w_sizes") {
      cfg.w_sizes.clear();
      for (const auto& w : split(value, ',')) cfg.w_sizes.push_back(to_unsigned(key, w));
    } else if (key == "restarts") {
      cfg.restarts = to_unsigned(key, value);
    } else if (key == "seed") {
      cfg.seed = to_unsigned(key, value);
    } else if (key == "em_tolerance") {
      cfg.em_tolerance = to_double(key, value);
    } else if (key == "em_max_iterations") {
      cfg.em_max_iterations = to_unsigned(key, value);
    } else if (key == "independent_start") {
      cfg.independent_start = to_bool(key, value);
    } else if (key == "warm_start") {
      cfg.warm_start = to_bool(key, value);
    } else if (key == "ips_tolerance") {
      cfg.ips_tolerance = to_double(key, value);
    } else if (key == "cis_method") {
      if (value == "newton") cfg.cis_method = CisMethod::Newton;
      else if (value == "penalty") cfg.cis_method = CisMethod::Penalty;
      else throw ConfigError(where + "cis_method must be newton or penalty");
    } else if (key == "cis_residual_tolerance") {
      cfg.cis_residual_tolerance = to_double(key, value);
    } else if (key == "stationary_tolerance") {
      cfg.stationary_tolerance = to_double(key, value);
    } else if (key == "strict") {
      cfg.strict = to_bool(key, value);
    } else if (key == "samples") {
      cfg.samples = to_unsigned(key, value);
    } else if (key == "permute_latent") {
      cfg.permute_latent = to_bool(key, value);
    } else if (key == "segmentation_threshold") {
      cfg.segmentation_threshold = to_double(key, value);
    } else if (key == "threads") {
      cfg.threads = to_unsigned(key, value);
    } else if (key == "output") {
      cfg.output = value;
    } else if (key == "exterior") {
      cfg.exterior = number_list(key, value);
    } else {
      throw ConfigError(where + "unknown key " + key);
    }
  }

  if (!cfg.preset.empty() && has_matrix) throw ConfigError("give either preset or a V block, not both");
  if (!cfg.preset.empty()) {
    try {
      const IsingSystem s = preset(cfg.preset);
      cfg.n = s.n;
      cfg.weights = s.weights;
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  } else if (has_matrix) {
    cfg.n = matrix.size();
    if (cfg.n == 0) throw ConfigError("V block is empty");
    for (const auto& row : matrix) {
      if (row.size() != cfg.n) throw ConfigError("V must be square");
      cfg.weights.insert(cfg.weights.end(), row.begin(), row.end());
    }
    if (cfg.n > 10) throw ConfigError("at most 10 nodes are supported");
  }
  if (!cfg.exterior.empty() && cfg.exterior.size() != cfg.n)
    throw ConfigError("exterior needs one weight per node");
  for (double b : cfg.betas)
    if (!(b >= 0.0)) throw ConfigError("beta values must be non-negative");
  if (cfg.w_sizes.empty()) throw ConfigError("w_sizes must be nonempty");
  for (std::size_t w : cfg.w_sizes)
    if (w < 1) throw ConfigError("latent sizes must be positive");
  if (cfg.restarts < 1) throw ConfigError("restarts must be at least 1");
  if (!(cfg.em_tolerance > 0.0) || !(cfg.ips_tolerance > 0.0) || !(cfg.stationary_tolerance > 0.0) ||
      !(cfg.cis_residual_tolerance > 0.0))
    throw ConfigError("tolerances must be positive");
  if (cfg.threads < 1) throw ConfigError("threads must be at least 1");
  if (cfg.wants("CIS") && cfg.n > 3 && !force)
    throw ConfigError("phi_CIS for more than 3 nodes is very time consuming; drop CIS from measures or pass --force");
  return cfg;
}

ExperimentConfig load_config(const std::string& path, bool force) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), force);
}

IsingSystem ExperimentConfig::system(double beta) const {
  if (n == 0) throw ConfigError("config needs a preset or a V block");
  return IsingSystem(n, weights, beta, exterior);
}

EmConfig ExperimentConfig::em_config() const {
  EmConfig em;
  em.tolerance = em_tolerance;
  em.max_iterations = em_max_iterations;
  em.restarts = restarts;
  em.seed = seed;
  em.include_independent_start = independent_start;
  return em;
}

CisConfig ExperimentConfig::cis_config() const {
  CisConfig c;
  c.method = cis_method;
  c.seed = seed;
  c.residual_tolerance = cis_residual_tolerance;
  return c;
}

std::string CsvTable::to_csv() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out += ',';
      out += cells[k];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw InvalidArgument("no CSV column " + std::string(name));
  return static_cast<std::size_t>(it - header.begin());
}

namespace {

struct SystemAtBeta {
  std::optional<Distribution> extended;
  SystemJoint joint;
};

SystemAtBeta build_system(const ExperimentConfig& cfg, double beta) {
  StationaryOptions opt;
  opt.tol = cfg.stationary_tolerance;
  opt.seed = cfg.seed;
  const IsingSystem sys = cfg.system(beta);
  if (sys.has_exterior()) {
    Distribution ext = stationary_extended(sys, opt);
    SystemJoint joint = visible_marginal(ext);
    return {std::move(ext), std::move(joint)};
  }
  return {std::nullopt, stationary_joint(sys, opt)};
}

SweepRow sweep_row(const ExperimentConfig& cfg, double beta, bool& converged) {
  SweepRow row;
  row.beta = beta;
  converged = true;
  const SystemAtBeta s = build_system(cfg, beta);
  const SystemJoint& p = s.joint;
  auto flag = [&](const std::string& f, bool counts) {
    row.flags.push_back(f);
    if (counts) converged = false;
  };
  std::optional<MeasureReport> si;
  if (cfg.wants("I")) row.phi_I = phi_I(p).value;
  if (cfg.wants("SI") || cfg.wants("T")) si = phi_SI(p);
  if (cfg.wants("SI")) row.phi_SI = si->value;
  if (cfg.wants("G")) {
    const MeasureReport g = phi_G(p, cfg.ips_tolerance);
    row.phi_G = g.value;
    if (!g.converged) flag("G_nonconverged", true);
  }
  row.phi_CII.assign(cfg.w_sizes.size(), std::nullopt);
  if (cfg.wants("CII")) {
    const auto results = phi_CII_sweep(p, SplitFamily::cii(p.n(), 1), cfg.w_sizes, cfg.em_config(), cfg.warm_start);
    for (std::size_t k = 0; k < results.size(); ++k) {
      row.phi_CII[k] = results[k].report.value;
      if (!results[k].report.converged) flag("CII_w" + std::to_string(cfg.w_sizes[k]) + "_nonconverged", true);
    }
  }
  if (cfg.wants("CIS")) {
    const MeasureReport c = phi_CIS(p, cfg.cis_config());
    row.phi_CIS = c.value;
    if (!c.converged) flag("CIS_nonconverged", true);
  }
  if (cfg.wants("T")) {
    if (s.extended) {
      row.phi_T = phi_T(*s.extended).value;
    } else {
      row.phi_T = si->value;
      flag("T_equals_SI", false);
    }
  }
  return row;
}

}  // namespace

SweepOutcome run_sweep(const ExperimentConfig& cfg) {
  if (cfg.betas.empty()) throw ConfigError("sweep needs betas or beta_grid");
  cfg.system(0.0);  // validates that a system is configured
  SweepOutcome out;
  out.rows.resize(cfg.betas.size());
  std::vector<char> ok(cfg.betas.size(), 1);
  parallel_for(cfg.betas.size(), cfg.threads, [&](std::size_t k) {
    bool converged = true;
    out.rows[k] = sweep_row(cfg, cfg.betas[k], converged);
    ok[k] = converged ? 1 : 0;
  });
  out.all_converged = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });

  CsvTable& t = out.table;
  t.header = {"beta", "phi_I", "phi_SI", "phi_G"};
  for (std::size_t w : cfg.w_sizes) t.header.push_back("phi_CII_w" + std::to_string(w));
  t.header.insert(t.header.end(), {"phi_CIS", "phi_T", "flags"});
  for (const SweepRow& r : out.rows) {
    std::vector<std::string> cells{format_number(r.beta), field(r.phi_I), field(r.phi_SI), field(r.phi_G)};
    for (const auto& v : r.phi_CII) cells.push_back(field(v));
    cells.push_back(field(r.phi_CIS));
    cells.push_back(field(r.phi_T));
    std::string flags;
    for (const auto& f : r.flags) flags += (flags.empty() ? "" : ";") + f;
    cells.push_back(flags);
    t.rows.push_back(std::move(cells));
  }
  return out;
}

Table1Outcome run_table1(const ExperimentConfig& cfg) {
  if (cfg.samples < 1) throw ConfigError("table1 needs at least one sample");
  const std::size_t nw = cfg.w_sizes.size();
  std::vector<double> values(cfg.samples * nw);
  parallel_for(cfg.samples, cfg.threads, [&](std::size_t s) {
    const std::uint64_t stream = stream_id(cfg.seed, s);
    const SystemJoint p = sample_NCIS(stream);
    EmConfig em = cfg.em_config();
    em.seed = stream;
    for (std::size_t k = 0; k < nw; ++k)
      values[s * nw + k] = phi_CII(p, SplitFamily::ncii(cfg.w_sizes[k]), em).report.value;
  });

  Table1Outcome out;
  out.table.header = {"w", "samples", "min", "max", "mean"};
  for (std::size_t k = 0; k < nw; ++k) {
    Table1Stats st;
    st.w = cfg.w_sizes[k];
    for (std::size_t s = 0; s < cfg.samples; ++s) st.values.push_back(values[s * nw + k]);
    st.min = *std::min_element(st.values.begin(), st.values.end());
    st.max = *std::max_element(st.values.begin(), st.values.end());
    double total = 0.0;
    for (double v : st.values) total += v;
    st.mean = total / static_cast<double>(st.values.size());
    out.table.rows.push_back({std::to_string(st.w), std::to_string(cfg.samples), format_number(st.min),
                              format_number(st.max), format_number(st.mean)});
    out.stats.push_back(std::move(st));
  }
  return out;
}

TraceOutcome run_localmin_trace(const ExperimentConfig& cfg) {
  if (cfg.betas.empty()) throw ConfigError("trace needs betas or beta_grid");
  if (cfg.w_sizes.size() != 1) throw ConfigError("trace needs exactly one latent size in w_sizes");
  const std::size_t m = cfg.w_sizes.front();
  const std::size_t nb = cfg.betas.size(), nr = cfg.restarts;

  struct Run {
    double divergence = 0.0, permuted = 0.0;
    std::vector<double> w_marginal;
  };
  std::vector<Run> runs(nb * nr);
  std::vector<std::optional<Distribution>> best(nb);
  parallel_for(nb, cfg.threads, [&](std::size_t b) {
    const SystemJoint p = build_system(cfg, cfg.betas[b]).joint;
    const SplitFamily family = SplitFamily::cii(p.n(), m);
    EmConfig em = cfg.em_config();
    em.canonical_latent_order = cfg.permute_latent;
    double best_div = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < nr; ++r) {
      Rng rng(cfg.seed, r);
      const Distribution start = random_start(p, family, rng);
      EmResult res = em_run(p, family, start, em);
      Run& run = runs[b * nr + r];
      run.divergence = res.divergence;
      run.w_marginal = res.trace.w_marginal;
      if (cfg.permute_latent) {
        std::vector<std::size_t> perm(m);
        for (std::size_t k = 0; k < m; ++k) perm[k] = m - 1 - k;
        run.permuted = em_run(p, family, permute_latent(start, perm), em).divergence;
      }
      if (res.divergence < best_div) {
        best_div = res.divergence;
        best[b] = visible_marginal(res.minimizer).dist();
      }
    }
  });

  TraceOutcome out;
  CsvTable& t = out.table;
  t.header = {"beta", "restart", "divergence"};
  for (std::size_t k = 0; k < m; ++k) t.header.push_back("w" + std::to_string(k));
  if (cfg.permute_latent) t.header.push_back("divergence_permuted");
  t.header.push_back("segment");
  for (std::size_t b = 0; b < nb; ++b) {
    const bool mark = b > 0 && kl_divergence(*best[b - 1], *best[b]) > cfg.segmentation_threshold;
    if (mark) ++out.segment_marks;
    for (std::size_t r = 0; r < nr; ++r) {
      const Run& run = runs[b * nr + r];
      std::vector<std::string> cells{format_number(cfg.betas[b]), std::to_string(r), format_number(run.divergence)};
      for (double w : run.w_marginal) cells.push_back(format_number(w));
      if (cfg.permute_latent) cells.push_back(format_number(run.permuted));
      cells.push_back(mark ? "1" : "0");
      t.rows.push_back(std::move(cells));
    }
  }
  return out;
}

}  // namespace phi
