// Command-line front end. Talks to the library only through the C interface.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "phi/phi.h"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;
constexpr int kNotConverged = 3;

struct ConfigDeleter {
  void operator()(phi_config* c) const { phi_config_free(c); }
};
struct TableDeleter {
  void operator()(phi_table* t) const { phi_table_free(t); }
};
struct GraphDeleter {
  void operator()(phi_graph* g) const { phi_graph_free(g); }
};
struct JointDeleter {
  void operator()(phi_joint* j) const { phi_joint_free(j); }
};
using ConfigPtr = std::unique_ptr<phi_config, ConfigDeleter>;
using TablePtr = std::unique_ptr<phi_table, TableDeleter>;
using GraphPtr = std::unique_ptr<phi_graph, GraphDeleter>;
using JointPtr = std::unique_ptr<phi_joint, JointDeleter>;

int report(phi_status s) {
  std::cerr << "phi: " << phi_last_error() << "\n";
  switch (s) {
    case PHI_CONFIG_ERROR:
    case PHI_PARSE_ERROR:
    case PHI_IO_ERROR:
    case PHI_INVALID_ARGUMENT:
      return kConfigError;
    default:
      return kFailure;
  }
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::stringstream buf;
  buf << in.rdbuf();
  out = buf.str();
  return true;
}

// Writes to `path`, or stdout when it is empty or "-".
bool emit(const std::string& path, const char* text) {
  if (path.empty() || path == "-") {
    std::fwrite(text, 1, std::char_traits<char>::length(text), stdout);
    return std::fflush(stdout) == 0;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

struct RunOptions {
  std::string config;
  std::string out;
  long long seed = -1;
  bool force = false;
  bool strict = false;
  std::size_t samples = 0;
};

int load(const RunOptions& o, ConfigPtr& cfg) {
  phi_config* raw = nullptr;
  if (phi_status s = phi_config_load(o.config.c_str(), o.force ? 1 : 0, &raw); s != PHI_OK) return report(s);
  cfg.reset(raw);
  if (o.seed >= 0) phi_config_set_seed(cfg.get(), static_cast<uint64_t>(o.seed));
  if (o.strict) phi_config_set_strict(cfg.get(), 1);
  if (o.samples > 0) phi_config_set_samples(cfg.get(), o.samples);
  return kOk;
}

int finish(const RunOptions& o, const phi_config* cfg, const phi_table* table) {
  const std::string path = o.out.empty() ? phi_config_output(cfg) : o.out;
  if (!emit(path, phi_table_csv(table))) {
    std::cerr << "phi: cannot write " << path << "\n";
    return kFailure;
  }
  return kOk;
}

int cmd_sweep(const RunOptions& o) {
  ConfigPtr cfg;
  if (int rc = load(o, cfg); rc != kOk) return rc;
  phi_table* raw = nullptr;
  int converged = 1;
  if (phi_status s = phi_run_sweep(cfg.get(), &raw, &converged); s != PHI_OK) return report(s);
  TablePtr table(raw);
  if (int rc = finish(o, cfg.get(), table.get()); rc != kOk) return rc;
  if (!converged) {
    std::cerr << "phi: some measures did not converge (see flags column)\n";
    if (o.strict) return kNotConverged;
  }
  return kOk;
}

int cmd_table1(const RunOptions& o) {
  ConfigPtr cfg;
  if (int rc = load(o, cfg); rc != kOk) return rc;
  phi_table* raw = nullptr;
  if (phi_status s = phi_run_table1(cfg.get(), &raw); s != PHI_OK) return report(s);
  TablePtr table(raw);
  return finish(o, cfg.get(), table.get());
}

int cmd_trace(const RunOptions& o) {
  ConfigPtr cfg;
  if (int rc = load(o, cfg); rc != kOk) return rc;
  phi_table* raw = nullptr;
  std::size_t marks = 0;
  if (phi_status s = phi_run_trace(cfg.get(), &raw, &marks); s != PHI_OK) return report(s);
  TablePtr table(raw);
  std::cerr << "segment marks: " << marks << "\n";
  return finish(o, cfg.get(), table.get());
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_bar(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, '|')) parts.push_back(trim(item));
  if (!s.empty() && s.back() == '|') parts.emplace_back();
  return parts;
}

// The graph file holds edges plus query lines starting with '?':
//   ? marginalize h1,h2
//   ? csep A | B | C      (c-separation on the mixed graph)
//   ? cgsep A | B | S     (chain-graph separation)
int cmd_graph(const std::string& path) {
  std::string text;
  if (!read_file(path, text)) {
    std::cerr << "phi: cannot open " << path << "\n";
    return kConfigError;
  }
  phi_graph* raw = nullptr;
  if (phi_status s = phi_graph_parse(text.c_str(), &raw); s != PHI_OK) return report(s);
  GraphPtr graph(raw);

  std::stringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    line = trim(line);
    if (line.empty() || line[0] != '?') continue;
    std::stringstream q(line.substr(1));
    std::string verb;
    q >> verb;
    std::string rest;
    std::getline(q, rest);
    rest = trim(rest);
    std::cout << "? " << verb << (rest.empty() ? "" : " ") << rest << "\n";
    if (verb == "marginalize") {
      phi_graph* m = nullptr;
      if (phi_status s = phi_graph_marginalize(graph.get(), rest.c_str(), &m); s != PHI_OK) return report(s);
      GraphPtr marginal(m);
      char* out = nullptr;
      if (phi_status s = phi_graph_text(marginal.get(), &out); s != PHI_OK) return report(s);
      std::cout << out;
      phi_string_free(out);
    } else if (verb == "csep" || verb == "cgsep") {
      const auto parts = split_bar(rest);
      if (parts.size() != 3) {
        std::cerr << "phi: query needs 'A | B | C', got '" << rest << "'\n";
        return kConfigError;
      }
      int result = 0;
      const auto fn = verb == "csep" ? phi_graph_c_separates : phi_graph_cg_separates;
      if (phi_status s = fn(graph.get(), parts[0].c_str(), parts[1].c_str(), parts[2].c_str(), &result); s != PHI_OK)
        return report(s);
      std::cout << (result ? "true" : "false") << "\n";
    } else {
      std::cerr << "phi: unknown query '" << verb << "'\n";
      return kConfigError;
    }
  }
  return kOk;
}

int cmd_measures(const std::string& path, bool renormalize, const std::vector<std::string>& names, std::size_t w,
                 long long seed) {
  std::string text;
  if (!read_file(path, text)) {
    std::cerr << "phi: cannot open " << path << "\n";
    return kConfigError;
  }
  phi_joint* raw = nullptr;
  if (phi_status s = phi_joint_parse(text.c_str(), renormalize ? 1 : 0, &raw); s != PHI_OK) return report(s);
  JointPtr joint(raw);
  for (const auto& name : names) {
    double value = 0.0;
    int converged = 1;
    if (phi_status s = phi_joint_measure(joint.get(), name.c_str(), w, seed < 0 ? 0 : static_cast<uint64_t>(seed),
                                         &value, &converged);
        s != PHI_OK)
      return report(s);
    std::printf("phi_%s%s = %.17g%s\n", name.c_str(), name == "CII" ? ("_w" + std::to_string(w)).c_str() : "", value,
                converged ? "" : "  # not converged");
  }
  return kOk;
}

void add_run_options(CLI::App* cmd, RunOptions& o, bool with_samples) {
  cmd->add_option("--config", o.config, "experiment config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "CSV destination (default: config output, else stdout)");
  cmd->add_option("--seed", o.seed, "override the config seed")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--force", o.force, "allow CIS for more than three nodes");
  cmd->add_flag("--strict", o.strict, "exit with status 3 if any solver fails to converge");
  if (with_samples) cmd->add_option("--samples", o.samples, "override the sample count")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integrated information measures for discrete stochastic systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", phi_version());

  RunOptions sweep_opts, table1_opts, trace_opts;
  auto* sweep = app.add_subcommand("sweep", "β sweep of the configured measures");
  add_run_options(sweep, sweep_opts, false);
  auto* table1 = app.add_subcommand("table1", "divergence statistics from N_CIS samples to N_CII");
  add_run_options(table1, table1_opts, true);
  auto* trace = app.add_subcommand("trace", "per-restart em divergences with segmentation marks");
  add_run_options(trace, trace_opts, false);

  std::string graph_file;
  auto* graph = app.add_subcommand("graph", "answer marginalization and separation queries");
  graph->add_option("file", graph_file, "graph file with '?' query lines")->required();

  std::string dist_file;
  bool renormalize = false;
  std::vector<std::string> names{"I", "SI", "G", "CIS", "CII"};
  std::size_t w = 2;
  long long seed = 0;
  auto* measures = app.add_subcommand("measures", "evaluate measures on a joint distribution file");
  measures->add_option("file", dist_file, "distribution in the axes: text format")->required();
  measures->add_flag("--renormalize", renormalize, "floor zeros and renormalize");
  measures->add_option("--measures", names, "subset of I, SI, G, CIS, CII")->delimiter(',');
  measures->add_option("--w", w, "latent size for CII")->check(CLI::PositiveNumber);
  measures->add_option("--seed", seed, "em seed")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  if (sweep->parsed()) return cmd_sweep(sweep_opts);
  if (table1->parsed()) return cmd_table1(table1_opts);
  if (trace->parsed()) return cmd_trace(trace_opts);
  if (graph->parsed()) return cmd_graph(graph_file);
  return cmd_measures(dist_file, renormalize, names, w, seed);
}
