#include "phi/phi.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "phi/error.hpp"
#include "phi/experiment.hpp"
#include "phi/graph.hpp"
#include "phi/ips.hpp"
#include "phi/measures.hpp"

struct phi_config {
  phi::ExperimentConfig cfg;
};

struct phi_table {
  phi::CsvTable table;
  std::string csv;
};

struct phi_graph {
  phi::ChainMixedGraph g;
};

struct phi_joint {
  phi::SystemJoint joint;
};

namespace {

thread_local std::string last_error;

phi_status fail(phi_status code, const char* what) {
  last_error = what;
  return code;
}

// Maps library exceptions to status codes at the boundary.
template <class F>
phi_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return PHI_OK;
  } catch (const phi::ConfigError& e) {
    return fail(PHI_CONFIG_ERROR, e.what());
  } catch (const phi::ParseError& e) {
    return fail(PHI_PARSE_ERROR, e.what());
  } catch (const phi::DomainError& e) {
    return fail(PHI_DOMAIN_ERROR, e.what());
  } catch (const phi::InvalidArgument& e) {
    return fail(PHI_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(PHI_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(PHI_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(PHI_INTERNAL_ERROR, "unknown error");
  }
}

#define PHI_REQUIRE(cond)                                                              \
  do {                                                                                 \
    if (!(cond)) return fail(PHI_INVALID_ARGUMENT, "null argument: " #cond);            \
  } while (0)

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

phi::VertexSet label_set(const phi::ChainMixedGraph& g, const char* text) {
  std::vector<std::string> labels;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    labels.push_back(item.substr(b, e - b + 1));
  }
  return g.indices(labels);
}

phi_table* make_table(phi::CsvTable t) {
  auto* out = new phi_table{std::move(t), {}};
  out->csv = out->table.to_csv();
  return out;
}

}  // namespace

extern "C" {

const char* phi_version(void) { return "1.0.0"; }

const char* phi_last_error(void) { return last_error.c_str(); }

void phi_string_free(char* s) { std::free(s); }

phi_status phi_config_parse(const char* text, int force, phi_config** out) {
  PHI_REQUIRE(text && out);
  *out = nullptr;
  return guarded([&] { *out = new phi_config{phi::parse_config(text, force != 0)}; });
}

phi_status phi_config_load(const char* path, int force, phi_config** out) {
  PHI_REQUIRE(path && out);
  *out = nullptr;
  std::ifstream in(path, std::ios::binary);
  if (!in) return fail(PHI_IO_ERROR, (std::string("cannot open ") + path).c_str());
  std::stringstream buf;
  buf << in.rdbuf();
  return phi_config_parse(buf.str().c_str(), force, out);
}

phi_status phi_config_set_seed(phi_config* cfg, uint64_t seed) {
  PHI_REQUIRE(cfg);
  cfg->cfg.seed = seed;
  return PHI_OK;
}

phi_status phi_config_set_strict(phi_config* cfg, int strict) {
  PHI_REQUIRE(cfg);
  cfg->cfg.strict = strict != 0;
  return PHI_OK;
}

phi_status phi_config_set_samples(phi_config* cfg, size_t samples) {
  PHI_REQUIRE(cfg);
  if (samples == 0) return fail(PHI_INVALID_ARGUMENT, "samples must be positive");
  cfg->cfg.samples = samples;
  return PHI_OK;
}

const char* phi_config_output(const phi_config* cfg) { return cfg ? cfg->cfg.output.c_str() : ""; }

void phi_config_free(phi_config* cfg) { delete cfg; }

phi_status phi_run_sweep(const phi_config* cfg, phi_table** out, int* all_converged) {
  PHI_REQUIRE(cfg && out);
  *out = nullptr;
  return guarded([&] {
    auto res = phi::run_sweep(cfg->cfg);
    if (all_converged) *all_converged = res.all_converged ? 1 : 0;
    *out = make_table(std::move(res.table));
  });
}

phi_status phi_run_table1(const phi_config* cfg, phi_table** out) {
  PHI_REQUIRE(cfg && out);
  *out = nullptr;
  return guarded([&] { *out = make_table(phi::run_table1(cfg->cfg).table); });
}

phi_status phi_run_trace(const phi_config* cfg, phi_table** out, size_t* segment_marks) {
  PHI_REQUIRE(cfg && out);
  *out = nullptr;
  return guarded([&] {
    auto res = phi::run_localmin_trace(cfg->cfg);
    if (segment_marks) *segment_marks = res.segment_marks;
    *out = make_table(std::move(res.table));
  });
}

size_t phi_table_rows(const phi_table* t) { return t ? t->table.rows.size() : 0; }

size_t phi_table_cols(const phi_table* t) { return t ? t->table.header.size() : 0; }

const char* phi_table_header(const phi_table* t, size_t col) {
  if (!t || col >= t->table.header.size()) return nullptr;
  return t->table.header[col].c_str();
}

const char* phi_table_cell(const phi_table* t, size_t row, size_t col) {
  if (!t || row >= t->table.rows.size() || col >= t->table.rows[row].size()) return nullptr;
  return t->table.rows[row][col].c_str();
}

const char* phi_table_csv(const phi_table* t) { return t ? t->csv.c_str() : nullptr; }

void phi_table_free(phi_table* t) { delete t; }

phi_status phi_graph_parse(const char* text, phi_graph** out) {
  PHI_REQUIRE(text && out);
  *out = nullptr;
  return guarded([&] { *out = new phi_graph{phi::ChainMixedGraph::parse(text)}; });
}

phi_status phi_graph_text(const phi_graph* g, char** out) {
  PHI_REQUIRE(g && out);
  *out = nullptr;
  return guarded([&] { *out = dup_string(g->g.to_text()); });
}

phi_status phi_graph_marginalize(const phi_graph* g, const char* hidden, phi_graph** out) {
  PHI_REQUIRE(g && hidden && out);
  *out = nullptr;
  return guarded([&] { *out = new phi_graph{phi::marginalize_cmg(g->g, label_set(g->g, hidden))}; });
}

phi_status phi_graph_c_separates(const phi_graph* g, const char* a, const char* b, const char* c, int* result) {
  PHI_REQUIRE(g && a && b && c && result);
  return guarded([&] {
    *result = phi::c_separates(g->g, label_set(g->g, a), label_set(g->g, b), label_set(g->g, c)) ? 1 : 0;
  });
}

phi_status phi_graph_cg_separates(const phi_graph* g, const char* a, const char* b, const char* s, int* result) {
  PHI_REQUIRE(g && a && b && s && result);
  return guarded([&] {
    *result = phi::cg_separates(g->g, label_set(g->g, a), label_set(g->g, b), label_set(g->g, s)) ? 1 : 0;
  });
}

void phi_graph_free(phi_graph* g) { delete g; }

phi_status phi_joint_parse(const char* text, int renormalize, phi_joint** out) {
  PHI_REQUIRE(text && out);
  *out = nullptr;
  return guarded([&] { *out = new phi_joint{phi::SystemJoint(phi::parse_distribution(text, renormalize != 0))}; });
}

phi_status phi_joint_measure(const phi_joint* j, const char* name, size_t w_size, uint64_t seed, double* value,
                             int* converged) {
  PHI_REQUIRE(j && name && value);
  return guarded([&] {
    const std::string m = name;
    phi::MeasureReport rep;
    if (m == "I") {
      rep = phi::phi_I(j->joint);
    } else if (m == "SI") {
      rep = phi::phi_SI(j->joint);
    } else if (m == "G") {
      rep = phi::phi_G(j->joint);
    } else if (m == "CIS") {
      rep = phi::phi_CIS(j->joint);
    } else if (m == "CII") {
      if (w_size == 0) throw phi::InvalidArgument("CII needs a latent size of at least 1");
      phi::EmConfig em;
      em.seed = seed;
      rep = phi::phi_CII(j->joint, phi::SplitFamily::cii(j->joint.n(), w_size), em).report;
    } else {
      throw phi::InvalidArgument("unknown measure '" + m + "'");
    }
    *value = rep.value;
    if (converged) *converged = rep.converged ? 1 : 0;
  });
}

void phi_joint_free(phi_joint* j) { delete j; }

}  // extern "C"
