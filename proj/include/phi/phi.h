#ifndef PHI_PHI_H
#define PHI_PHI_H

/* C interface to the integrated-information library. Every call returns a
 * phi_status; on failure phi_last_error() describes the problem for the
 * calling thread. Strings handed out by the library are freed with
 * phi_string_free, handles with their own *_free function. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PHI_BUILDING_LIBRARY)
#    define PHI_API __declspec(dllexport)
#  else
#    define PHI_API __declspec(dllimport)
#  endif
#else
#  define PHI_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum phi_status {
  PHI_OK = 0,
  PHI_INVALID_ARGUMENT = 1,
  PHI_DOMAIN_ERROR = 2,
  PHI_PARSE_ERROR = 3,
  PHI_CONFIG_ERROR = 4,
  PHI_IO_ERROR = 5,
  PHI_INTERNAL_ERROR = 6
} phi_status;

typedef struct phi_config phi_config;
typedef struct phi_table phi_table;
typedef struct phi_graph phi_graph;
typedef struct phi_joint phi_joint;

PHI_API const char* phi_version(void);
PHI_API const char* phi_last_error(void);
PHI_API void phi_string_free(char* s);

/* Experiment configuration (key = value text, matrix rows under "V:"). */
PHI_API phi_status phi_config_parse(const char* text, int force, phi_config** out);
PHI_API phi_status phi_config_load(const char* path, int force, phi_config** out);
PHI_API phi_status phi_config_set_seed(phi_config* cfg, uint64_t seed);
PHI_API phi_status phi_config_set_strict(phi_config* cfg, int strict);
PHI_API phi_status phi_config_set_samples(phi_config* cfg, size_t samples);
/* Output path from the config file, or "" when absent. Borrowed pointer. */
PHI_API const char* phi_config_output(const phi_config* cfg);
PHI_API void phi_config_free(phi_config* cfg);

/* Experiments. all_converged / segment_marks may be NULL. */
PHI_API phi_status phi_run_sweep(const phi_config* cfg, phi_table** out, int* all_converged);
PHI_API phi_status phi_run_table1(const phi_config* cfg, phi_table** out);
PHI_API phi_status phi_run_trace(const phi_config* cfg, phi_table** out, size_t* segment_marks);

/* Result tables. Cell and CSV pointers are borrowed from the table. */
PHI_API size_t phi_table_rows(const phi_table* t);
PHI_API size_t phi_table_cols(const phi_table* t);
PHI_API const char* phi_table_header(const phi_table* t, size_t col);
PHI_API const char* phi_table_cell(const phi_table* t, size_t row, size_t col);
PHI_API const char* phi_table_csv(const phi_table* t);
PHI_API void phi_table_free(phi_table* t);

/* Chain mixed graphs in the line format "a -- b", "a -> b", "a <-> b".
 * Vertex sets are comma-separated labels; an empty string is the empty set. */
PHI_API phi_status phi_graph_parse(const char* text, phi_graph** out);
PHI_API phi_status phi_graph_text(const phi_graph* g, char** out);
PHI_API phi_status phi_graph_marginalize(const phi_graph* g, const char* hidden, phi_graph** out);
PHI_API phi_status phi_graph_c_separates(const phi_graph* g, const char* a, const char* b, const char* c, int* result);
PHI_API phi_status phi_graph_cg_separates(const phi_graph* g, const char* a, const char* b, const char* s, int* result);
PHI_API void phi_graph_free(phi_graph* g);

/* System joints over X1..Xn, Y1..Yn in the "axes:" text format. */
PHI_API phi_status phi_joint_parse(const char* text, int renormalize, phi_joint** out);
/* name is one of I, SI, G, CIS, CII. w_size and seed only matter for CII.
 * converged may be NULL. */
PHI_API phi_status phi_joint_measure(const phi_joint* j, const char* name, size_t w_size, uint64_t seed, double* value,
                                     int* converged);
PHI_API void phi_joint_free(phi_joint* j);

#ifdef __cplusplus
}
#endif

#endif
