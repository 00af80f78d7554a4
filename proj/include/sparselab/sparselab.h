#ifndef SPARSELAB_H
#define SPARSELAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(SPARSELAB_BUILDING_LIBRARY)
#define SPARSELAB_API __attribute__((visibility("default")))
#else
#define SPARSELAB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Return codes. Nonzero codes leave a message in sparselab_last_error(). */
enum {
  SPARSELAB_OK = 0,
  SPARSELAB_INVALID_ARGUMENT = 1,
  SPARSELAB_STALE_GENERATION = 2,
  SPARSELAB_PRECONDITION = 3,
  SPARSELAB_PACKING_VIOLATION = 4,
  SPARSELAB_PARSE = 5,
  SPARSELAB_VERIFICATION_FAILED = 6,
  SPARSELAB_INTERNAL = 7
};

enum { SPARSELAB_FORMAT_JSON = 0, SPARSELAB_FORMAT_CSV = 1 };

typedef struct sparselab_basis sparselab_basis;
typedef struct sparselab_function sparselab_function;
typedef struct sparselab_collection sparselab_collection;

/* Message for the last failing call on this thread; never NULL. */
SPARSELAB_API const char* sparselab_last_error(void);
/* Releases strings returned through char** out parameters. */
SPARSELAB_API void sparselab_string_free(char* s);

/* Bases. `spec_json` uses the config basis format; `base_dir` (may be NULL)
   resolves relative tree paths. */
SPARSELAB_API int sparselab_basis_create_dyadic(unsigned depth, sparselab_basis** out);
SPARSELAB_API int sparselab_basis_from_json(const char* spec_json, const char* base_dir, sparselab_basis** out);
SPARSELAB_API void sparselab_basis_destroy(sparselab_basis* basis);
SPARSELAB_API size_t sparselab_basis_size(const sparselab_basis* basis);
SPARSELAB_API size_t sparselab_basis_cell_count(const sparselab_basis* basis);
/* Serialized basis (cells, balls, hulls). */
SPARSELAB_API int sparselab_basis_to_json(const sparselab_basis* basis, char** out);
/* Axiom report as JSON; returns SPARSELAB_VERIFICATION_FAILED when an axiom
   fails (the report is still written). */
SPARSELAB_API int sparselab_basis_verify(const sparselab_basis* basis, char** report);

/* Step functions live on the current cells of one basis. */
SPARSELAB_API int sparselab_function_from_json(const sparselab_basis* basis, const char* json, sparselab_function** out);
SPARSELAB_API int sparselab_function_random(const sparselab_basis* basis, uint64_t seed, const char* low,
                                            const char* high, sparselab_function** out);
SPARSELAB_API void sparselab_function_destroy(sparselab_function* f);
SPARSELAB_API int sparselab_function_to_json(const sparselab_basis* basis, const sparselab_function* f, char** out);

SPARSELAB_API int sparselab_collection_from_json(const sparselab_basis* basis, const char* json,
                                                 sparselab_collection** out);
SPARSELAB_API void sparselab_collection_destroy(sparselab_collection* s);
/* Sparseness check. Refines the basis cells when witnesses need interior
   cuts. Returns SPARSELAB_VERIFICATION_FAILED with the violating family in
   the report when the collection is not sparse. */
SPARSELAB_API int sparselab_collection_verify(sparselab_basis* basis, const sparselab_collection* s, char** report);

/* op: "sparse", "strong" or "maximal" ("maximal" ignores s, which may be NULL). */
SPARSELAB_API int sparselab_apply(const sparselab_basis* basis, const char* op, const sparselab_collection* s,
                                  const sparselab_function* f, unsigned r, char** out);

/* Flattening at level `lambda` ("p/q"); `delta` may be NULL. Refines the
   basis cells. The report includes the postcondition check; returns
   SPARSELAB_VERIFICATION_FAILED when a postcondition fails. */
SPARSELAB_API int sparselab_flatten(sparselab_basis* basis, const sparselab_function* f, const char* lambda,
                                    unsigned r, const char* delta, char** report);

/* Runs an experiment config. has_seed overrides the config seed. The output
   is the CSV or JSON report; output paths named in the config are written
   as well. */
SPARSELAB_API int sparselab_estimate(const char* config_json, const char* base_dir, uint64_t seed, int has_seed,
                                     int format, char** out);

#ifdef __cplusplus
}
#endif

#endif
