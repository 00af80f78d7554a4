#include "sparselab/sparselab.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "sparselab/error.hpp"
#include "sparselab/harness.hpp"

struct sparselab_basis {
  sparselab::BallBasis basis;
};

struct sparselab_function {
  sparselab::StepFunction f;
};

struct sparselab_collection {
  sparselab::SparseCollection s;
};

namespace {

using namespace sparselab;

thread_local std::string last_error;

int set_error(int code, const std::string& what) {
  last_error = what;
  return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    last_error.clear();
    return fn();
  } catch (const Error& e) {
    return set_error(static_cast<int>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(SPARSELAB_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(SPARSELAB_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(SPARSELAB_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool cond, const char* what) {
  if (!cond) fail(ErrorCode::invalid_argument, what);
}

json parse_json(const char* text) {
  require(text != nullptr, "null JSON text");
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::parse, std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

extern "C" {

const char* sparselab_last_error(void) { return last_error.c_str(); }

void sparselab_string_free(char* s) { std::free(s); }

int sparselab_basis_create_dyadic(unsigned depth, sparselab_basis** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    require(depth <= 20, "dyadic depth above 20");
    *out = new sparselab_basis{dyadic_basis(depth)};
    return SPARSELAB_OK;
  });
}

int sparselab_basis_from_json(const char* spec_json, const char* base_dir, sparselab_basis** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    const json spec = parse_json(spec_json);
    *out = new sparselab_basis{basis_from_spec(spec, base_dir ? base_dir : "")};
    return SPARSELAB_OK;
  });
}

void sparselab_basis_destroy(sparselab_basis* basis) { delete basis; }

size_t sparselab_basis_size(const sparselab_basis* basis) { return basis ? basis->basis.size() : 0; }

size_t sparselab_basis_cell_count(const sparselab_basis* basis) {
  return basis ? basis->basis.space().cell_count() : 0;
}

int sparselab_basis_to_json(const sparselab_basis* basis, char** out) {
  return guarded([&] {
    require(basis && out, "null argument");
    *out = dup_string(basis_to_json(basis->basis).dump());
    return SPARSELAB_OK;
  });
}

int sparselab_basis_verify(const sparselab_basis* basis, char** report) {
  return guarded([&] {
    require(basis && report, "null argument");
    const AxiomReport axioms = verify_axioms(basis->basis);
    *report = dup_string(axiom_report_to_json(axioms, doubling_constant(basis->basis)).dump());
    return axioms.all_ok() ? SPARSELAB_OK : SPARSELAB_VERIFICATION_FAILED;
  });
}

int sparselab_function_from_json(const sparselab_basis* basis, const char* text, sparselab_function** out) {
  return guarded([&] {
    require(basis && out, "null argument");
    *out = new sparselab_function{function_from_json(basis->basis.space(), parse_json(text))};
    return SPARSELAB_OK;
  });
}

int sparselab_function_random(const sparselab_basis* basis, uint64_t seed, const char* low, const char* high,
                              sparselab_function** out) {
  return guarded([&] {
    require(basis && low && high && out, "null argument");
    const ValueRange range{parse_rational(low), parse_rational(high)};
    *out = new sparselab_function{random_step_function(basis->basis.space(), seed, range)};
    return SPARSELAB_OK;
  });
}

void sparselab_function_destroy(sparselab_function* f) { delete f; }

int sparselab_function_to_json(const sparselab_basis* basis, const sparselab_function* f, char** out) {
  return guarded([&] {
    require(basis && f && out, "null argument");
    const CellSpace& space = basis->basis.space();
    *out = dup_string(function_to_json(space, space.migrate(f->f)).dump());
    return SPARSELAB_OK;
  });
}

int sparselab_collection_from_json(const sparselab_basis* basis, const char* text, sparselab_collection** out) {
  return guarded([&] {
    require(basis && out, "null argument");
    *out = new sparselab_collection{collection_from_json(basis->basis, parse_json(text))};
    return SPARSELAB_OK;
  });
}

void sparselab_collection_destroy(sparselab_collection* s) { delete s; }

int sparselab_collection_verify(sparselab_basis* basis, const sparselab_collection* s, char** report) {
  return guarded([&] {
    require(basis && s && report, "null argument");
    const SparsenessResult result = verify_sparseness(basis->basis, s->s);
    *report = dup_string(sparseness_to_json(basis->basis.space(), result).dump());
    return result.feasible ? SPARSELAB_OK : SPARSELAB_VERIFICATION_FAILED;
  });
}

int sparselab_apply(const sparselab_basis* basis, const char* op, const sparselab_collection* s,
                    const sparselab_function* f, unsigned r, char** out) {
  return guarded([&] {
    require(basis && op && f && out, "null argument");
    require(r >= 1, "r must be at least 1");
    const BallBasis& b = basis->basis;
    const StepFunction fn = b.space().migrate(f->f);
    const std::string name = op;
    RadicalFunction values = [&] {
      if (name == "maximal") return maximal_function(b, fn, r);
      require(s != nullptr, "sparse operators need a collection");
      if (name == "sparse") return apply_sparse(b, s->s, fn, r);
      if (name == "strong") return apply_strong_sparse(b, s->s, fn, r);
      fail(ErrorCode::invalid_argument, "unknown operator '" + name + "'");
    }();
    json j = radical_function_to_json(b.space(), values);
    j["operator"] = name;
    *out = dup_string(j.dump());
    return SPARSELAB_OK;
  });
}

int sparselab_flatten(sparselab_basis* basis, const sparselab_function* f, const char* lambda, unsigned r,
                      const char* delta, char** report) {
  return guarded([&] {
    require(basis && f && lambda && report, "null argument");
    require(r >= 1, "r must be at least 1");
    std::optional<Rational> d;
    if (delta) d = parse_rational(delta);
    const FlatteningResult result = flatten(basis->basis, f->f, parse_rational(lambda), r, d);
    const FlatteningReport check = verify_flattening(basis->basis, f->f, result);
    json j = flattening_to_json(basis->basis, result);
    j["check"] = flattening_report_to_json(check);
    const bool ok = check.level_set_covered && check.bounded && check.flattened_matches && check.domination_finite;
    j["ok"] = ok;
    *report = dup_string(j.dump());
    return ok ? SPARSELAB_OK : SPARSELAB_VERIFICATION_FAILED;
  });
}

int sparselab_estimate(const char* config_json, const char* base_dir, uint64_t seed, int has_seed, int format,
                       char** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    require(format == SPARSELAB_FORMAT_JSON || format == SPARSELAB_FORMAT_CSV, "unknown format");
    ExperimentConfig config = config_from_json(parse_json(config_json), base_dir ? base_dir : "");
    if (has_seed) config.seed = seed;
    const ConstantReport report = run_estimate(config);

    std::ostringstream csv;
    write_csv(csv, report);
    const std::string json_text = report_to_json(report).dump(2) + "\n";
    auto write_file = [](const std::filesystem::path& path, const std::string& text) {
      std::ofstream file(path, std::ios::binary);
      if (!file) fail(ErrorCode::invalid_argument, "cannot write '" + path.string() + "'");
      file << text;
    };
    if (config.csv_out) write_file(*config.csv_out, csv.str());
    if (config.json_out) write_file(*config.json_out, json_text);
    *out = dup_string(format == SPARSELAB_FORMAT_CSV ? csv.str() : json_text);
    return SPARSELAB_OK;
  });
}

}  // extern "C"
