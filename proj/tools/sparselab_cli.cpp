// sparselab command line: thin layer over the C API.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "sparselab/sparselab.h"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr int exit_ok = 0;
constexpr int exit_failed = 1;
constexpr int exit_usage = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "json";
};

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct basis_deleter {
  void operator()(sparselab_basis* b) const { sparselab_basis_destroy(b); }
};
struct function_deleter {
  void operator()(sparselab_function* f) const { sparselab_function_destroy(f); }
};
struct collection_deleter {
  void operator()(sparselab_collection* s) const { sparselab_collection_destroy(s); }
};
using basis_ptr = std::unique_ptr<sparselab_basis, basis_deleter>;
using function_ptr = std::unique_ptr<sparselab_function, function_deleter>;
using collection_ptr = std::unique_ptr<sparselab_collection, collection_deleter>;

// Error from a C call. Bad input is a usage error; anything else is reported
// as a failure with the message on stdout.
struct ApiError {
  int code;
  std::string message;
};

void check(int code) {
  if (code != SPARSELAB_OK) throw ApiError{code, sparselab_last_error()};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  sparselab_string_free(s);
  return out;
}

json load_config(const Options& opt) {
  std::ifstream in(opt.config);
  if (!in) throw Usage("cannot read config '" + opt.config + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Usage(std::string("config is not valid JSON: ") + e.what());
  }
}

std::string base_dir(const Options& opt) { return fs::absolute(opt.config).parent_path().string(); }

const json& field(const json& config, const char* key) {
  if (!config.is_object() || !config.contains(key)) throw Usage(std::string("config lacks '") + key + "'");
  return config.at(key);
}

basis_ptr load_basis(const json& config, const Options& opt) {
  // Either a bare basis spec or an object with a "basis" member.
  const json& spec = config.contains("basis") ? config.at("basis") : config;
  sparselab_basis* b = nullptr;
  check(sparselab_basis_from_json(spec.dump().c_str(), base_dir(opt).c_str(), &b));
  return basis_ptr(b);
}

std::string rational_text(const json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

function_ptr load_function(const sparselab_basis* basis, const json& config, const Options& opt) {
  const json& spec = field(config, "function");
  sparselab_function* f = nullptr;
  if (spec.contains("random")) {
    const json& range = spec.at("random");
    const std::string low = range.contains("low") ? rational_text(range.at("low")) : "0";
    const std::string high = range.contains("high") ? rational_text(range.at("high")) : "4";
    check(sparselab_function_random(basis, opt.seed.value_or(0), low.c_str(), high.c_str(), &f));
  } else {
    check(sparselab_function_from_json(basis, spec.dump().c_str(), &f));
  }
  return function_ptr(f);
}

collection_ptr load_collection(const sparselab_basis* basis, const json& config) {
  sparselab_collection* s = nullptr;
  check(sparselab_collection_from_json(basis, field(config, "collection").dump().c_str(), &s));
  return collection_ptr(s);
}

unsigned read_r(const json& config) {
  if (!config.contains("r")) return 1;
  if (!config.at("r").is_number_unsigned()) throw Usage("'r' must be a positive integer");
  return config.at("r").get<unsigned>();
}

void emit(const Options& opt, const std::string& text) {
  std::string body = text;
  if (body.empty() || body.back() != '\n') body += '\n';
  if (opt.out.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream file(opt.out, std::ios::binary);
  if (!file) throw Usage("cannot write '" + opt.out + "'");
  file << body;
}

void require_json_format(const Options& opt) {
  if (opt.format != "json") throw Usage("this command only writes JSON");
}

int finish(const Options& opt, int code, char* report) {
  const std::string text = take(report);
  if (code == SPARSELAB_VERIFICATION_FAILED) {
    // The failure witness always goes to stdout.
    std::cout << text << '\n';
    if (!opt.out.empty()) emit(opt, text);
    return exit_failed;
  }
  check(code);
  emit(opt, text);
  return exit_ok;
}

int cmd_verify_basis(const Options& opt) {
  require_json_format(opt);
  const basis_ptr basis = load_basis(load_config(opt), opt);
  char* report = nullptr;
  const int code = sparselab_basis_verify(basis.get(), &report);
  return finish(opt, code, report);
}

int cmd_verify_sparse(const Options& opt) {
  require_json_format(opt);
  const json config = load_config(opt);
  const basis_ptr basis = load_basis(config, opt);
  const collection_ptr s = load_collection(basis.get(), config);
  char* report = nullptr;
  const int code = sparselab_collection_verify(basis.get(), s.get(), &report);
  return finish(opt, code, report);
}

int cmd_flatten(const Options& opt) {
  require_json_format(opt);
  const json config = load_config(opt);
  const basis_ptr basis = load_basis(config, opt);
  const function_ptr f = load_function(basis.get(), config, opt);
  const std::string lambda = rational_text(field(config, "lambda"));
  std::optional<std::string> delta;
  if (config.contains("delta") && !config.at("delta").is_null()) delta = rational_text(config.at("delta"));
  char* report = nullptr;
  const int code = sparselab_flatten(basis.get(), f.get(), lambda.c_str(), read_r(config),
                                     delta ? delta->c_str() : nullptr, &report);
  return finish(opt, code, report);
}

int cmd_apply(const Options& opt) {
  const json config = load_config(opt);
  const basis_ptr basis = load_basis(config, opt);
  const function_ptr f = load_function(basis.get(), config, opt);
  const std::string op = config.contains("operator") ? config.at("operator").get<std::string>() : "strong";
  collection_ptr s;
  if (op != "maximal") s = load_collection(basis.get(), config);
  char* out = nullptr;
  check(sparselab_apply(basis.get(), op.c_str(), s.get(), f.get(), read_r(config), &out));
  const std::string text = take(out);
  if (opt.format == "json") {
    emit(opt, text);
    return exit_ok;
  }
  std::string csv = "position,value,lower,upper,exact\n";
  const json result = json::parse(text);
  std::size_t position = 0;
  for (const auto& cell : result.at("cells")) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu,%.12g,%.17g,%.17g,", position++, cell.at("value").get<double>(),
                  cell.at("lower").get<double>(), cell.at("upper").get<double>());
    csv += buf;
    if (!cell.at("exact").is_null()) csv += cell.at("exact").get<std::string>();
    csv += '\n';
  }
  emit(opt, csv);
  return exit_ok;
}

int cmd_estimate(const Options& opt) {
  const json config = load_config(opt);
  char* out = nullptr;
  const int format = opt.format == "csv" ? SPARSELAB_FORMAT_CSV : SPARSELAB_FORMAT_JSON;
  check(sparselab_estimate(config.dump().c_str(), base_dir(opt).c_str(), opt.seed.value_or(0), opt.seed.has_value(),
                           format, &out));
  emit(opt, take(out));
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse operators on finite ball-bases"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  app.add_option("--config", opt.config, "JSON config file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Seed (overrides the config seed)");
  app.add_option("--out", opt.out, "Write the result here instead of stdout");
  app.add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Command commands[] = {
      {"verify-basis", "Check the ball-basis axioms and report K and the doubling constant", cmd_verify_basis},
      {"verify-sparse", "Decide sparseness of a collection; prints witnesses or a violating family",
       cmd_verify_sparse},
      {"flatten", "Flatten a function at level lambda and check the postconditions", cmd_flatten},
      {"apply", "Evaluate a sparse operator or the maximal function", cmd_apply},
      {"estimate", "Estimate weak or strong constants over random trials", cmd_estimate},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }
  if (*seed_opt) opt.seed = seed;
  if (opt.config.empty()) {
    std::cerr << "error: --config is required\n";
    return exit_usage;
  }

  for (const auto& c : commands) {
    if (!app.got_subcommand(c.name)) continue;
    try {
      return c.run(opt);
    } catch (const Usage& e) {
      std::cerr << "error: " << e.what() << '\n';
      return exit_usage;
    } catch (const ApiError& e) {
      if (e.code == SPARSELAB_PARSE || e.code == SPARSELAB_INVALID_ARGUMENT) {
        std::cerr << "error: " << e.message << '\n';
        return exit_usage;
      }
      std::cout << json{{"error", e.message}, {"code", e.code}}.dump() << '\n';
      return exit_failed;
    } catch (const json::exception& e) {
      std::cerr << "error: malformed config: " << e.what() << '\n';
      return exit_usage;
    }
  }
  return exit_usage;
}
