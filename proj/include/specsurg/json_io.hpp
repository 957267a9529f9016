#pragma once
/**
 * @file json_io.hpp
 * @brief Deterministic JSON emission and parsing helpers.
 *
 * Writing goes through an order-preserving streaming writer that prints every number
 * with 17 significant digits, so identical inputs produce byte-identical files and
 * doubles round-trip exactly. Reading uses a standard JSON parser; complex matrices
 * are stored as flat row-major lists of [re, im] pairs.
 */

#include <string>
#include <vector>

#include <json.hpp>

#include "specsurg/types.hpp"

namespace specsurg {

/// Streaming JSON writer preserving insertion order, with automatic comma placement.
class JsonWriter {
 public:
  void begin_object();
  void end_object();
  void begin_array();
  void end_array();
  /// Introduce a key inside an object; follow with exactly one value call.
  void key(const std::string& name);
  void value(double v);
  void value(int v);
  void value(bool v);
  void value(const std::string& v);
  void value_raw(const char* literal);  ///< e.g. "null"

  /// Flat row-major [re, im] pair array for a complex matrix.
  void value_cmat(const CMat& M);

  const std::string& str() const { return out_; }

 private:
  void pre_value();
  std::string out_;
  std::vector<bool> first_stack_;  // per open container: is the next element the first?
  bool pending_key_ = false;
};

/// Parse a complex n_rows×n_cols matrix from a flat row-major [re, im] pair array.
CMat read_cmat(const nlohmann::json& j, int n_rows, int n_cols, const std::string& what);

/// Parse with schema errors reported as ValidationError mentioning `what`.
double read_double(const nlohmann::json& j, const std::string& what);
int read_int(const nlohmann::json& j, const std::string& what);

/// Whole-file helpers; I/O failures raise ValidationError.
std::string slurp_file(const std::string& path);
void spit_file(const std::string& path, const std::string& content);
nlohmann::json parse_json(const std::string& text, const std::string& what);

}  // namespace specsurg
