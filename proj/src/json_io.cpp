/**
 * @file json_io.cpp
 * @brief Implementation of the deterministic JSON writer and the parsing helpers.
 */

#include "specsurg/json_io.hpp"

#include <fstream>
#include <sstream>

namespace specsurg {

void JsonWriter::pre_value() {
  if (pending_key_) {
    pending_key_ = false;
    return;  // comma was handled when the key was emitted
  }
  if (!first_stack_.empty()) {
    if (!first_stack_.back()) out_ += ',';
    first_stack_.back() = false;
  }
}

void JsonWriter::begin_object() {
  pre_value();
  out_ += '{';
  first_stack_.push_back(true);
}

void JsonWriter::end_object() {
  out_ += '}';
  first_stack_.pop_back();
}

void JsonWriter::begin_array() {
  pre_value();
  out_ += '[';
  first_stack_.push_back(true);
}

void JsonWriter::end_array() {
  out_ += ']';
  first_stack_.pop_back();
}

void JsonWriter::key(const std::string& name) {
  if (!first_stack_.empty()) {
    if (!first_stack_.back()) out_ += ',';
    first_stack_.back() = false;
  }
  out_ += '"';
  out_ += name;  // keys are plain identifiers; no escaping needed
  out_ += "\":";
  pending_key_ = true;
}

void JsonWriter::value(double v) {
  pre_value();
  out_ += fmt17(v);
}

void JsonWriter::value(int v) {
  pre_value();
  out_ += std::to_string(v);
}

void JsonWriter::value(bool v) {
  pre_value();
  out_ += v ? "true" : "false";
}

void JsonWriter::value(const std::string& v) {
  pre_value();
  out_ += '"';
  for (char c : v) {
    switch (c) {
      case '"': out_ += "\\\""; break;
      case '\\': out_ += "\\\\"; break;
      case '\n': out_ += "\\n"; break;
      case '\t': out_ += "\\t"; break;
      default: out_ += c;
    }
  }
  out_ += '"';
}

void JsonWriter::value_raw(const char* literal) {
  pre_value();
  out_ += literal;
}

void JsonWriter::value_cmat(const CMat& M) {
  begin_array();
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      begin_array();
      value(M(i, j).real());
      value(M(i, j).imag());
      end_array();
    }
  end_array();
}

CMat read_cmat(const nlohmann::json& j, int n_rows, int n_cols, const std::string& what) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(n_rows) * n_cols)
    throw ValidationError(what + ": expected flat array of " +
                          std::to_string(n_rows * n_cols) + " [re, im] pairs");
  CMat M(n_rows, n_cols);
  std::size_t idx = 0;
  for (int r = 0; r < n_rows; ++r)
    for (int c = 0; c < n_cols; ++c, ++idx) {
      const auto& e = j[idx];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw ValidationError(what + ": entry " + std::to_string(idx) +
                              " is not an [re, im] pair");
      M(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
    }
  return M;
}

double read_double(const nlohmann::json& j, const std::string& what) {
  if (!j.is_number()) throw ValidationError(what + ": expected a number");
  return j.get<double>();
}

int read_int(const nlohmann::json& j, const std::string& what) {
  if (!j.is_number_integer()) throw ValidationError(what + ": expected an integer");
  return j.get<int>();
}

std::string slurp_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open file for writing: " + path);
  out << content;
  if (!out) throw ValidationError("write failed: " + path);
}

nlohmann::json parse_json(const std::string& text, const std::string& what) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ValidationError(what + ": malformed JSON");
  return j;
}

}  // namespace specsurg
