#include "evagg/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace evagg {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, const std::string& what, int line_no) {
  const std::string t = trim(field);
  if (t.empty())
    throw ValidationError("line " + std::to_string(line_no) + ": missing " + what);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ValidationError("line " + std::to_string(line_no) + ": bad " + what + " '" + t + "'");
  }
  if (used != t.size())
    throw ValidationError("line " + std::to_string(line_no) + ": bad " + what + " '" + t + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

RawPool read_pool_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("study csv is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || trim(header[0]) != "id" || trim(header[1]) != "estimate" ||
      trim(header[2]) != "se")
    throw ValidationError("study csv header must start with id,estimate,se");
  RawPool raw;
  for (std::size_t j = 3; j < header.size(); ++j) {
    const std::string name = trim(header[j]);
    if (name.empty()) throw ValidationError("study csv header has an empty covariate name");
    raw.covariate_names.push_back(name);
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    Study s;
    s.id = trim(fields[0]);
    s.estimate = parse_double(fields[1], "estimate", line_no);
    s.se = parse_double(fields[2], "se", line_no);
    for (std::size_t j = 3; j < fields.size(); ++j)
      s.covariates.push_back(
          parse_double(fields[j], "covariate " + raw.covariate_names[j - 3], line_no));
    raw.studies.push_back(std::move(s));
  }
  return raw;
}

RawPool read_pool_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open study csv: " + path);
  return read_pool_csv(in);
}

StudyPool load_pool(const RawPool& raw, const std::vector<std::string>& standardize,
                    bool standardize_all) {
  StudyPool pool(raw.studies, raw.covariate_names);
  if (standardize_all) return pool.standardized_all();
  if (!standardize.empty()) return pool.standardized(standardize);
  return pool;
}

void write_pool_csv(const StudyPool& pool, std::ostream& out) {
  out << "id,estimate,se";
  for (const auto& name : pool.covariate_names()) out << ',' << name;
  out << '\n';
  for (const Study& s : pool.studies()) {
    out << s.id << ',' << format_double(s.estimate) << ',' << format_double(s.se);
    for (double v : s.covariates) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_weights_csv(const StudyPool& pool, const WeightVector& w, std::ostream& out) {
  out << "id,weight\n";
  for (int k = 0; k < pool.num_studies(); ++k)
    out << pool.study(k).id << ',' << format_double(w[k]) << '\n';
}

}  // namespace evagg
