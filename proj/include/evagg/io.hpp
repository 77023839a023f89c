#ifndef EVAGG_IO_HPP
#define EVAGG_IO_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "evagg/types.hpp"

namespace evagg {

// Shortest text that round-trips the double (17 significant digits).
std::string format_double(double v);

struct RawPool {
  std::vector<std::string> covariate_names;
  std::vector<Study> studies;
};

// Header: id,estimate,se,<cov1>,...,<covd>. UTF-8, decimal points, one study
// per row. Rows with missing fields are rejected.
RawPool read_pool_csv(std::istream& in);
RawPool read_pool_csv_file(const std::string& path);

// Validates and optionally standardizes named covariate columns.
StudyPool load_pool(const RawPool& raw, const std::vector<std::string>& standardize = {},
                    bool standardize_all = false);

void write_pool_csv(const StudyPool& pool, std::ostream& out);

void write_weights_csv(const StudyPool& pool, const WeightVector& w, std::ostream& out);

}  // namespace evagg

#endif  // EVAGG_IO_HPP
