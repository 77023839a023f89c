#ifndef EVAGG_REPORT_HPP
#define EVAGG_REPORT_HPP

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "evagg/confidence.hpp"
#include "evagg/evaluate.hpp"
#include "evagg/solvers.hpp"
#include "evagg/types.hpp"

namespace evagg {

// Report writers; format is "json", "csv", or "text". Output is a pure
// function of the inputs, so identical runs emit identical bytes.

void write_solve_report(std::ostream& out, const std::string& format, const StudyPool& pool,
                        const SolveResult& result, const Decision& decision);

void write_compare_report(std::ostream& out, const std::string& format, const StudyPool& pool,
                          const ComparisonReport& report);

void write_identify_report(std::ostream& out, const std::string& format,
                           const Decision& decision);

void write_refine_report(std::ostream& out, const std::string& format, const StudyPool& pool,
                         const RefinedSolveResult& refined, double unrefined_max_regret,
                         const Decision& decision);

void write_cv_report(std::ostream& out, const std::string& format, const CvResult& result);

struct HeatmapRow {
  double v1 = 0.0, v2 = 0.0;
  double tau0 = 0.0;
  bool adopt = false;
};

void write_heatmap_csv(std::ostream& out, const std::string& name1, const std::string& name2,
                       const std::vector<HeatmapRow>& rows);

// (a, eta(a), t*(a)) rows.
void write_eta_csv(std::ostream& out, const std::vector<std::array<double, 3>>& rows);

}  // namespace evagg

#endif  // EVAGG_REPORT_HPP
