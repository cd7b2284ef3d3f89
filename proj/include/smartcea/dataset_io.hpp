#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "smartcea/core.hpp"

namespace smartcea {

// Dataset CSV: header `id,x1,a1,l2,s2,a2,y,c` (or x1_1..x1_p for several
// baseline covariates), integers for categorical/binary columns, decimals for
// reals, no missing values. Lines starting with '#' are provenance comments.
Dataset read_dataset_csv(std::istream& in, const Supports& supports,
                         const std::string& source_name = "<stream>");
Dataset read_dataset_file(const std::string& path, const Supports& supports);

// Writes `comment_header` lines verbatim (each should start with "# "), then
// the CSV. Reals are written in shortest round-trip form.
void write_dataset_csv(std::ostream& out, const Dataset& data,
                       const std::vector<std::string>& comment_header = {});

// Regime spec file: header `id,d1,d2_if_lapse,d2_if_no_lapse`, one row each.
std::vector<RegimeSpec> read_regime_specs(std::istream& in, const Supports& supports,
                                          const std::string& source_name = "<stream>");
std::vector<RegimeSpec> read_regime_file(const std::string& path, const Supports& supports);
void write_regime_specs(std::ostream& out, const std::vector<RegimeSpec>& regimes);

// "a1=0,1;l2=1:1,2;l2=0:3,4"
Supports parse_supports(const std::string& text);
std::string format_supports(const Supports& supports);

// Shortest decimal that round-trips to the same double; "NA" for NaN.
std::string format_real(double v);

// Splits one CSV line on commas (no quoting; fields may not contain commas).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace smartcea
