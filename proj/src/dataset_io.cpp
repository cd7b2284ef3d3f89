#include "smartcea/dataset_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "smartcea/error.hpp"

namespace smartcea {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct RowContext {
  const std::string& source;
  std::size_t line;
};

[[noreturn]] void row_error(const RowContext& ctx, const std::string& column, const std::string& reason) {
  std::ostringstream msg;
  msg << ctx.source << ":" << ctx.line;
  if (!column.empty()) msg << ": column '" << column << "'";
  msg << ": " << reason;
  throw Error(ErrorKind::Parse, msg.str());
}

int parse_int(const std::string& field, const RowContext& ctx, const std::string& column) {
  int v = 0;
  const char* first = field.data();
  const char* last = first + field.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc() || p != last) row_error(ctx, column, "malformed integer '" + field + "'");
  return v;
}

double parse_double(const std::string& field, const RowContext& ctx, const std::string& column) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc() || p != last || !std::isfinite(v)) {
    row_error(ctx, column, "malformed number '" + field + "'");
  }
  return v;
}

bool next_data_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    line = t;
    return true;
  }
  return false;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string format_real(double v) {
  if (std::isnan(v)) return "NA";
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), p);
}

Dataset read_dataset_csv(std::istream& in, const Supports& supports, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_data_line(in, line, line_no)) {
    throw Error(ErrorKind::Parse, source + ": empty file (no header row)");
  }
  const auto header = split_csv_line(line);
  const RowContext header_ctx{source, line_no};

  auto find_col = [&](const std::string& name) -> std::ptrdiff_t {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  std::vector<std::size_t> x_cols;
  std::vector<std::string> x_names;
  if (auto single = find_col("x1"); single >= 0) {
    x_cols.push_back(static_cast<std::size_t>(single));
    x_names.push_back("x1");
  } else {
    for (int j = 1;; ++j) {
      const std::string name = "x1_" + std::to_string(j);
      auto col = find_col(name);
      if (col < 0) break;
      x_cols.push_back(static_cast<std::size_t>(col));
      x_names.push_back(name);
    }
  }
  if (x_cols.empty()) row_error(header_ctx, "x1", "missing column (expected x1 or x1_1..x1_p)");

  const std::array<std::string, 7> required{"id", "a1", "l2", "s2", "a2", "y", "c"};
  std::array<std::size_t, 7> col{};
  for (std::size_t k = 0; k < required.size(); ++k) {
    auto c = find_col(required[k]);
    if (c < 0) row_error(header_ctx, required[k], "missing column");
    col[k] = static_cast<std::size_t>(c);
  }

  std::vector<TrajectoryRecord> records;
  while (next_data_line(in, line, line_no)) {
    const RowContext ctx{source, line_no};
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      row_error(ctx, "", "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()));
    }
    TrajectoryRecord r;
    r.id = f[col[0]];
    if (r.id.empty()) row_error(ctx, "id", "missing value");
    for (std::size_t j = 0; j < x_cols.size(); ++j) r.x1.push_back(parse_double(f[x_cols[j]], ctx, x_names[j]));
    r.a1 = parse_int(f[col[1]], ctx, "a1");
    r.l2 = parse_int(f[col[2]], ctx, "l2");
    r.s2 = parse_double(f[col[3]], ctx, "s2");
    r.a2 = parse_int(f[col[4]], ctx, "a2");
    r.y = parse_int(f[col[5]], ctx, "y");
    r.c = parse_double(f[col[6]], ctx, "c");
    if (r.l2 != 0 && r.l2 != 1) row_error(ctx, "l2", "must be 0 or 1");
    if (r.y != 0 && r.y != 1) row_error(ctx, "y", "must be 0 or 1");
    if (r.c < 0.0) row_error(ctx, "c", "cost must be non-negative");
    if (!supports.admits_stage1(r.a1)) {
      row_error(ctx, "a1", "code " + std::to_string(r.a1) + " outside stage-1 support");
    }
    if (!supports.admits_stage2(r.l2, r.a2)) {
      row_error(ctx, "a2", "code " + std::to_string(r.a2) + " outside stage-2 support for l2=" + std::to_string(r.l2));
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw Error(ErrorKind::Parse, source + ": no data rows");
  return Dataset(std::move(records), supports, std::move(x_names));
}

Dataset read_dataset_file(const std::string& path, const Supports& supports) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open dataset file '" + path + "'");
  return read_dataset_csv(in, supports, path);
}

void write_dataset_csv(std::ostream& out, const Dataset& data, const std::vector<std::string>& comment_header) {
  for (const auto& h : comment_header) out << h << '\n';
  out << "id";
  for (const auto& name : data.covariate_names()) out << ',' << name;
  out << ",a1,l2,s2,a2,y,c\n";
  for (const auto& r : data.records()) {
    out << r.id;
    for (double x : r.x1) out << ',' << format_real(x);
    out << ',' << r.a1 << ',' << r.l2 << ',' << format_real(r.s2) << ',' << r.a2 << ',' << r.y << ','
        << format_real(r.c) << '\n';
  }
}

std::vector<RegimeSpec> read_regime_specs(std::istream& in, const Supports& supports, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_data_line(in, line, line_no)) throw Error(ErrorKind::Parse, source + ": empty regime file");
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected{"id", "d1", "d2_if_lapse", "d2_if_no_lapse"};
  if (header != expected) {
    row_error({source, line_no}, "", "header must be id,d1,d2_if_lapse,d2_if_no_lapse");
  }
  std::vector<RegimeSpec> out;
  std::set<int> ids;
  while (next_data_line(in, line, line_no)) {
    const RowContext ctx{source, line_no};
    const auto f = split_csv_line(line);
    if (f.size() != 4) row_error(ctx, "", "expected 4 fields");
    RegimeSpec d{parse_int(f[0], ctx, "id"), parse_int(f[1], ctx, "d1"), parse_int(f[2], ctx, "d2_if_lapse"),
                 parse_int(f[3], ctx, "d2_if_no_lapse")};
    if (!ids.insert(d.id).second) row_error(ctx, "id", "duplicate regime id " + std::to_string(d.id));
    try {
      validate_regime(d, supports);
    } catch (const Error& e) {
      row_error(ctx, "", e.what());
    }
    out.push_back(d);
  }
  if (out.empty()) throw Error(ErrorKind::Parse, source + ": no regimes");
  return out;
}

std::vector<RegimeSpec> read_regime_file(const std::string& path, const Supports& supports) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open regime file '" + path + "'");
  return read_regime_specs(in, supports, path);
}

void write_regime_specs(std::ostream& out, const std::vector<RegimeSpec>& regimes) {
  out << "id,d1,d2_if_lapse,d2_if_no_lapse\n";
  for (const auto& d : regimes) out << d.id << ',' << d.d1 << ',' << d.d2_if_lapse << ',' << d.d2_if_no_lapse << '\n';
}

Supports parse_supports(const std::string& text) {
  Supports s;
  auto codes = [&](const std::string& list) {
    std::vector<TreatmentCode> out;
    for (const auto& f : split_csv_line(list)) {
      int v = 0;
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || p != f.data() + f.size()) {
        throw Error(ErrorKind::Parse, "supports: malformed code '" + f + "' in '" + text + "'");
      }
      out.push_back(v);
    }
    return out;
  };
  std::istringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) {
    part = trim(part);
    if (part.rfind("a1=", 0) == 0) {
      s.stage1 = codes(part.substr(3));
    } else if (part.rfind("l2=", 0) == 0) {
      auto colon = part.find(':');
      if (colon == std::string::npos || (part.substr(3, colon - 3) != "0" && part.substr(3, colon - 3) != "1")) {
        throw Error(ErrorKind::Parse, "supports: expected l2=<0|1>:<codes>, got '" + part + "'");
      }
      s.stage2_by_l2[part[3] - '0'] = codes(part.substr(colon + 1));
    } else if (!part.empty()) {
      throw Error(ErrorKind::Parse, "supports: unrecognised clause '" + part + "'");
    }
  }
  if (s.stage1.empty() || !s.stage2_by_l2.contains(0) || !s.stage2_by_l2.contains(1)) {
    throw Error(ErrorKind::Parse, "supports: need a1=..., l2=1:... and l2=0:... clauses");
  }
  return s;
}

std::string format_supports(const Supports& s) {
  auto join = [](const std::vector<TreatmentCode>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
  };
  std::string out = "a1=" + join(s.stage1);
  for (auto it = s.stage2_by_l2.rbegin(); it != s.stage2_by_l2.rend(); ++it) {
    out += ";l2=" + std::to_string(it->first) + ":" + join(it->second);
  }
  return out;
}

}  // namespace smartcea
