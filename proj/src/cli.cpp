#include "smartcea/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <concepts>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smartcea/analysis.hpp"
#include "smartcea/bootstrap.hpp"
#include "smartcea/cea.hpp"
#include "smartcea/dataset_io.hpp"
#include "smartcea/dgp.hpp"
#include "smartcea/error.hpp"
#include "smartcea/execution.hpp"
#include "smartcea/study.hpp"

namespace smartcea {

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text,
                                                                   const std::string& source) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw Error(ErrorKind::Parse, where + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::Parse, where + ": empty key");
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string text_of(const std::string& v) { return v; }
std::string text_of(double v) { return format_real(v); }
std::string text_of(bool v) { return v ? "true" : "false"; }
template <std::integral T>
  requires(!std::same_as<T, bool>)
std::string text_of(T v) {
  return std::to_string(v);
}

// Options of one subcommand, remembered so the effective configuration can be
// written into every output header.
struct Command {
  std::string name;
  CLI::App* app = nullptr;
  struct Entry {
    std::string key;
    std::function<std::string()> value;
    bool provenance;
  };
  std::vector<Entry> entries;
  const std::uint64_t* seed = nullptr;

  template <class T>
  CLI::Option* option(const std::string& key, T& var, const std::string& desc, bool provenance = true) {
    entries.push_back({key, [&var] { return text_of(var); }, provenance});
    return app->add_option("--" + key, var, desc)->capture_default_str();
  }
  CLI::Option* flag(const std::string& key, bool& var, const std::string& desc) {
    entries.push_back({key, [&var] { return text_of(var); }, true});
    return app->add_flag("--" + key, var, desc);
  }
  CLI::Option* output(const std::string& key, std::string& var, const std::string& desc) {
    return option(key, var, desc, false);
  }
  CLI::Option* seed_option(std::uint64_t& var) {
    seed = &var;
    entries.push_back({"seed", [&var] { return text_of(var); }, true});
    return app->add_option("--seed", var, "Master seed (required)")->required();
  }
};

struct GlobalOptions {
  int threads = 0;
  std::string supports = "a1=0,1;l2=1:1,2;l2=0:3,4";
};

std::vector<std::string> provenance(const Command& cmd, const GlobalOptions& global) {
  std::map<std::string, std::string> kv;
  kv["supports"] = global.supports;
  for (const auto& e : cmd.entries)
    if (e.provenance) kv[e.key] = e.value();
  std::vector<std::string> lines{std::string("# smartcea ") + kVersion, "# subcommand: " + cmd.name};
  for (const auto& [k, v] : kv) lines.push_back("# config: " + k + "=" + v);
  lines.push_back("# seed: " + (cmd.seed ? std::to_string(*cmd.seed) : std::string("none")));
  return lines;
}

std::string header_text(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  f << content;
  f.flush();
  if (!f) throw Error(ErrorKind::Io, "failed writing '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<RegimeSpec> default_regimes(const Supports& s) {
  if (s == Supports::appendix_b()) {
    const auto r = RegimeIndexMap::calibrated().numbered_regimes();
    return {r.begin(), r.end()};
  }
  return regime_grid(s);
}

std::vector<RegimeSpec> load_regimes(const std::string& path, const Supports& s) {
  return path.empty() ? default_regimes(s) : read_regime_file(path, s);
}

double parse_real_field(const std::string& f, const std::string& where) {
  if (f == "NA") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (f.empty() || ec != std::errc() || p != f.data() + f.size()) {
    throw Error(ErrorKind::Parse, where + ": malformed number '" + f + "'");
  }
  return v;
}

// Data rows of a CSV with '#' comment lines, keyed by header name.
std::vector<std::map<std::string, std::string>> read_csv_rows(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (header.empty()) {
      header = std::move(fields);
      continue;
    }
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(header.size()) + " fields");
    }
    std::map<std::string, std::string> row;
    for (std::size_t k = 0; k < header.size(); ++k) row[header[k]] = fields[k];
    row["#line"] = std::to_string(line_no);
    rows.push_back(std::move(row));
  }
  if (header.empty()) throw Error(ErrorKind::Parse, path + ": empty file");
  return rows;
}

const std::string& field(const std::map<std::string, std::string>& row, const std::string& name,
                         const std::string& path) {
  auto it = row.find(name);
  if (it == row.end()) throw Error(ErrorKind::Parse, path + ": missing column '" + name + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// Truth tables.

void write_truth(std::ostream& out, const TruthTable& t) {
  out << "regime,ey,ec,rd_cost,rd_eff,icer,mc_se_ey,mc_se_ec\n";
  for (const auto& r : t.rows) {
    out << r.regime_id << ',' << format_real(r.ey) << ',' << format_real(r.ec) << ',' << format_real(r.rd_cost) << ','
        << format_real(r.rd_eff) << ',' << format_real(r.icer) << ',' << format_real(r.mc_se_ey) << ','
        << format_real(r.mc_se_ec) << '\n';
  }
}

TruthTable read_truth(const std::string& path, std::size_t draws) {
  TruthTable t;
  for (const auto& row : read_csv_rows(path)) {
    const std::string where = path + ":" + row.at("#line");
    TruthRow r;
    r.regime_id = static_cast<int>(parse_real_field(field(row, "regime", path), where));
    r.ey = parse_real_field(field(row, "ey", path), where);
    r.ec = parse_real_field(field(row, "ec", path), where);
    r.rd_cost = parse_real_field(field(row, "rd_cost", path), where);
    r.rd_eff = parse_real_field(field(row, "rd_eff", path), where);
    r.icer = parse_real_field(field(row, "icer", path), where);
    r.mc_se_ey = parse_real_field(field(row, "mc_se_ey", path), where);
    r.mc_se_ec = parse_real_field(field(row, "mc_se_ec", path), where);
    r.mc_draws = draws;
    t.rows.push_back(r);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Shared estimator options.

struct EstimatorOptions {
  std::string data;
  std::string regimes;
  std::string estimator = "tmle";
  std::string g = "auto";
  std::string g_covariates = "main";
  std::string q_covariates = "appendix-b";
  int soc = 1;
  double alpha = 0.05;
  double cv_threshold = kDefaultCvThreshold;
};

CLI::Validator open_unit_interval() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        double v = 0.0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) return "not a number";
        return v > 0.0 && v < 1.0 ? std::string() : "must lie in (0, 1)";
      },
      "in (0, 1)");
}

void add_estimator_options(Command& c, EstimatorOptions& o, bool with_cv) {
  c.option("data", o.data, "Dataset CSV")->required();
  c.option("regimes", o.regimes, "Regime spec CSV (default: the embedded regimes of the supports)");
  c.option("estimator", o.estimator, "Estimator")->check(CLI::IsMember({"ipw", "tmle"}));
  c.option("g", o.g, "Treatment mechanism (auto: known for ipw, fitted for tmle)")
      ->check(CLI::IsMember({"auto", "known", "fitted"}));
  c.option("g-covariates", o.g_covariates, "Fitted g covariates")->check(CLI::IsMember({"main", "saturated"}));
  c.option("q-covariates", o.q_covariates, "TMLE outcome-regression covariates")
      ->check(CLI::IsMember({"linear", "appendix-b", "saturated"}));
  c.option("soc", o.soc, "Comparator (standard of care) regime id");
  c.option("alpha", o.alpha, "Wald interval level is 1 - alpha")->check(open_unit_interval());
  if (with_cv) c.option("cv-threshold", o.cv_threshold, "Reliability threshold for both CVs")->check(CLI::PositiveNumber);
}

GKind resolve_g(const EstimatorOptions& o) {
  if (o.g == "auto") return o.estimator == "ipw" ? GKind::Known : GKind::Fitted;
  return parse_g_kind(o.g);
}

AnalysisSpec analysis_spec(const EstimatorOptions& o, std::vector<RegimeSpec> regimes) {
  AnalysisSpec spec;
  spec.regimes = std::move(regimes);
  spec.soc_id = o.soc;
  spec.estimator = parse_estimator(o.estimator);
  spec.g_kind = resolve_g(o);
  spec.g_covariates = o.g_covariates == "saturated" ? GCovariates::Saturated : GCovariates::Main;
  spec.q_covariates = parse_q_covariates(o.q_covariates);
  spec.alpha = o.alpha;
  spec.cv_threshold = o.cv_threshold;
  return spec;
}

const char* kIcerUnits =
    "# units: icer=currency per percentage point; rd_cost=currency; rd_eff=percentage points (100 x risk "
    "difference); cv_cost and cv_eff are unitless";

std::string icer_table_csv(const Analysis& a) {
  std::ostringstream s;
  s << "regime,icer,ci_lower,ci_upper,rd_cost,rd_eff,cv_cost,cv_eff,reliable\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& row : a.rows) {
    if (row.regime.id == a.soc_id) continue;
    s << row.regime.id << ',';
    if (row.icer) {
      const auto& r = *row.icer;
      s << format_real(r.icer) << ',' << format_real(r.ci[0]) << ',' << format_real(r.ci[1]) << ','
        << format_real(r.rd_cost.psi) << ',' << format_real(r.rd_eff.psi) << ',' << format_real(r.cv_cost) << ','
        << format_real(r.cv_eff) << ',' << (r.reliable ? 1 : 0) << '\n';
    } else {
      const double rc = row.rd_cost ? row.rd_cost->psi : nan, re = row.rd_eff ? row.rd_eff->psi : nan;
      const double cvc = row.rd_cost ? row.rd_cost->se() / std::abs(rc) : nan;
      const double cve = row.rd_eff ? row.rd_eff->se() / std::abs(re) : nan;
      s << "NA,NA,NA," << format_real(rc) << ',' << format_real(re) << ',' << format_real(cvc) << ','
        << format_real(cve) << ",0\n";
    }
  }
  return s.str();
}

std::string fixed2(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string icer_summary_text(const Analysis& a) {
  std::ostringstream s;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %-28s %-10s %-10s %s\n", "Regime", "ICER [95% CI]", "CV cost", "CV effect",
                "Reliable");
  s << buf;
  for (const auto& row : a.rows) {
    if (row.regime.id == a.soc_id) continue;
    std::string cell = "undefined", cvc = "NA", cve = "NA", rel = "no";
    if (row.icer) {
      const auto& r = *row.icer;
      cell = fixed2(r.icer) + " [" + fixed2(r.ci[0]) + ", " + fixed2(r.ci[1]) + "]";
      cvc = fixed2(r.cv_cost);
      cve = fixed2(r.cv_eff);
      rel = r.reliable ? "yes" : "no";
    }
    std::snprintf(buf, sizeof buf, "%-8d %-28s %-10s %-10s %s\n", row.regime.id, cell.c_str(), cvc.c_str(),
                  cve.c_str(), rel.c_str());
    s << buf;
  }
  return s.str();
}

struct IcerPoint {
  PlanePoint point;
  bool finite;
};

std::vector<IcerPoint> read_icer_points(const std::string& path) {
  std::vector<IcerPoint> out;
  for (const auto& row : read_csv_rows(path)) {
    const std::string where = path + ":" + row.at("#line");
    PlanePoint p;
    p.regime_id = static_cast<int>(parse_real_field(field(row, "regime", path), where));
    p.icer = parse_real_field(field(row, "icer", path), where);
    p.rd_cost = parse_real_field(field(row, "rd_cost", path), where);
    p.rd_eff = parse_real_field(field(row, "rd_eff", path), where);
    p.reliable = field(row, "reliable", path) == "1";
    out.push_back({p, std::isfinite(p.rd_cost) && std::isfinite(p.rd_eff)});
  }
  return out;
}

std::vector<PlanePoint> plane_from_file(const std::string& path, bool drop_unreliable, std::ostream& err) {
  std::vector<PlanePoint> points;
  for (const auto& ip : read_icer_points(path)) {
    if (!ip.finite) {
      err << "warning: regime " << ip.point.regime_id << " has no risk differences; not plotted\n";
      continue;
    }
    if (drop_unreliable && !ip.point.reliable) continue;
    points.push_back(ip.point);
  }
  return points;
}

// ---------------------------------------------------------------------------

struct Cli {
  CLI::App app{"Cost-effectiveness estimation for embedded regimes of two-stage SMARTs", "smartcea"};
  GlobalOptions global;
  std::vector<std::unique_ptr<Command>> commands;
  std::map<std::string, std::function<int()>> handlers;
  std::ostream& out;
  std::ostream& err;

  Cli(std::ostream& o, std::ostream& e) : out(o), err(e) {
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.fallthrough();
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    app.add_option("--threads", global.threads, "Worker thread cap (0 = all cores)")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    app.add_option("--supports", global.supports, "Treatment supports: a1=...;l2=1:...;l2=0:...")
        ->capture_default_str();
    app.add_option("--config", "Flat key = value file of subcommand options (command-line flags win)");
    add_simulate();
    add_truth();
    add_estimate();
    add_icer_table();
    add_contrast();
    add_frontier();
    add_plot();
    add_mc_study();
    add_bootstrap();
  }

  Command& command(const std::string& name, const std::string& desc) {
    commands.push_back(std::make_unique<Command>());
    Command& c = *commands.back();
    c.name = name;
    c.app = app.add_subcommand(name, desc);
    return c;
  }

  Supports supports() const {
    try {
      return parse_supports(global.supports);
    } catch (const Error& e) {
      throw UsageError(std::string("--supports: ") + e.what());
    }
  }

  void add_simulate() {
    auto& c = command("simulate", "Draw an Appendix-B SMART dataset");
    auto o = std::make_shared<std::tuple<std::size_t, std::uint64_t, std::string>>(1809, 0, "");
    c.option("n", std::get<0>(*o), "Number of participants")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 40));
    c.seed_option(std::get<1>(*o));
    c.output("out", std::get<2>(*o), "Output dataset CSV")->required();
    handlers["simulate"] = [this, o, &c] {
      if (!(supports() == Supports::appendix_b())) throw UsageError("simulate draws on the Appendix-B supports only");
      DgpConfig cfg;
      cfg.n = std::get<0>(*o);
      cfg.seed = std::get<1>(*o);
      const Dataset data = simulate_smart(cfg);
      std::ostringstream s;
      write_dataset_csv(s, data, provenance(c, global));
      write_text(std::get<2>(*o), s.str());
      return 0;
    };
  }

  void add_truth() {
    auto& c = command("truth", "Monte-Carlo counterfactual truth for the Appendix-B regimes");
    struct Opts {
      std::size_t draws = 2000000;
      std::uint64_t seed = 0;
      bool calibrate = false;
      std::string out, calibration_out;
    };
    auto o = std::make_shared<Opts>();
    c.option("mc-draws", o->draws, "Monte-Carlo draws")->check(CLI::Range(std::size_t{10000}, std::size_t{1} << 40));
    c.seed_option(o->seed);
    c.flag("calibrate", o->calibrate, "Re-run the regime indexing search instead of using the stored indexing");
    c.output("out", o->out, "Output truth CSV")->required();
    c.output("calibration-out", o->calibration_out, "With --calibrate: residuals against the published values");
    handlers["truth"] = [this, o, &c] {
      DgpConfig cfg;
      TruthTable truth;
      std::vector<std::string> header = provenance(c, global);
      if (o->calibrate) {
        const auto cal = search_regime_indexing(cfg, o->draws, o->seed);
        truth = cal.truth;
        std::ostringstream s;
        s << header_text(header);
        s << "# candidates_searched: " << cal.candidates_searched << '\n';
        s << "regime,ey_residual,ec_residual,ey_within,ec_within\n";
        for (int r = 0; r < 8; ++r) {
          s << r + 1 << ',' << format_real(cal.ey_residual[r]) << ',' << format_real(cal.ec_residual[r]) << ','
            << (cal.ey_within[r] ? 1 : 0) << ',' << (cal.ec_within[r] ? 1 : 0) << '\n';
          if (!cal.ey_within[r] || !cal.ec_within[r]) {
            err << "warning: regime " << r + 1 << " residuals (EY " << format_real(cal.ey_residual[r]) << ", EC "
                << format_real(cal.ec_residual[r]) << ") exceed max(5 MC SE, 0.005)\n";
          }
        }
        if (!o->calibration_out.empty()) write_text(o->calibration_out, s.str());
        header.push_back("# indexing: searched (" + std::string(cal.map == RegimeIndexMap::calibrated()
                                                                     ? "matches the stored indexing"
                                                                     : "differs from the stored indexing") +
                         ")");
      } else {
        const auto regimes = cfg.index_map.numbered_regimes();
        truth = true_values(cfg, regimes, 1, o->draws, o->seed);
      }
      header.push_back("# units: ec, rd_cost = currency; rd_eff = percentage points; icer = currency per percentage point");
      std::ostringstream s;
      s << header_text(header);
      write_truth(s, truth);
      write_text(o->out, s.str());
      return 0;
    };
  }

  void add_estimate() {
    auto& c = command("estimate", "Regime-specific mean effectiveness and cost");
    struct Opts {
      EstimatorOptions est;
      std::string outcome = "both", out, ic_dir;
    };
    auto o = std::make_shared<Opts>();
    add_estimator_options(c, o->est, false);
    c.option("outcome", o->outcome, "Outcome")->check(CLI::IsMember({"y", "c", "both"}));
    c.output("out", o->out, "Output CSV")->required();
    c.output("ic-dir", o->ic_dir, "Directory for per-estimate influence-curve files");
    handlers["estimate"] = [this, o, &c] {
      const Supports sup = supports();
      const Dataset data = read_dataset_file(o->est.data, sup);
      const auto regimes = load_regimes(o->est.regimes, sup);
      const auto spec = analysis_spec(o->est, regimes);
      const GModel g = estimate_g(data, spec.g_kind, spec.g_covariates);
      std::vector<Outcome> outcomes;
      if (o->outcome != "c") outcomes.push_back(Outcome::Effectiveness);
      if (o->outcome != "y") outcomes.push_back(Outcome::Cost);
      if (!o->ic_dir.empty()) std::filesystem::create_directories(o->ic_dir);

      std::vector<std::string> header = provenance(c, global);
      header.push_back("# units: psi and se for y are proportions; for c, currency");
      std::ostringstream body;
      body << "regime,outcome,psi,se" << (o->ic_dir.empty() ? "" : ",ic_file") << '\n';
      std::set<std::pair<std::string, std::string>> bounds;
      for (const auto& d : regimes) {
        for (Outcome out_kind : outcomes) {
          RegimeMeanRequest req{d, out_kind, spec.estimator, spec.q_covariates, {}};
          const auto res = regime_mean(data, g, req);
          if (spec.estimator == EstimatorKind::TMLE) {
            bounds.insert({std::string(to_string(out_kind)),
                           "min=" + format_real(res.scale_min) + " max=" + format_real(res.scale_max)});
          }
          body << d.id << ',' << to_string(out_kind) << ',' << format_real(res.estimate.psi) << ','
               << format_real(res.estimate.se());
          if (!o->ic_dir.empty()) {
            const std::string name = "ic_" + std::string(to_string(spec.estimator)) + "_r" + std::to_string(d.id) +
                                     "_" + std::string(to_string(out_kind)) + ".csv";
            const std::string path = (std::filesystem::path(o->ic_dir) / name).string();
            std::ostringstream ic;
            ic << header_text(provenance(c, global)) << "# regime " << d.id << ", outcome " << to_string(out_kind)
               << ", rows in dataset order\nic\n";
            for (double v : res.estimate.ic) ic << format_real(v) << '\n';
            write_text(path, ic.str());
            body << ',' << name;
          }
          body << '\n';
        }
      }
      for (const auto& [k, v] : bounds) header.push_back("# tmle scaling " + k + ": " + v);
      write_text(o->out, header_text(header) + body.str());
      return 0;
    };
  }

  void add_icer_table() {
    auto& c = command("icer-table", "ICERs against SOC with Wald intervals and CV screening");
    struct Opts {
      EstimatorOptions est;
      std::string out, out_summary, out_ranking;
    };
    auto o = std::make_shared<Opts>();
    add_estimator_options(c, o->est, true);
    c.output("out", o->out, "Output ICER CSV")->required();
    c.output("out-summary", o->out_summary, "Optional text table (ICER [CI], CVs)");
    c.output("out-ranking", o->out_ranking, "Optional expected-cost ranking CSV");
    handlers["icer-table"] = [this, o, &c] {
      const Supports sup = supports();
      const Dataset data = read_dataset_file(o->est.data, sup);
      const auto a = analyze(data, analysis_spec(o->est, load_regimes(o->est.regimes, sup)));
      for (const auto& row : a.rows) {
        if (row.failure) {
          err << "warning: regime " << row.regime.id << ": kind=" << to_string(row.failure->kind)
              << " message=" << row.failure->message << '\n';
        }
      }
      auto header = provenance(c, global);
      header.emplace_back(kIcerUnits);
      write_text(o->out, header_text(header) + icer_table_csv(a));
      if (!o->out_summary.empty()) write_text(o->out_summary, header_text(header) + icer_summary_text(a));
      if (!o->out_ranking.empty()) {
        std::vector<std::pair<int, EstimateWithIC>> costs;
        for (const auto& row : a.rows)
          if (row.ec) costs.emplace_back(row.regime.id, row.ec->estimate);
        std::ostringstream s;
        s << header_text(provenance(c, global)) << "# units: expected cost in currency\n";
        s << "rank,regime,ec,se,ci_lower,ci_upper\n";
        int rank = 0;
        for (const auto& r : cost_ranking(costs, o->est.alpha)) {
          s << ++rank << ',' << r.regime_id << ',' << format_real(r.psi) << ',' << format_real(r.se) << ','
            << format_real(r.ci[0]) << ',' << format_real(r.ci[1]) << '\n';
        }
        write_text(o->out_ranking, s.str());
      }
      return 0;
    };
  }

  void add_contrast() {
    auto& c = command("contrast", "Difference of two ICERs with a Wald interval");
    struct Opts {
      EstimatorOptions est;
      int i = 0, j = 0;
      std::string out;
    };
    auto o = std::make_shared<Opts>();
    add_estimator_options(c, o->est, true);
    c.option("i", o->i, "First regime id")->required();
    c.option("j", o->j, "Second regime id")->required();
    c.output("out", o->out, "Output CSV")->required();
    handlers["contrast"] = [this, o, &c] {
      const Supports sup = supports();
      const Dataset data = read_dataset_file(o->est.data, sup);
      std::vector<RegimeSpec> keep;
      for (const auto& d : load_regimes(o->est.regimes, sup))
        if (d.id == o->est.soc || d.id == o->i || d.id == o->j) keep.push_back(d);
      const auto spec = analysis_spec(o->est, keep);
      for (int id : {o->i, o->j}) {
        if (id == o->est.soc) throw UsageError("--i and --j must differ from --soc");
        if (std::none_of(keep.begin(), keep.end(), [id](const RegimeSpec& d) { return d.id == id; })) {
          throw UsageError("regime " + std::to_string(id) + " is not in the regime list");
        }
      }
      const auto a = analyze(data, spec);
      for (int id : {o->i, o->j}) {
        const auto& row = a.row(id);
        if (!row.icer) throw Error(row.failure->kind, "regime " + std::to_string(id) + ": " + row.failure->message);
      }
      const auto res = contrast(*a.row(o->i).icer, *a.row(o->j).icer, o->est.alpha);
      auto header = provenance(c, global);
      header.emplace_back("# units: currency per percentage point");
      std::ostringstream s;
      s << header_text(header) << "regime_i,regime_j,icer_i,icer_j,diff,se,ci_lower,ci_upper\n";
      s << res.regime_i << ',' << res.regime_j << ',' << format_real(a.row(o->i).icer->icer) << ','
        << format_real(a.row(o->j).icer->icer) << ',' << format_real(res.diff) << ',' << format_real(res.se) << ','
        << format_real(res.ci[0]) << ',' << format_real(res.ci[1]) << '\n';
      write_text(o->out, s.str());
      return 0;
    };
  }

  void add_frontier() {
    auto& c = command("frontier", "Cost-effectiveness plane points and efficient frontier");
    struct Opts {
      std::string in, out_points, out_frontier;
      bool drop_unreliable = false;
    };
    auto o = std::make_shared<Opts>();
    c.option("in", o->in, "ICER table CSV (from icer-table)")->required();
    c.flag("drop-unreliable", o->drop_unreliable, "Leave out regimes with a CV at or above the threshold");
    c.output("out-points", o->out_points, "Output plane points CSV")->required();
    c.output("out-frontier", o->out_frontier, "Output frontier CSV")->required();
    handlers["frontier"] = [this, o, &c] {
      const auto points = plane_from_file(o->in, o->drop_unreliable, err);
      const Frontier f = efficient_frontier(points);
      const std::set<int> members(f.regime_ids.begin(), f.regime_ids.end());
      const auto header = header_text(provenance(c, global)) +
                          "# units: rd_eff=percentage points; rd_cost=currency; icer and incremental_icer=currency "
                          "per percentage point\n";
      std::ostringstream p;
      p << header << "regime,rd_eff,rd_cost,icer,reliable,on_frontier\n";
      for (const auto& pt : points) {
        p << pt.regime_id << ',' << format_real(pt.rd_eff) << ',' << format_real(pt.rd_cost) << ','
          << format_real(pt.icer) << ',' << (pt.reliable ? 1 : 0) << ',' << (members.contains(pt.regime_id) ? 1 : 0)
          << '\n';
      }
      std::ostringstream fr;
      fr << header << "step,regime,rd_eff,rd_cost,incremental_icer\n";
      fr << "0,soc,0,0,NA\n";
      for (std::size_t k = 0; k < f.regime_ids.size(); ++k) {
        fr << k + 1 << ',' << f.regime_ids[k] << ',' << format_real(f.path[k + 1].first) << ','
           << format_real(f.path[k + 1].second) << ',' << format_real(f.slopes[k]) << '\n';
      }
      write_text(o->out_points, p.str());
      write_text(o->out_frontier, fr.str());
      return 0;
    };
  }

  void add_plot() {
    auto& c = command("plot", "Render the cost-effectiveness plane as SVG");
    struct Opts {
      std::string in, out;
      bool drop_unreliable = false;
    };
    auto o = std::make_shared<Opts>();
    c.option("in", o->in, "ICER table CSV (from icer-table)")->required();
    c.flag("drop-unreliable", o->drop_unreliable, "Leave out regimes with a CV at or above the threshold");
    c.output("out", o->out, "Output SVG")->required();
    handlers["plot"] = [this, o, &c] {
      const auto points = plane_from_file(o->in, o->drop_unreliable, err);
      std::optional<Frontier> f;
      try {
        f = efficient_frontier(points);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::EmptyFrontier) throw;
        err << "warning: " << e.what() << "; plotting without a frontier\n";
      }
      std::string comment;
      for (auto line : provenance(c, global)) {
        for (std::size_t k; (k = line.find("--")) != std::string::npos;) line.replace(k, 2, "- -");
        comment += line + "\n";
      }
      write_text(o->out, "<!--\n" + comment + "-->\n" + plane_svg(points, f ? &*f : nullptr));
      return 0;
    };
  }

  void add_mc_study() {
    auto& c = command("mc-study", "Monte-Carlo study of IPW and TMLE ICER estimators on the Appendix-B DGP");
    struct Opts {
      std::size_t reps = 200, n = 1809, truth_draws = 2000000;
      std::uint64_t seed = 0, truth_seed = 1;
      std::string estimators = "ipw,tmle", ipw_g = "known", tmle_g = "fitted", q = "appendix-b";
      bool retain = false;
      double alpha = 0.05, cv = kDefaultCvThreshold;
      std::string truth_cache, out;
    };
    auto o = std::make_shared<Opts>();
    c.option("reps", o->reps, "Simulation repetitions")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 32));
    c.option("n", o->n, "Participants per repetition")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 32));
    c.seed_option(o->seed);
    c.option("estimators", o->estimators, "Comma-separated subset of ipw,tmle");
    c.option("ipw-g", o->ipw_g, "Treatment mechanism for IPW")->check(CLI::IsMember({"known", "fitted"}));
    c.option("tmle-g", o->tmle_g, "Treatment mechanism for TMLE")->check(CLI::IsMember({"known", "fitted"}));
    c.option("q-covariates", o->q, "TMLE outcome-regression covariates")
        ->check(CLI::IsMember({"linear", "appendix-b"}));
    c.flag("retain-degenerate", o->retain, "Keep reps whose ICER is unreliable (CV at or above the threshold)");
    c.option("alpha", o->alpha, "Wald interval level is 1 - alpha")->check(open_unit_interval());
    c.option("cv-threshold", o->cv, "Reliability threshold for both CVs")->check(CLI::PositiveNumber);
    c.option("truth-draws", o->truth_draws, "Monte-Carlo draws for the true ICERs")
        ->check(CLI::Range(std::size_t{10000}, std::size_t{1} << 40));
    c.option("truth-seed", o->truth_seed, "Seed of the truth computation");
    c.output("truth-cache", o->truth_cache, "Truth CSV reused when its draws and seed match");
    c.output("out", o->out, "Output metrics CSV")->required();
    handlers["mc-study"] = [this, o, &c] {
      if (!(supports() == Supports::appendix_b())) throw UsageError("mc-study runs on the Appendix-B supports only");
      StudyConfig cfg;
      cfg.reps = o->reps;
      cfg.n = o->n;
      cfg.seed = o->seed;
      cfg.retain_degenerate = o->retain;
      cfg.alpha = o->alpha;
      cfg.cv_threshold = o->cv;
      cfg.arms.clear();
      const QCovariates q = parse_q_covariates(o->q);
      std::set<std::string> seen;
      for (const auto& name : split_csv_line(o->estimators)) {
        if (!seen.insert(name).second) throw UsageError("--estimators lists '" + name + "' twice");
        if (name == "ipw") {
          cfg.arms.push_back(analysis_arm(EstimatorKind::IPW, parse_g_kind(o->ipw_g), q));
        } else if (name == "tmle") {
          cfg.arms.push_back(analysis_arm(EstimatorKind::TMLE, parse_g_kind(o->tmle_g), q));
        } else {
          throw UsageError("--estimators: unknown estimator '" + name + "' (expected ipw, tmle)");
        }
      }
      cfg.truth = study_truth(o->truth_draws, o->truth_seed, o->truth_cache);
      const std::size_t every = std::max<std::size_t>(1, o->reps / 20);
      cfg.progress = [this, every](std::size_t done, std::size_t total) {
        if (done % every == 0 || done == total) err << "progress: " << done << "/" << total << " reps\n";
      };
      const auto res = run_study(cfg);

      auto header = provenance(c, global);
      header.emplace_back(
          "# units: bias, mean_ci_width in currency per percentage point; variance, mse in its square; coverage_pct "
          "in percent; rel_var_vs_ipw = var(TMLE)/var(IPW), rel_var_ipw_over_tmle its reciprocal, on reps kept by "
          "both");
      std::ostringstream s;
      s << header_text(header);
      s << "estimator,regime,bias,variance,mse,mean_ci_width,coverage_pct,avg_cv_cost,avg_cv_eff,rel_var_vs_ipw,"
           "rel_var_ipw_over_tmle,reps_used,degenerate_count,unreliable_count\n";
      const double nan = std::numeric_limits<double>::quiet_NaN();
      for (const auto& m : res.metrics) {
        s << m.estimator << ',' << m.regime_id << ',' << format_real(m.bias) << ',' << format_real(m.variance) << ','
          << format_real(m.mse) << ',' << format_real(m.mean_ci_width) << ',' << format_real(m.coverage_pct) << ','
          << format_real(m.avg_cv_cost) << ',' << format_real(m.avg_cv_eff) << ','
          << format_real(m.rel_var_tmle_over_ipw.value_or(nan)) << ','
          << format_real(m.rel_var_ipw_over_tmle.value_or(nan)) << ',' << m.reps_used << ',' << m.degenerate_count
          << ',' << m.unreliable_count << '\n';
      }
      write_text(o->out, s.str());
      return 0;
    };
  }

  TruthTable study_truth(std::size_t draws, std::uint64_t seed, const std::string& cache) {
    const std::string key = "# truth-cache-key: mc_draws=" + std::to_string(draws) + " seed=" + std::to_string(seed) +
                            " version=" + kVersion;
    if (!cache.empty() && std::filesystem::exists(cache)) {
      const std::string text = read_text(cache);
      if (text.find(key + "\n") != std::string::npos) {
        TruthTable t = read_truth(cache, draws);
        if (t.rows.size() == 8) return t;
      }
      err << "note: truth cache '" << cache << "' does not match; recomputing\n";
    }
    DgpConfig cfg;
    const auto regimes = cfg.index_map.numbered_regimes();
    TruthTable t = true_values(cfg, regimes, 1, draws, seed);
    if (!cache.empty()) {
      std::ostringstream s;
      s << key << '\n';
      write_truth(s, t);
      write_text(cache, s.str());
    }
    return t;
  }

  void add_bootstrap() {
    auto& c = command("bootstrap", "Percentile bootstrap interval for one regime's ICER");
    struct Opts {
      EstimatorOptions est;
      int regime = 0;
      std::size_t B = 500;
      std::uint64_t seed = 0;
      std::string out, out_replicates;
    };
    auto o = std::make_shared<Opts>();
    add_estimator_options(c, o->est, true);
    c.option("regime", o->regime, "Regime id")->required();
    c.option("B", o->B, "Bootstrap replicates")->check(CLI::Range(std::size_t{100}, std::size_t{1} << 32));
    c.seed_option(o->seed);
    c.output("out", o->out, "Output interval CSV")->required();
    c.output("out-replicates", o->out_replicates, "Optional per-replicate CSV");
    handlers["bootstrap"] = [this, o, &c] {
      const Supports sup = supports();
      const Dataset data = read_dataset_file(o->est.data, sup);
      std::vector<RegimeSpec> keep;
      for (const auto& d : load_regimes(o->est.regimes, sup))
        if (d.id == o->est.soc || d.id == o->regime) keep.push_back(d);
      if (o->regime == o->est.soc || keep.size() != 2) {
        throw UsageError("--regime must name a listed regime other than --soc");
      }
      const auto spec = analysis_spec(o->est, keep);
      const auto a = analyze(data, spec);
      const auto& row = a.row(o->regime);
      if (!row.icer) throw Error(row.failure->kind, row.failure->message);
      const auto boot = bootstrap_ci(data, icer_statistic(spec, o->regime), o->B, o->seed, o->est.alpha);

      auto header = provenance(c, global);
      header.emplace_back("# units: currency per percentage point");
      std::ostringstream s;
      s << header_text(header) << "regime,method,icer,ci_lower,ci_upper,replicates_used,replicates_failed\n";
      s << o->regime << ",wald," << format_real(row.icer->icer) << ',' << format_real(row.icer->ci[0]) << ','
        << format_real(row.icer->ci[1]) << ",NA,NA\n";
      s << o->regime << ",percentile_bootstrap," << format_real(row.icer->icer) << ',' << format_real(boot.ci[0])
        << ',' << format_real(boot.ci[1]) << ',' << boot.replicates.size() << ',' << boot.failures.size() << '\n';
      write_text(o->out, s.str());
      if (!o->out_replicates.empty()) {
        std::ostringstream r;
        r << header_text(header) << "replicate,icer,failure\n";
        std::size_t ok = 0, bad = 0;
        for (std::size_t b = 0; b < o->B; ++b) {
          if (bad < boot.failures.size() && boot.failures[bad].replicate == b) {
            r << b + 1 << ",NA," << to_string(boot.failures[bad].kind) << '\n';
            ++bad;
          } else {
            r << b + 1 << ',' << format_real(boot.replicates[ok++]) << ",\n";
          }
        }
        write_text(o->out_replicates, r.str());
      }
      return 0;
    };
  }
};

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int run_cli(const std::vector<std::string>& input, std::ostream& out, std::ostream& err) {
  Cli cli(out, err);

  // Pull out --config and splice its entries in right after the subcommand so
  // that later (command-line) occurrences win under TakeLast.
  std::vector<std::string> args;
  std::string config_path;
  for (std::size_t k = 0; k < input.size(); ++k) {
    if (input[k] == "--config") {
      if (k + 1 >= input.size()) {
        err << "usage error: --config needs a file argument\n";
        return 2;
      }
      config_path = input[++k];
    } else if (input[k].rfind("--config=", 0) == 0) {
      config_path = input[k].substr(9);
    } else {
      args.push_back(input[k]);
    }
  }
  if (!config_path.empty()) {
    std::vector<std::pair<std::string, std::string>> entries;
    try {
      entries = parse_config_text(read_text(config_path), config_path);
    } catch (const Error& e) {
      err << "usage error: " << one_line(e.what()) << '\n';
      return 2;
    }
    auto sub = std::find_if(args.begin(), args.end(), [&](const std::string& a) { return cli.handlers.contains(a); });
    if (sub == args.end()) {
      err << "usage error: --config needs a subcommand\n";
      return 2;
    }
    std::vector<std::string> spliced;
    std::set<std::string> keys;
    for (const auto& [k, v] : entries) {
      if (k == "config") {
        err << "usage error: " << config_path << ": 'config' cannot be set from a config file\n";
        return 2;
      }
      if (!keys.insert(k).second) err << "note: " << config_path << ": key '" << k << "' repeated; last value used\n";
      spliced.push_back("--" + k + "=" + v);
    }
    for (const auto& k : keys) {
      const std::string flag = "--" + k;
      for (auto it = sub + 1; it != args.end(); ++it) {
        if (*it == flag || it->rfind(flag + "=", 0) == 0) {
          err << "note: " << flag << " on the command line overrides " << config_path << '\n';
          break;
        }
      }
    }
    args.insert(sub + 1, spliced.begin(), spliced.end());
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    cli.app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = cli.app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  if (cli.global.threads > 0) set_thread_limit(cli.global.threads);
  for (const auto& cmd : cli.commands) {
    if (!cmd->app->parsed()) continue;
    try {
      return cli.handlers.at(cmd->name)();
    } catch (const UsageError& e) {
      err << "usage error: " << one_line(e.what()) << '\n';
      return 2;
    } catch (const Error& e) {
      err << "error: kind=" << to_string(e.kind()) << " message=" << one_line(e.what()) << '\n';
      return 1;
    } catch (const std::exception& e) {
      err << "error: kind=Internal message=" << one_line(e.what()) << '\n';
      return 1;
    }
  }
  err << "usage error: no subcommand\n";
  return 2;
}

}  // namespace smartcea
