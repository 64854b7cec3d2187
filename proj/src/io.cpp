#include "fracsaddle/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fracsaddle/errors.hpp"

namespace fracsaddle {

using nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

double parse_double(const std::string& text) {
  const char* s = text.c_str();
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(s, &end);
  while (end && (*end == ' ' || *end == '\r')) ++end;
  if (end == s || *end != '\0') throw IoError("not a number: '" + text + "'");
  return x;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw IoError("csv: no column '" + name + "'");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  os.close();
  if (!os) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw IoError("csv: ragged row for " + path.string());
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  write_text(path, out);
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::istringstream is(read_text(path));
  CsvTable t;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::stringstream ss(l);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    return cells;
  };
  if (!std::getline(is, line)) throw IoError("csv: empty file " + path.string());
  t.header = split(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) throw IoError("csv: ragged row in " + path.string());
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable iteration_table(const SaddleResult& r) {
  CsvTable t{{"iter", "action", "residual_u", "residual_v", "step"}, {}};
  for (const auto& rec : r.log) {
    t.rows.push_back({static_cast<double>(rec.iter), rec.action, rec.residual_u, rec.residual_v, rec.step});
  }
  return t;
}

CsvTable field_table(const SaddleResult& r) {
  if (!r.u.basis) throw IoError("field_table: result has no basis");
  const auto& b = *r.u.basis;
  CsvTable t;
  t.header.push_back("index");
  for (int d = 0; d < b.dim(); ++d) t.header.push_back("k" + std::to_string(d + 1));
  t.header.push_back("u");
  t.header.push_back("v");
  for (std::size_t i = 0; i < b.size(); ++i) {
    std::vector<double> row{static_cast<double>(i)};
    for (int d = 0; d < b.dim(); ++d) row.push_back(b.mode(i)[d]);
    row.push_back(r.u.coeffs[i]);
    row.push_back(r.v.coeffs[i]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable dependence_table(const DependenceReport& r) {
  CsvTable t{{"k", "control_distance", "max_pairing", "solution_distance", "value_gap", "action",
              "residual", "converged", "certified"},
             {}};
  for (const auto& row : r.rows) {
    t.rows.push_back({static_cast<double>(row.k), row.control_distance, row.max_pairing,
                      row.solution_distance, row.value_gap, row.action, row.residual,
                      row.converged ? 1.0 : 0.0, row.certified ? 1.0 : 0.0});
  }
  return t;
}

CsvTable trace_table(const OptimalResult& r) {
  CsvTable t{{"iteration", "evaluations", "step", "cost", "accepted", "move", "failures"}, {}};
  for (const auto& row : r.trace) {
    t.rows.push_back({static_cast<double>(row.iteration), static_cast<double>(row.evaluations),
                      row.step, row.cost, row.accepted ? 1.0 : 0.0, static_cast<double>(row.move),
                      static_cast<double>(row.failures)});
  }
  return t;
}

namespace {

// json has no inf/nan; those go out as strings
json num(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

double get_num(const json& j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  return j.get<double>();
}

json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::vector<double> get_nums(const json& j) {
  std::vector<double> out;
  for (const auto& e : j) out.push_back(get_num(e));
  return out;
}

json saddle_object(const SaddleResult& r, bool with_fields) {
  json j;
  j["method"] = to_string(r.method);
  j["converged"] = r.converged;
  j["status"] = r.status;
  j["iterations"] = r.iterations;
  j["action"] = num(r.action);
  j["residual_u"] = num(r.residual_u);
  j["residual_v"] = num(r.residual_v);
  const auto& c = r.certificate;
  j["certificate"] = {{"probes", c.probes},
                      {"tol", num(c.tol)},
                      {"passed", c.passed},
                      {"worst_u_margin", num(c.worst_u_margin)},
                      {"worst_v_margin", num(c.worst_v_margin)},
                      {"violations", c.violations}};
  if (with_fields && r.u.basis) {
    json modes = json::array();
    const auto& b = *r.u.basis;
    for (std::size_t i = 0; i < b.size(); ++i) {
      modes.push_back(std::vector<int>(b.mode(i).begin(), b.mode(i).begin() + b.dim()));
    }
    j["modes"] = modes;
    j["u"] = nums(r.u.coeffs);
    j["v"] = nums(r.v.coeffs);
  }
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string saddle_json(const SaddleResult& r) { return dump(saddle_object(r, true)); }

SaddleResult parse_saddle_json(const std::string& text, const BasisPtr& basis) {
  SaddleResult r;
  try {
    const json j = json::parse(text);
    r.method = parse_solver_method(j.at("method").get<std::string>());
    r.converged = j.at("converged").get<bool>();
    r.status = j.at("status").get<std::string>();
    r.iterations = j.at("iterations").get<int>();
    r.action = get_num(j.at("action"));
    r.residual_u = get_num(j.at("residual_u"));
    r.residual_v = get_num(j.at("residual_v"));
    const auto& c = j.at("certificate");
    r.certificate.probes = c.at("probes").get<int>();
    r.certificate.tol = get_num(c.at("tol"));
    r.certificate.passed = c.at("passed").get<bool>();
    r.certificate.worst_u_margin = get_num(c.at("worst_u_margin"));
    r.certificate.worst_v_margin = get_num(c.at("worst_v_margin"));
    r.certificate.violations = c.at("violations").get<std::vector<int>>();
    const auto& modes = j.at("modes");
    if (modes.size() != basis->size()) throw IoError("saddle json: mode count differs from basis");
    for (std::size_t i = 0; i < basis->size(); ++i) {
      const auto k = modes[i].get<std::vector<int>>();
      for (int d = 0; d < basis->dim(); ++d) {
        if (k.at(static_cast<std::size_t>(d)) != basis->mode(i)[d]) {
          throw IoError("saddle json: mode order differs from basis");
        }
      }
    }
    r.u = SpectralField(basis, get_nums(j.at("u")));
    r.v = SpectralField(basis, get_nums(j.at("v")));
  } catch (const json::exception& e) {
    throw IoError(std::string("saddle json: ") + e.what());
  }
  return r;
}

std::string dependence_json(const DependenceReport& r) {
  json j;
  const auto& v = r.verdicts;
  j["mode"] = to_string(r.spec.mode);
  j["p"] = num(r.p);
  j["volume"] = num(r.volume);
  j["length"] = r.spec.length;
  j["amplitude"] = num(r.spec.amplitude);
  j["decay"] = num(r.spec.decay);
  j["base"] = nums(r.spec.base);
  j["base_action"] = num(r.base_action);
  j["base_converged"] = r.base_converged;
  j["verdicts"] = {{"overall", to_string(v.overall)},
                   {"strong_dependence", to_string(v.strong_dependence)},
                   {"value_continuity", to_string(v.value_continuity)},
                   {"weak_contrast", to_string(v.weak_contrast)},
                   {"weak_null_evidence", to_string(v.weak_null_evidence)},
                   {"set_inclusion", to_string(v.set_inclusion)}};
  j["notes"] = v.notes;
  j["issues"] = r.issues;
  const auto& th = r.thresholds;
  j["thresholds"] = {{"solution_tol", num(th.solution_tol)},
                     {"value_tol", num(th.value_tol)},
                     {"monotone_tail", th.monotone_tail},
                     {"weak_solution_tol", num(th.weak_solution_tol)},
                     {"contrast_factor", num(th.contrast_factor)},
                     {"membership_tol", num(th.membership_tol)}};
  const auto& in = r.inclusion;
  j["inclusion"] = {{"attempted", in.attempted},
                    {"converged", in.converged},
                    {"certified", in.certified},
                    {"residual", num(in.residual)},
                    {"distance_to_base", num(in.distance_to_base)},
                    {"iterations", in.iterations}};
  return dump(j);
}

std::string optimal_json(const OptimalResult& r, const BaselineResult* baseline) {
  json j;
  j["cost"] = num(r.cost);
  j["status"] = r.status;
  j["evaluations"] = r.evaluations;
  j["failures"] = r.failures;
  j["cells_per_axis"] = r.w_star.cells_per_axis();
  j["components"] = r.w_star.components();
  j["w_star"] = nums(r.w_star.values());
  j["admissibility"] = {{"passed", r.admissibility.passed},
                        {"residual_u", num(r.admissibility.residual_u)},
                        {"residual_v", num(r.admissibility.residual_v)},
                        {"tol", num(r.admissibility.tol)}};
  j["state"] = saddle_object(r.state, false);
  j["rejected"] = r.rejected;
  if (baseline) {
    j["baseline"] = {{"samples", baseline->samples},
                     {"failures", baseline->failures},
                     {"best_cost", num(baseline->best_cost)},
                     {"best_values", nums(baseline->best_values)},
                     {"optimizer_not_worse", r.cost <= baseline->best_cost}};
  }
  return dump(j);
}

}  // namespace fracsaddle
