#pragma once

// Result files. CSV cells are written with 17 significant digits so that
// every double reads back bit for bit; JSON goes through nlohmann::json,
// whose number output also round-trips.

#include <filesystem>
#include <string>
#include <vector>

#include "fracsaddle/optimal_control.hpp"
#include "fracsaddle/stability.hpp"

namespace fracsaddle {

/// "%.16e"; inf and nan as "inf", "-inf", "nan".
std::string format_double(double x);
/// Inverse of format_double. Throws IoError on trailing garbage.
double parse_double(const std::string& text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  [[nodiscard]] std::size_t column(const std::string& name) const;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// Writes text, creating parent directories. Throws IoError.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

CsvTable iteration_table(const SaddleResult& r);
/// index, k1..kn, u, v.
CsvTable field_table(const SaddleResult& r);
CsvTable dependence_table(const DependenceReport& r);
CsvTable trace_table(const OptimalResult& r);

/// JSON text of a solve; includes the mode list and both coefficient vectors.
std::string saddle_json(const SaddleResult& r);
/// Reads saddle_json output back onto `basis`; the mode lists must agree.
SaddleResult parse_saddle_json(const std::string& text, const BasisPtr& basis);

std::string dependence_json(const DependenceReport& r);
std::string optimal_json(const OptimalResult& r, const BaselineResult* baseline = nullptr);

}  // namespace fracsaddle
