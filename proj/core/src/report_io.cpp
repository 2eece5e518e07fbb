#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unistd.h>

#include "invlab/errors.hpp"
#include "invlab/experiments.hpp"

namespace invlab {

namespace fs = std::filesystem;

std::string report_csv(const StudyReport& report) {
  std::set<std::string> extra_keys;
  for (const auto& rec : report.records) {
    for (const auto& [k, v] : rec.extra) extra_keys.insert(k);
  }
  std::ostringstream out;
  out << std::setprecision(17);
  out << "kind,x,lambda,err_mean,err_se";
  for (const auto& k : extra_keys) out << ',' << k;
  out << '\n';
  const std::string kind = to_string(report.kind);
  for (const auto& rec : report.records) {
    out << kind << ',' << rec.x << ',' << rec.lambda << ',' << rec.err_mean << ',' << rec.err_se;
    for (const auto& k : extra_keys) {
      out << ',';
      if (const auto it = rec.extra.find(k); it != rec.extra.end()) out << it->second;
    }
    out << '\n';
  }
  return out.str();
}

void write_report(const StudyReport& report, ReportFormat format, const std::string& path) {
  const std::string body = format == ReportFormat::json ? nlohmann::json(report).dump(2) + "\n" : report_csv(report);
  const fs::path target(path);
  const fs::path dir = target.has_parent_path() ? target.parent_path() : fs::path(".");
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("cannot write report '" + path + "': directory does not exist");

  const fs::path tmp = dir / (target.filename().string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write report '" + path + "': cannot open temporary file");
    out << body;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp, ec);
      throw IoError("cannot write report '" + path + "': write failed");
    }
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw IoError("cannot write report '" + path + "': " + ec.message());
  }
}

StudyReport read_report_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read report '" + path + "'");
  try {
    return nlohmann::json::parse(in).get<StudyReport>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed report '" + path + "': " + e.what());
  }
}

}  // namespace invlab
