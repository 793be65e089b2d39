#include "epsts/results_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "epsts/errors.hpp"
#include "epsts/external_objective.hpp"

namespace epsts {
namespace fs = std::filesystem;
namespace {

std::string num(double v) { return format_double(v); }

std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

std::string sibling(const fs::path& p, const std::string& suffix, const std::string& ext) {
  fs::path stem = p.parent_path() / p.stem();
  return stem.string() + suffix + ext;
}

class Writer {
 public:
  explicit Writer(const fs::path& path) : path_(path), out_(path, std::ios::out | std::ios::trunc) {
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
  }
  std::ostream& os() { return out_; }
  void finish() {
    out_.flush();
    out_.close();
    if (out_.fail()) throw IoError("failed writing '" + path_.string() + "'");
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

void write_records(const ExperimentResult& result, Eigen::Index d, OutputFormat format, const fs::path& path) {
  Writer w(path);
  auto& os = w.os();
  if (format == OutputFormat::Csv) os << csv_header(d) << '\n';
  for (const auto& trial : result.trials) {
    for (const auto& row : trial.rows) {
      if (format == OutputFormat::Csv) {
        os << trial.trial_id << ',' << row.iter << ',' << to_string(row.branch);
        for (Eigen::Index i = 0; i < d; ++i) os << ',' << num(row.x[i]);
        os << ',' << num(row.y) << ',' << num(row.y_min) << ',';
        if (row.log_error) os << num(*row.log_error);
        os << ',' << num(row.proposal_s) << ',' << num(row.iter_s) << '\n';
      } else {
        os << "{\"trial\":" << trial.trial_id << ",\"iter\":" << row.iter << ",\"branch\":\"" << to_string(row.branch)
           << '"';
        for (Eigen::Index i = 0; i < d; ++i) os << ",\"x_" << i + 1 << "\":" << num(row.x[i]);
        os << ",\"y\":" << num(row.y) << ",\"y_min\":" << num(row.y_min)
           << ",\"log_error\":" << (row.log_error ? num(*row.log_error) : "null")
           << ",\"proposal_s\":" << num(row.proposal_s) << ",\"iter_s\":" << num(row.iter_s) << "}\n";
      }
    }
  }
  w.finish();
}

void write_summary(const SummaryStats& s, OutputFormat format, const fs::path& path) {
  Writer w(path);
  auto& os = w.os();
  if (format == OutputFormat::Csv) os << "iter,median,q1,q3,mean_proposal_s\n";
  for (const auto& it : s.per_iter) {
    if (format == OutputFormat::Csv) {
      os << it.iter << ',' << num(it.median) << ',' << num(it.q1) << ',' << num(it.q3) << ','
         << num(it.mean_proposal_s) << '\n';
    } else {
      os << "{\"iter\":" << it.iter << ",\"median\":" << num(it.median) << ",\"q1\":" << num(it.q1)
         << ",\"q3\":" << num(it.q3) << ",\"mean_proposal_s\":" << num(it.mean_proposal_s) << "}\n";
    }
  }
  w.finish();
}

void write_branches(const SummaryStats& s, OutputFormat format, const fs::path& path) {
  Writer w(path);
  auto& os = w.os();
  if (format == OutputFormat::Csv) os << "branch,count,mean_proposal_s,median_proposal_s,mean_iter_s\n";
  for (const auto& b : s.per_branch) {
    if (format == OutputFormat::Csv) {
      os << to_string(b.branch) << ',' << b.count << ',' << num(b.mean_proposal_s) << ','
         << num(b.median_proposal_s) << ',' << num(b.mean_iter_s) << '\n';
    } else {
      os << "{\"branch\":\"" << to_string(b.branch) << "\",\"count\":" << b.count
         << ",\"mean_proposal_s\":" << num(b.mean_proposal_s) << ",\"median_proposal_s\":"
         << num(b.median_proposal_s) << ",\"mean_iter_s\":" << num(b.mean_iter_s) << "}\n";
    }
  }
  w.finish();
}

void write_errors(const SummaryStats& s, OutputFormat format, const fs::path& path) {
  Writer w(path);
  auto& os = w.os();
  if (format == OutputFormat::Csv) os << "trial,iter,kind,message\n";
  for (const auto& e : s.failures) {
    if (format == OutputFormat::Csv) {
      std::string msg = e.message;
      std::string quoted = "\"";
      for (char c : msg) {
        if (c == '"') quoted += '"';
        quoted += (c == '\n' ? ' ' : c);
      }
      quoted += '"';
      os << e.trial_id << ',' << e.iter << ',' << e.kind << ',' << quoted << '\n';
    } else {
      os << "{\"trial\":" << e.trial_id << ",\"iter\":" << e.iter << ",\"kind\":" << json_string(e.kind)
         << ",\"message\":" << json_string(e.message) << "}\n";
    }
  }
  w.finish();
}

double parse_double(const std::string& s, const fs::path& path) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || (errno == ERANGE && std::isinf(v))) {
    throw IoError("bad number '" + s + "' in '" + path.string() + "'");
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string csv_header(Eigen::Index d) {
  std::string h = "trial,iter,branch";
  for (Eigen::Index i = 1; i <= d; ++i) h += ",x_" + std::to_string(i);
  return h + ",y,y_min,log_error,proposal_s,iter_s";
}

OutputPaths output_paths(const fs::path& records, OutputFormat format) {
  const std::string ext = records.has_extension() ? records.extension().string()
                                                  : (format == OutputFormat::Csv ? ".csv" : ".jsonl");
  return {records, sibling(records, ".summary", ext), sibling(records, ".branches", ext),
          sibling(records, ".errors", ext)};
}

void check_writable(const fs::path& path) {
  if (path.empty()) throw IoError("output path is empty");
  std::error_code ec;
  if (fs::is_directory(path, ec)) throw IoError("output path '" + path.string() + "' is a directory");
  const bool existed = fs::exists(path, ec);
  {
    std::ofstream probe(path, std::ios::out | std::ios::app);
    if (!probe) throw IoError("cannot write to '" + path.string() + "'");
  }
  if (!existed) fs::remove(path, ec);
}

OutputPaths emit_results(const ExperimentResult& result, Eigen::Index d, OutputFormat format, const fs::path& path) {
  const OutputPaths p = output_paths(path, format);
  write_records(result, d, format, p.records);
  write_summary(result.stats, format, p.summary);
  write_branches(result.stats, format, p.branches);
  write_errors(result.stats, format, p.errors);
  return p;
}

std::vector<RecordRow> read_records(const fs::path& path, OutputFormat format) {
  const auto lines = read_lines(path);
  std::vector<RecordRow> out;
  if (format == OutputFormat::Csv) {
    if (lines.empty()) throw IoError("'" + path.string() + "' has no header");
    const auto header = split_csv(lines[0]);
    if (header.size() < 9) throw IoError("'" + path.string() + "' has a malformed header");
    const std::size_t d = header.size() - 8;
    if (lines[0] != csv_header(static_cast<Eigen::Index>(d))) {
      throw IoError("'" + path.string() + "' has an unexpected header");
    }
    for (std::size_t l = 1; l < lines.size(); ++l) {
      const auto f = split_csv(lines[l]);
      if (f.size() != header.size()) throw IoError("wrong field count on line " + std::to_string(l + 1));
      RecordRow r;
      r.trial = std::stoi(f[0]);
      r.row.iter = std::stoi(f[1]);
      r.row.branch = parse_branch(f[2]);
      r.row.x.resize(static_cast<Eigen::Index>(d));
      for (std::size_t i = 0; i < d; ++i) r.row.x[static_cast<Eigen::Index>(i)] = parse_double(f[3 + i], path);
      r.row.y = parse_double(f[3 + d], path);
      r.row.y_min = parse_double(f[4 + d], path);
      if (!f[5 + d].empty()) r.row.log_error = parse_double(f[5 + d], path);
      r.row.proposal_s = parse_double(f[6 + d], path);
      r.row.iter_s = parse_double(f[7 + d], path);
      out.push_back(std::move(r));
    }
    return out;
  }
  for (const auto& line : lines) {
    try {
      const auto j = nlohmann::json::parse(line);
      RecordRow r;
      r.trial = j.at("trial").get<int>();
      r.row.iter = j.at("iter").get<int>();
      r.row.branch = parse_branch(j.at("branch").get<std::string>());
      Eigen::Index d = 0;
      while (j.contains("x_" + std::to_string(d + 1))) ++d;
      r.row.x.resize(d);
      for (Eigen::Index i = 0; i < d; ++i) r.row.x[i] = j.at("x_" + std::to_string(i + 1)).get<double>();
      r.row.y = j.at("y").get<double>();
      r.row.y_min = j.at("y_min").get<double>();
      if (!j.at("log_error").is_null()) r.row.log_error = j.at("log_error").get<double>();
      r.row.proposal_s = j.at("proposal_s").get<double>();
      r.row.iter_s = j.at("iter_s").get<double>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw IoError("malformed line in '" + path.string() + "': " + e.what());
    }
  }
  return out;
}

std::vector<IterationSummary> read_summary(const fs::path& path, OutputFormat format) {
  const auto lines = read_lines(path);
  std::vector<IterationSummary> out;
  if (format == OutputFormat::Csv) {
    if (lines.empty() || lines[0] != "iter,median,q1,q3,mean_proposal_s") {
      throw IoError("'" + path.string() + "' is not a summary file");
    }
    for (std::size_t l = 1; l < lines.size(); ++l) {
      const auto f = split_csv(lines[l]);
      if (f.size() != 5) throw IoError("wrong field count on line " + std::to_string(l + 1));
      IterationSummary s;
      s.iter = std::stoi(f[0]);
      s.median = parse_double(f[1], path);
      s.q1 = parse_double(f[2], path);
      s.q3 = parse_double(f[3], path);
      s.mean_proposal_s = parse_double(f[4], path);
      out.push_back(s);
    }
    return out;
  }
  for (const auto& line : lines) {
    try {
      const auto j = nlohmann::json::parse(line);
      IterationSummary s;
      s.iter = j.at("iter").get<int>();
      s.median = j.at("median").get<double>();
      s.q1 = j.at("q1").get<double>();
      s.q3 = j.at("q3").get<double>();
      s.mean_proposal_s = j.at("mean_proposal_s").get<double>();
      out.push_back(s);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("malformed line in '" + path.string() + "': " + e.what());
    }
  }
  return out;
}

}  // namespace epsts
