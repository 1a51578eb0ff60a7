#ifndef NUM_TRACE_HPP
#define NUM_TRACE_HPP

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "num/error.hpp"

namespace num {

/// One outer iteration: a Newton step for the interior-point solvers, a price update for dual decomposition.
struct TraceRow {
  std::size_t outer_iteration = 0;
  double gap = 0.0;                 // surrogate gap, or the dual-gap bound for dual decomposition
  std::optional<double> eta;        // exact duality gap when a dual-feasible point is at hand
  double r_dual = 0.0;
  double r_cent = 0.0;
  std::size_t inner_iterations = 0;
  std::string backend;
  double wall_time_ms = 0.0;

  bool operator==(const TraceRow&) const = default;
};

struct TraceMeta {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t m = 0;
  std::string solver;
  std::string gap_definition = "surrogate";
  std::string termination;
  std::map<std::string, std::string> config;

  bool operator==(const TraceMeta&) const = default;
};

class ConvergenceTrace {
 public:
  TraceMeta meta;

  void add_row(TraceRow row) {
    if (!rows_.empty() && row.outer_iteration <= rows_.back().outer_iteration) {
      throw ParameterError("trace rows must be strictly increasing in outer_iteration");
    }
    rows_.push_back(std::move(row));
  }

  const std::vector<TraceRow>& rows() const noexcept { return rows_; }
  bool empty() const noexcept { return rows_.empty(); }
  const TraceRow& back() const { return rows_.back(); }

  std::size_t total_inner_iterations() const {
    std::size_t total = 0;
    for (const auto& r : rows_) total += r.inner_iterations;
    return total;
  }

  double total_wall_time_ms() const {
    double total = 0.0;
    for (const auto& r : rows_) total += r.wall_time_ms;
    return total;
  }

  /// Equality ignoring wall-clock columns.
  bool same_numbers(const ConvergenceTrace& other) const {
    if (rows_.size() != other.rows_.size() || !(meta == other.meta)) return false;
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      TraceRow a = rows_[k];
      TraceRow b = other.rows_[k];
      a.wall_time_ms = b.wall_time_ms = 0.0;
      if (!(a == b)) return false;
    }
    return true;
  }

 private:
  std::vector<TraceRow> rows_;
};

enum class TraceFormat { Csv, Json };

inline constexpr const char* kTraceCsvHeader = "iter,gap,eta,r_dual,r_cent,inner,backend,ms";

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw ParseError("trailing characters in number '" + s + "'", line);
    return v;
  } catch (const std::logic_error&) {
    throw ParseError("bad number '" + s + "'", line);
  }
}

inline std::size_t parse_count(const std::string& s, std::size_t line) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ParseError("bad count '" + s + "'", line);
  return v;
}

}  // namespace detail

inline void write_trace_csv(const ConvergenceTrace& trace, std::ostream& out) {
  out << kTraceCsvHeader << '\n';
  for (const auto& r : trace.rows()) {
    char ms[32];
    std::snprintf(ms, sizeof ms, "%.3f", r.wall_time_ms);
    out << r.outer_iteration << ',' << detail::format_double(r.gap) << ','
        << (r.eta ? detail::format_double(*r.eta) : std::string()) << ',' << detail::format_double(r.r_dual)
        << ',' << detail::format_double(r.r_cent) << ',' << r.inner_iterations << ',' << r.backend << ',' << ms
        << '\n';
  }
}

/// Reads rows back from CSV; meta is not part of the CSV schema.
inline ConvergenceTrace read_trace_csv(std::istream& in) {
  ConvergenceTrace trace;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kTraceCsvHeader) throw ParseError("missing CSV header", line_no);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 8) throw ParseError("expected 8 columns", line_no);
    TraceRow row;
    row.outer_iteration = detail::parse_count(fields[0], line_no);
    row.gap = detail::parse_double(fields[1], line_no);
    if (!fields[2].empty()) row.eta = detail::parse_double(fields[2], line_no);
    row.r_dual = detail::parse_double(fields[3], line_no);
    row.r_cent = detail::parse_double(fields[4], line_no);
    row.inner_iterations = detail::parse_count(fields[5], line_no);
    row.backend = fields[6];
    row.wall_time_ms = detail::parse_double(fields[7], line_no);
    trace.add_row(std::move(row));
  }
  return trace;
}

inline nlohmann::json trace_to_json(const ConvergenceTrace& trace) {
  nlohmann::json meta = {
      {"seed", trace.meta.seed},
      {"n", trace.meta.n},
      {"m", trace.meta.m},
      {"solver", trace.meta.solver},
      {"gap_definition", trace.meta.gap_definition},
      {"termination", trace.meta.termination},
      {"config", trace.meta.config},
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : trace.rows()) {
    rows.push_back({
        {"iter", r.outer_iteration},
        {"gap", r.gap},
        {"eta", r.eta ? nlohmann::json(*r.eta) : nlohmann::json(nullptr)},
        {"r_dual", r.r_dual},
        {"r_cent", r.r_cent},
        {"inner", r.inner_iterations},
        {"backend", r.backend},
        {"ms", r.wall_time_ms},
    });
  }
  return {{"meta", meta}, {"rows", rows}};
}

inline ConvergenceTrace trace_from_json(const nlohmann::json& doc) {
  ConvergenceTrace trace;
  try {
    const auto& meta = doc.at("meta");
    trace.meta.seed = meta.at("seed").get<std::uint64_t>();
    trace.meta.n = meta.at("n").get<std::size_t>();
    trace.meta.m = meta.at("m").get<std::size_t>();
    trace.meta.solver = meta.at("solver").get<std::string>();
    trace.meta.gap_definition = meta.at("gap_definition").get<std::string>();
    trace.meta.termination = meta.at("termination").get<std::string>();
    trace.meta.config = meta.at("config").get<std::map<std::string, std::string>>();
    for (const auto& r : doc.at("rows")) {
      TraceRow row;
      row.outer_iteration = r.at("iter").get<std::size_t>();
      row.gap = r.at("gap").get<double>();
      if (!r.at("eta").is_null()) row.eta = r.at("eta").get<double>();
      row.r_dual = r.at("r_dual").get<double>();
      row.r_cent = r.at("r_cent").get<double>();
      row.inner_iterations = r.at("inner").get<std::size_t>();
      row.backend = r.at("backend").get<std::string>();
      row.wall_time_ms = r.at("ms").get<double>();
      trace.add_row(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what(), 0);
  }
  return trace;
}

inline void write_trace_json(const ConvergenceTrace& trace, std::ostream& out) {
  out << trace_to_json(trace).dump(2) << '\n';
}

inline ConvergenceTrace read_trace_json(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what(), 0);
  }
  return trace_from_json(doc);
}

inline void emit_trace(const ConvergenceTrace& trace, TraceFormat format, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  if (format == TraceFormat::Csv) {
    write_trace_csv(trace, out);
  } else {
    write_trace_json(trace, out);
  }
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace num

#endif  // NUM_TRACE_HPP
