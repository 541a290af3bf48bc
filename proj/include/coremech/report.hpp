#pragma once

#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "coremech/analysis.hpp"
#include "coremech/mechanisms.hpp"

namespace coremech {

enum class OutputFormat { kTable, kJson, kCsv };

inline std::optional<OutputFormat> parse_output_format(const std::string& name) {
  if (name == "table") return OutputFormat::kTable;
  if (name == "json" || name == "structured") return OutputFormat::kJson;
  if (name == "csv" || name == "comma-separated") return OutputFormat::kCsv;
  return std::nullopt;
}

inline std::optional<Mechanism> parse_mechanism(const std::string& name) {
  if (name == "pay_as_bid") return Mechanism::kPayAsBid;
  if (name == "lmp") return Mechanism::kLmp;
  if (name == "vcg") return Mechanism::kVcg;
  if (name == "mpcs") return Mechanism::kMpcs;
  return std::nullopt;
}

// One mechanism's clearing attempt: either an outcome or the error that
// stopped it, plus the core verdict when it was computed.
struct MechanismRun {
  Mechanism mechanism = Mechanism::kPayAsBid;
  std::optional<PaymentOutcome> outcome;
  std::optional<MpcsInfo> mpcs_info;
  std::optional<CoreCheck> core;
  std::string error;
  bool skipped = false;  // inapplicable under the auto mechanism selection
};

struct ClearReport {
  std::string title;
  std::vector<std::string> bidder_ids;
  DispatchResult dispatch;
  std::vector<MechanismRun> runs;
};

namespace report_detail {

// Currency cells print with one decimal in human tables; machine formats
// keep full precision.
inline std::string money(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << v;
  return os.str();
}

inline std::string quantity(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

inline std::string coalition_names(BidderMask mask, const std::vector<std::string>& ids) {
  std::string out = "{";
  bool first = true;
  for (std::size_t l = 0; l < ids.size(); ++l) {
    if (!mask_has(mask, static_cast<int>(l))) continue;
    if (!first) out += ",";
    out += ids[l];
    first = false;
  }
  return out + "}";
}

}  // namespace report_detail

inline std::string render_clear_table(const ClearReport& report) {
  using report_detail::coalition_names;
  using report_detail::money;
  using report_detail::quantity;
  std::ostringstream os;
  os << "scenario: " << (report.title.empty() ? "(untitled)" : report.title) << "\n";
  os << "dispatch objective: " << money(report.dispatch.objective) << "\n";
  os << "allocation:";
  for (std::size_t l = 0; l < report.bidder_ids.size(); ++l) {
    os << " " << report.bidder_ids[l] << "=" << quantity(report.dispatch.allocation[l](0));
  }
  os << "\n\n";

  os << std::left << std::setw(12) << "mechanism" << std::setw(10) << "bidder" << std::right
     << std::setw(12) << "allocation" << std::setw(12) << "payment" << std::setw(12) << "utility"
     << "\n";
  for (const auto& run : report.runs) {
    const std::string name = mechanism_name(run.mechanism);
    if (run.skipped) {
      os << std::left << std::setw(12) << name << "skipped: " << run.error << "\n";
      continue;
    }
    if (!run.outcome) {
      os << std::left << std::setw(12) << name << "error: " << run.error << "\n";
      continue;
    }
    const PaymentOutcome& out = *run.outcome;
    for (std::size_t l = 0; l < report.bidder_ids.size(); ++l) {
      os << std::left << std::setw(12) << name << std::setw(10) << report.bidder_ids[l]
         << std::right << std::setw(12) << quantity(out.dispatch.allocation[l](0))
         << std::setw(12) << money(out.payments[l]) << std::setw(12)
         << money(out.revealed_utilities[l]) << "\n";
    }
    os << std::left << std::setw(12) << name << std::setw(10) << "operator" << std::right
       << std::setw(12) << "" << std::setw(12) << "" << std::setw(12)
       << money(out.operator_utility) << "\n";
    if (run.core) {
      os << std::left << std::setw(12) << name << "core: "
         << (run.core->member ? "member" : "blocked") << " (worst violation "
         << money(run.core->worst_violation);
      if (!run.core->member && run.core->witness == CoreCheck::Witness::kCoalition) {
        os << " by coalition " << coalition_names(run.core->witness_coalition, report.bidder_ids);
      }
      os << ")\n";
    }
    if (run.mpcs_info && !run.mpcs_info->steps.empty()) {
      os << std::left << std::setw(12) << name << "generated rows: ";
      for (const auto& step : run.mpcs_info->steps) {
        os << coalition_names(step.coalition, report.bidder_ids) << " viol "
           << money(step.violation) << "; ";
      }
      os << "\n";
    }
  }
  return os.str();
}

inline std::string render_clear_csv(const ClearReport& report) {
  std::ostringstream os;
  os << "mechanism,bidder,allocation,payment,revealed_utility\n";
  os << std::setprecision(17);
  for (const auto& run : report.runs) {
    if (!run.outcome) continue;
    const PaymentOutcome& out = *run.outcome;
    for (std::size_t l = 0; l < report.bidder_ids.size(); ++l) {
      os << mechanism_name(run.mechanism) << "," << report.bidder_ids[l] << ","
         << out.dispatch.allocation[l](0) << "," << out.payments[l] << ","
         << out.revealed_utilities[l] << "\n";
    }
    os << mechanism_name(run.mechanism) << ",operator,,," << out.operator_utility << "\n";
  }
  return os.str();
}

inline std::string render_clear_json(const ClearReport& report) {
  nlohmann::ordered_json doc;
  doc["scenario"] = report.title;
  doc["objective"] = report.dispatch.objective;
  nlohmann::ordered_json allocation = nlohmann::ordered_json::object();
  for (std::size_t l = 0; l < report.bidder_ids.size(); ++l) {
    allocation[report.bidder_ids[l]] = report.dispatch.allocation[l](0);
  }
  doc["allocation"] = std::move(allocation);
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& run : report.runs) {
    nlohmann::ordered_json r;
    r["mechanism"] = mechanism_name(run.mechanism);
    if (run.skipped) {
      r["skipped"] = run.error;
    } else if (!run.outcome) {
      r["error"] = run.error;
    } else {
      const PaymentOutcome& out = *run.outcome;
      nlohmann::ordered_json payments = nlohmann::ordered_json::object();
      nlohmann::ordered_json utilities = nlohmann::ordered_json::object();
      for (std::size_t l = 0; l < report.bidder_ids.size(); ++l) {
        payments[report.bidder_ids[l]] = out.payments[l];
        utilities[report.bidder_ids[l]] = out.revealed_utilities[l];
      }
      r["payments"] = std::move(payments);
      r["revealed_utilities"] = std::move(utilities);
      r["operator_utility"] = out.operator_utility;
      if (run.core) {
        r["core_member"] = run.core->member;
        r["core_worst_violation"] = run.core->worst_violation;
      }
      if (run.mpcs_info) {
        r["epsilon"] = run.mpcs_info->epsilon;
        r["iterations"] = run.mpcs_info->iterations;
        r["rows_used"] = run.mpcs_info->rows_used.size();
      }
    }
    runs.push_back(std::move(r));
  }
  doc["mechanisms"] = std::move(runs);
  return doc.dump(2) + "\n";
}

inline std::string render_clear(const ClearReport& report, OutputFormat format) {
  switch (format) {
    case OutputFormat::kTable: return render_clear_table(report);
    case OutputFormat::kJson: return render_clear_json(report);
    case OutputFormat::kCsv: return render_clear_csv(report);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Analysis check results

struct CheckResult {
  std::string name;
  enum class Status { kPass, kFail, kSkip } status = Status::kPass;
  std::string detail;
};

inline const char* status_name(CheckResult::Status s) {
  switch (s) {
    case CheckResult::Status::kPass: return "pass";
    case CheckResult::Status::kFail: return "fail";
    case CheckResult::Status::kSkip: return "skip";
  }
  return "?";
}

inline std::string render_checks(const std::vector<CheckResult>& checks, OutputFormat format) {
  if (format == OutputFormat::kJson) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& check : checks) {
      nlohmann::ordered_json c;
      c["check"] = check.name;
      c["status"] = status_name(check.status);
      c["detail"] = check.detail;
      doc.push_back(std::move(c));
    }
    return doc.dump(2) + "\n";
  }
  std::ostringstream os;
  if (format == OutputFormat::kCsv) {
    os << "check,status,detail\n";
    for (const auto& check : checks) {
      std::string detail = check.detail;
      for (auto& ch : detail) {
        if (ch == ',') ch = ';';
      }
      os << check.name << "," << status_name(check.status) << "," << detail << "\n";
    }
    return os.str();
  }
  for (const auto& check : checks) {
    os << std::left << std::setw(18) << check.name << std::setw(6) << status_name(check.status)
       << " " << check.detail << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Plot-ready artefacts

// Vertices of the two-bidder core polygon in the (u1, u2) plane, ordered
// counterclockwise. The operator utility is eliminated through the equality.
inline std::vector<std::pair<double, double>> core_polygon_2d(CoalitionEvaluator& eval) {
  const MarketInstance& inst = eval.instance();
  if (inst.num_bidders() != 2) {
    throw Error(ErrorCode::kInvalidArgument, "core cross-sections need exactly two bidders");
  }
  const double grand = eval.full().objective;
  // Constraint lines a*u1 + b*u2 <= c.
  struct Half {
    double a, b, c;
  };
  std::vector<Half> halves = {{-1, 0, 0}, {0, -1, 0}};
  const double c1 = eval.value(0b10) - grand;   // u1 <= J(B_{-1}) - J
  const double c2 = eval.value(0b01) - grand;   // u2 <= J(B_{-2}) - J
  const double c12 = eval.value(0b00) - grand;  // u1 + u2 <= J(empty) - J
  if (std::isfinite(c1)) halves.push_back({1, 0, c1});
  if (std::isfinite(c2)) halves.push_back({0, 1, c2});
  if (std::isfinite(c12)) halves.push_back({1, 1, c12});

  std::vector<std::pair<double, double>> vertices;
  for (std::size_t i = 0; i < halves.size(); ++i) {
    for (std::size_t j = i + 1; j < halves.size(); ++j) {
      const double det = halves[i].a * halves[j].b - halves[j].a * halves[i].b;
      if (std::abs(det) < 1e-12) continue;
      const double u1 = (halves[i].c * halves[j].b - halves[j].c * halves[i].b) / det;
      const double u2 = (halves[i].a * halves[j].c - halves[j].a * halves[i].c) / det;
      bool feasible = true;
      for (const auto& h : halves) {
        feasible = feasible && h.a * u1 + h.b * u2 <= h.c + 1e-7 * std::max(1.0, std::abs(h.c));
      }
      if (!feasible) continue;
      bool duplicate = false;
      for (const auto& v : vertices) {
        duplicate = duplicate || (std::abs(v.first - u1) + std::abs(v.second - u2) < 1e-9);
      }
      if (!duplicate) vertices.emplace_back(u1, u2);
    }
  }
  double cx = 0.0, cy = 0.0;
  for (const auto& v : vertices) {
    cx += v.first;
    cy += v.second;
  }
  if (!vertices.empty()) {
    cx /= vertices.size();
    cy /= vertices.size();
  }
  std::sort(vertices.begin(), vertices.end(), [&](const auto& p, const auto& q) {
    return std::atan2(p.second - cy, p.first - cx) < std::atan2(q.second - cy, q.first - cx);
  });
  return vertices;
}

// Per-bidder payments across mechanisms as a CSV matrix.
inline std::string payments_matrix_csv(const ClearReport& report) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "bidder";
  for (const auto& run : report.runs) {
    if (run.outcome) os << "," << mechanism_name(run.mechanism);
  }
  os << "\n";
  for (std::size_t l = 0; l < report.bidder_ids.size(); ++l) {
    os << report.bidder_ids[l];
    for (const auto& run : report.runs) {
      if (run.outcome) os << "," << run.outcome->payments[l];
    }
    os << "\n";
  }
  os << "operator";
  for (const auto& run : report.runs) {
    if (run.outcome) os << "," << run.outcome->operator_utility;
  }
  os << "\n";
  return os.str();
}

inline std::string utilities_matrix_csv(const ClearReport& report) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "bidder";
  for (const auto& run : report.runs) {
    if (run.outcome) os << "," << mechanism_name(run.mechanism);
  }
  os << "\n";
  for (std::size_t l = 0; l < report.bidder_ids.size(); ++l) {
    os << report.bidder_ids[l];
    for (const auto& run : report.runs) {
      if (run.outcome) os << "," << run.outcome->revealed_utilities[l];
    }
    os << "\n";
  }
  return os.str();
}

inline std::string generation_log_csv(const MpcsInfo& info,
                                      const std::vector<std::string>& ids) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "iteration,coalition,violation\n";
  for (std::size_t i = 0; i < info.steps.size(); ++i) {
    os << (i + 1) << "," << report_detail::coalition_names(info.steps[i].coalition, ids) << ","
       << info.steps[i].violation << "\n";
  }
  return os.str();
}

inline std::string core_polygon_csv(CoalitionEvaluator& eval) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "u1,u2\n";
  for (const auto& vertex : core_polygon_2d(eval)) {
    os << vertex.first << "," << vertex.second << "\n";
  }
  return os.str();
}

}  // namespace coremech
