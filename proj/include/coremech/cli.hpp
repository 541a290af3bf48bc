#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "coremech/analysis.hpp"
#include "coremech/instance_gen.hpp"
#include "coremech/market_io.hpp"
#include "coremech/report.hpp"
#include "coremech/validate.hpp"

namespace coremech {

// Exit codes, fixed for scriptability.
inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitMechanism = 4;
inline constexpr int kExitAnalysisFail = 5;

struct RunConfig {
  std::string input;
  std::vector<Mechanism> mechanisms;  // empty = auto (all, LMP skipped if inapplicable)
  bool mechanisms_none = false;       // explicit empty selection
  std::vector<std::string> checks;
  double epsilon = -1.0;
  MpcsMode mode = MpcsMode::kEnumerate;
  OutputFormat format = OutputFormat::kTable;
  std::uint64_t seed = 1;
  std::string out;      // output file; empty writes to the stream
  std::string out_dir;  // directory for report artefacts
};

namespace cli_detail {

inline int write_output(const RunConfig& config, const std::string& text, std::ostream& fallback,
                        std::ostream& diag) {
  if (config.out.empty()) {
    fallback << text;
    return kExitOk;
  }
  std::ofstream file(config.out, std::ios::binary);
  if (!file) {
    diag << "error: cannot write '" << config.out << "'\n";
    return kExitMechanism;
  }
  file << text;
  return kExitOk;
}

inline MpcsOptions mpcs_options_from(const RunConfig& config) {
  MpcsOptions options;
  options.epsilon = config.epsilon;
  options.mode = config.mode;
  return options;
}

struct LoadedMarket {
  MarketInstance instance;
  int exit_code = kExitOk;
};

inline LoadedMarket load_market(const RunConfig& config, std::ostream& diag) {
  LoadedMarket loaded;
  try {
    ParseResult parsed = parse_market_file(config.input);
    for (const auto& warning : parsed.warnings) diag << "warning: " << warning << "\n";
    const auto violations = validate_instance(parsed.instance);
    if (!violations.empty()) {
      for (const auto& violation : violations) {
        diag << "invalid scenario (" << violation.where << "): " << violation.message << "\n";
      }
      loaded.exit_code = kExitParse;
      return loaded;
    }
    loaded.instance = std::move(parsed.instance);
  } catch (const Error& e) {
    diag << "parse error: " << e.what() << "\n";
    loaded.exit_code = kExitParse;
  }
  return loaded;
}

}  // namespace cli_detail

// Clears the scenario under the selected mechanisms and renders payment
// tables with core-membership verdicts.
inline int cmd_clear(const RunConfig& config, std::ostream& out, std::ostream& diag) {
  using namespace cli_detail;
  LoadedMarket loaded = load_market(config, diag);
  if (loaded.exit_code != kExitOk) return loaded.exit_code;
  const MarketInstance& inst = loaded.instance;

  CoalitionEvaluator eval(inst);
  if (!eval.full().optimal()) {
    diag << "dispatch infeasible: the market cannot clear\n";
    return kExitInfeasible;
  }

  const bool auto_select = config.mechanisms.empty() && !config.mechanisms_none;
  std::vector<Mechanism> selected = config.mechanisms;
  if (auto_select) {
    selected = {Mechanism::kPayAsBid, Mechanism::kLmp, Mechanism::kVcg, Mechanism::kMpcs};
  }

  ClearReport report;
  report.title = inst.meta.title;
  for (const auto& bidder : inst.bidders) report.bidder_ids.push_back(bidder.id);
  report.dispatch = eval.full();

  std::optional<CoreDescription> core;
  if (inst.num_bidders() <= kCoalitionEnumerationBudget) {
    try {
      core = build_core(eval);
    } catch (const Error&) {
      core.reset();
    }
  }

  bool any_error = false;
  for (const Mechanism mech : selected) {
    MechanismRun run;
    run.mechanism = mech;
    if (auto_select && mech == Mechanism::kLmp && !lmp_applicable(inst)) {
      run.skipped = true;
      run.error = "not applicable (needs convex bids and balance multipliers)";
      report.runs.push_back(std::move(run));
      continue;
    }
    try {
      if (mech == Mechanism::kMpcs) {
        MpcsOutcome outcome = mpcs(eval, mpcs_options_from(config));
        run.outcome = std::move(outcome.outcome);
        run.mpcs_info = std::move(outcome.info);
      } else {
        run.outcome = clear_mechanism(eval, mech);
      }
      if (core) run.core = core_membership(*core, stacked_utilities(*run.outcome));
    } catch (const Error& e) {
      run.error = std::string(error_code_name(e.code())) + ": " + e.what();
      any_error = true;
    }
    report.runs.push_back(std::move(run));
  }

  const int write_rc = write_output(config, render_clear(report, config.format), out, diag);
  if (write_rc != kExitOk) return write_rc;
  return any_error ? kExitMechanism : kExitOk;
}

namespace cli_detail {

inline CheckResult run_check(const std::string& name, const MarketInstance& inst,
                             const RunConfig& config) {
  CheckResult result;
  result.name = name;
  std::ostringstream detail;
  const MpcsOptions mpcs_options = mpcs_options_from(config);
  try {
    if (name == "core") {
      CoalitionEvaluator eval(inst);
      CoreDescription core = build_core(eval);
      bool all_member = true;
      std::vector<Mechanism> mechs = {Mechanism::kPayAsBid, Mechanism::kMpcs};
      if (lmp_applicable(inst)) mechs.push_back(Mechanism::kLmp);
      for (const Mechanism mech : mechs) {
        CoreCheck check =
            core_membership(core, stacked_utilities(clear_mechanism(eval, mech, mpcs_options)));
        detail << mechanism_name(mech) << (check.member ? " in core" : " BLOCKED") << " (worst "
               << check.worst_violation << "); ";
        all_member = all_member && check.member;
      }
      CoreCheck vcg_check =
          core_membership(core, stacked_utilities(clear_mechanism(eval, Mechanism::kVcg)));
      detail << "vcg " << (vcg_check.member ? "in core" : "outside core");
      result.status = all_member ? CheckResult::Status::kPass : CheckResult::Status::kFail;
    } else if (name == "budget") {
      std::vector<Mechanism> mechs = {Mechanism::kPayAsBid, Mechanism::kMpcs};
      if (lmp_applicable(inst)) mechs.push_back(Mechanism::kLmp);
      bool all_balanced = true;
      bool premise = true;
      for (const Mechanism mech : mechs) {
        BudgetVerdict verdict = check_budget_balance(inst, mech, mpcs_options);
        premise = verdict.premise_holds && verdict.exchange;
        detail << mechanism_name(mech) << " u0=" << verdict.operator_utility << "; ";
        all_balanced = all_balanced && verdict.balanced;
      }
      if (!premise) {
        result.status = CheckResult::Status::kSkip;
        detail << "premise violated (needs an exchange with -J >= 0), no theorem claim";
      } else {
        result.status =
            all_balanced ? CheckResult::Status::kPass : CheckResult::Status::kFail;
      }
    } else if (name == "lmp_vs_vcg") {
      bool dominated = true;
      for (const auto& row : compare_lmp_vcg(inst)) {
        dominated = dominated && row.dominated;
        detail << inst.bidders[row.bidder].id << ": " << row.lmp_payment << " <= "
               << row.vcg_payment << "; ";
      }
      result.status = dominated ? CheckResult::Status::kPass : CheckResult::Status::kFail;
    } else if (name == "replication") {
      ReplicationReport r2 = replication_identity(inst, 2);
      ReplicationReport r3 = replication_identity(inst, 3);
      detail << "q=2 gap " << r2.gap << ", q=3 gap " << r3.gap;
      result.status = r2.identity_holds && r3.identity_holds ? CheckResult::Status::kPass
                                                             : CheckResult::Status::kFail;
    } else if (name == "vcg_sign") {
      OperatorSignVerdict verdict = vcg_operator_sign(inst);
      detail << "vcg operator utility " << verdict.operator_utility;
      result.status =
          verdict.nonpositive ? CheckResult::Status::kPass : CheckResult::Status::kFail;
    } else if (name == "supermodularity") {
      SupermodularityReport report = supermodularity_check(inst);
      const bool trade = solve_dispatch(inst).objective < -1e-9;
      if (report.supermodular) {
        detail << "supermodular (degenerate, no exchange)";
        result.status = trade ? CheckResult::Status::kFail : CheckResult::Status::kPass;
      } else {
        std::vector<std::string> ids;
        for (const auto& bidder : inst.bidders) ids.push_back(bidder.id);
        detail << "witness S=" << report_detail::coalition_names(report.witness_s, ids)
               << " R=" << report_detail::coalition_names(report.witness_r, ids) << " bidder "
               << inst.bidders[report.witness_bidder].id;
        result.status = CheckResult::Status::kPass;
      }
    } else if (name == "incentive") {
      double total = 0.0;
      for (int l = 0; l < inst.num_bidders(); ++l) {
        const double bound = incentive_bound(inst, Mechanism::kMpcs, l, mpcs_options);
        total += bound;
        if (bound < -1e-6) result.status = CheckResult::Status::kFail;
      }
      detail << "total deviation incentive under mpcs " << total;
    } else if (name == "deviation") {
      const double eps = config.epsilon > 0 ? config.epsilon : 1e-6;
      DispatchResult dispatch = solve_dispatch(inst);
      int tested = 0;
      for (int l = 0; l < inst.num_bidders(); ++l) {
        if (!dispatch.winner(l)) continue;
        DeviationReport report =
            construct_optimal_deviation(inst, l, eps, Mechanism::kPayAsBid);
        ++tested;
        if (report.gap < -1e-6 || report.gap > eps + 1e-6) {
          result.status = CheckResult::Status::kFail;
          detail << inst.bidders[l].id << " gap " << report.gap << "; ";
        }
      }
      detail << tested << " winning bidders within the deviation window";
    } else if (name == "ce") {
      CoalitionEvaluator eval(inst);
      MpcsOutcome outcome = mpcs(eval, mpcs_options);
      PriceFunctionSet prices = build_ce_prices(inst, stacked_utilities(outcome.outcome));
      CeReport report = verify_ce(inst, outcome.outcome.dispatch, prices);
      detail << "bidder gap " << report.worst_bidder_gap << ", operator gap "
             << report.operator_gap;
      result.status = report.bidder_optimality && report.operator_optimality && report.efficient
                          ? CheckResult::Status::kPass
                          : CheckResult::Status::kFail;
    } else {
      result.status = CheckResult::Status::kSkip;
      detail << "unknown check";
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kUnsupportedStructure || e.code() == ErrorCode::kNonconvexBids ||
        e.code() == ErrorCode::kDualsUnavailable || e.code() == ErrorCode::kCapExceeded) {
      result.status = CheckResult::Status::kSkip;
      detail.str("");
      detail << error_code_name(e.code()) << ": " << e.what();
    } else {
      result.status = CheckResult::Status::kFail;
      detail.str("");
      detail << error_code_name(e.code()) << ": " << e.what();
    }
  }
  result.detail = detail.str();
  return result;
}

}  // namespace cli_detail

// Runs property checks against the scenario and prints one pass/fail/skip
// line per check.
inline int cmd_analyze(const RunConfig& config, std::ostream& out, std::ostream& diag) {
  using namespace cli_detail;
  LoadedMarket loaded = load_market(config, diag);
  if (loaded.exit_code != kExitOk) return loaded.exit_code;
  const MarketInstance& inst = loaded.instance;
  if (!solve_dispatch(inst).optimal()) {
    diag << "dispatch infeasible: the market cannot clear\n";
    return kExitInfeasible;
  }

  std::vector<std::string> checks = config.checks;
  if (checks.empty()) checks = {"core", "budget", "lmp_vs_vcg"};
  if (checks.size() == 1 && checks[0] == "all") {
    checks = {"core",           "budget",    "lmp_vs_vcg", "replication", "vcg_sign",
              "supermodularity", "incentive", "deviation",  "ce"};
  }

  std::vector<CheckResult> results;
  bool any_fail = false;
  for (const std::string& name : checks) {
    CheckResult result = run_check(name, inst, config);
    any_fail = any_fail || result.status == CheckResult::Status::kFail;
    results.push_back(std::move(result));
  }

  const int write_rc = write_output(config, render_checks(results, config.format), out, diag);
  if (write_rc != kExitOk) return write_rc;
  return any_fail ? kExitAnalysisFail : kExitOk;
}

// Emits comma-separated payment/utility matrices and plot-ready series.
inline int cmd_report(const RunConfig& config, std::ostream& out, std::ostream& diag) {
  using namespace cli_detail;
  LoadedMarket loaded = load_market(config, diag);
  if (loaded.exit_code != kExitOk) return loaded.exit_code;
  const MarketInstance& inst = loaded.instance;

  CoalitionEvaluator eval(inst);
  if (!eval.full().optimal()) {
    diag << "dispatch infeasible: the market cannot clear\n";
    return kExitInfeasible;
  }

  const bool auto_select = config.mechanisms.empty() && !config.mechanisms_none;
  std::vector<Mechanism> selected = config.mechanisms;
  if (auto_select) {
    selected = {Mechanism::kPayAsBid, Mechanism::kLmp, Mechanism::kVcg, Mechanism::kMpcs};
  }

  ClearReport report;
  report.title = inst.meta.title;
  for (const auto& bidder : inst.bidders) report.bidder_ids.push_back(bidder.id);
  report.dispatch = eval.full();

  std::optional<MpcsInfo> generation_info;
  for (const Mechanism mech : selected) {
    MechanismRun run;
    run.mechanism = mech;
    if (auto_select && mech == Mechanism::kLmp && !lmp_applicable(inst)) continue;
    try {
      if (mech == Mechanism::kMpcs) {
        MpcsOptions options = mpcs_options_from(config);
        options.mode = MpcsMode::kGenerate;  // the log is the point of the series
        MpcsOutcome outcome = mpcs(eval, options);
        run.outcome = outcome.outcome;
        generation_info = outcome.info;
      } else {
        run.outcome = clear_mechanism(eval, mech);
      }
    } catch (const Error& e) {
      diag << "note: " << mechanism_name(mech) << " skipped (" << e.what() << ")\n";
      continue;
    }
    report.runs.push_back(std::move(run));
  }

  const std::filesystem::path dir = config.out_dir.empty() ? "." : config.out_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    diag << "error: cannot create '" << dir.string() << "'\n";
    return kExitMechanism;
  }

  auto write_file = [&](const std::string& name, const std::string& content) -> bool {
    std::ofstream file(dir / name, std::ios::binary);
    if (!file) {
      diag << "error: cannot write '" << (dir / name).string() << "'\n";
      return false;
    }
    file << content;
    out << "wrote " << (dir / name).string() << "\n";
    return true;
  };

  if (!write_file("payments.csv", payments_matrix_csv(report))) return kExitMechanism;
  if (!write_file("utilities.csv", utilities_matrix_csv(report))) return kExitMechanism;
  if (generation_info) {
    if (!write_file("generation_log.csv", generation_log_csv(*generation_info, report.bidder_ids)))
      return kExitMechanism;
  }
  if (inst.num_bidders() == 2) {
    if (!write_file("core_polygon.csv", core_polygon_csv(eval))) return kExitMechanism;
  }
  return kExitOk;
}

}  // namespace coremech
