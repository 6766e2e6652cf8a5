#include "prepmark/cli.hpp"

#include <signal.h>

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "prepmark/error.hpp"
#include "prepmark/ingest.hpp"
#include "prepmark/service.hpp"
#include "prepmark/simulate.hpp"

namespace prepmark {
namespace {

// Missing inputs are usage errors; everything else is a finding.
int exit_code_for(const Error& e) {
  return e.code() == errc::kIo ? kExitUsage : kExitFindings;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

int cmd_validate(const std::string& bank, bool as_json, std::ostream& out) {
  const ValidationReport r = validate_bank_file(bank);
  if (as_json) {
    out << json_body(report_to_json(r));
  } else {
    for (const auto& e : r.errors) out << fmt::format("error: {}: {}\n", e.template_id, e.message);
    for (const auto& w : r.warnings) out << fmt::format("warning: {}\n", w);
    out << (r.ok ? "ok\n" : fmt::format("{} error(s)\n", r.errors.size()));
  }
  return r.ok ? kExitOk : kExitFindings;
}

// Input: one JSON object per line with student, template, part (letter or
// full id), response and an optional seed. Output: CSV, one row per line.
int cmd_grade(const std::string& bank_path, const std::string& responses_path, std::ostream& out) {
  const Bank bank = load_bank(bank_path);
  std::istringstream in(read_text_file(responses_path));
  out << "student,template,part,score,correct,feedback_key,flags\n";
  std::string line;
  int lineno = 0;
  int findings = 0;
  std::map<std::pair<std::string, std::uint64_t>, QuestionInstance> cache;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json row;
    try {
      row = json::parse(line);
      if (!row.is_object()) throw Error(errc::kFileFormat, "not an object");
    } catch (const std::exception& e) {
      throw Error(errc::kFileFormat, fmt::format("{} line {}: {}", responses_path, lineno, e.what()));
    }
    const std::string student = row.value("student", "");
    const std::string tid = row.value("template", "");
    std::string part_id = row.value("part", "");
    GradeOutcome o;
    try {
      const QuestionTemplate& t = bank.find(tid);
      const std::uint64_t seed = row.contains("seed") ? row["seed"].get<std::uint64_t>()
                                                      : student_seed(student, tid);
      auto key = std::make_pair(tid, seed);
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, instantiate(t, seed)).first;
      if (part_id.find('.') == std::string::npos) part_id = tid + "." + part_id;
      const InstancePart* part = nullptr;
      for (const auto& p : it->second.parts) {
        if (p.id == part_id) part = &p;
      }
      if (!part) throw Error(errc::kInvalidArgument, "unknown part '" + part_id + "'");
      if (!row.contains("response") || row["response"].is_null()) {
        o.feedback_key = feedback::kNoResponse;
      } else {
        o = grade(part->spec, response_from_json(part->kind, row["response"]));
      }
    } catch (const Error& e) {
      o = GradeOutcome{};
      o.feedback_key = feedback::kInvalidResponse;
      o.flags.insert(e.code());
      ++findings;
    }
    std::string flags;
    for (const auto& f : o.flags) flags += (flags.empty() ? "" : ";") + f;
    out << fmt::format("{},{},{},{},{},{},{}\n", csv_cell(student), csv_cell(tid), csv_cell(part_id),
                       o.score, o.correct ? "true" : "false", o.feedback_key, flags);
  }
  return findings == 0 ? kExitOk : kExitFindings;
}

int cmd_report(const std::string& store, bool followup, const std::string& now_text, std::ostream& out) {
  auto [session, seq] = replay(store);
  if (followup) {
    const Timestamp now = now_text.empty() ? now_utc() : parse_timestamp(now_text);
    out << followup_body(*session, now);
  } else {
    out << status_report_body(*session);
  }
  return kExitOk;
}

struct AnalyzeArgs {
  std::string store, marks, quals, tariff, scatter;
  bool as_json = false;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  auto [session, seq] = replay(a.store);
  const StoreLayout layout{a.store};
  std::string body, scatter;
  if (a.marks.empty() && a.quals.empty() && a.tariff.empty()) {
    body = correlations_body(*session, layout);
    scatter = scatter_body(*session, layout);
  } else {
    // explicit files override the store's ingest directory
    const std::string marks = a.marks.empty() ? layout.marks().string() : a.marks;
    const std::string quals = a.quals.empty() ? layout.quals().string() : a.quals;
    const std::string tariff = a.tariff.empty() ? layout.tariff().string() : a.tariff;
    std::map<std::string, double> ept;
    for (const auto& id : session->student_ids()) ept[id] = session->status(id).ept_score;
    const auto outcomes = build_outcomes(ept, parse_marks_csv(read_text_file(marks)),
                                         parse_quals_csv(read_text_file(quals)));
    const auto report = correlation_report(outcomes, load_tariff(tariff));
    json j = correlation_to_json(report);
    j["ept_mode"] = score_mode_name(session->cohort().ept_mode);
    j["table"] = format_correlation_table(report);
    body = json_body(j);
    scatter = scatter_export(outcomes);
  }
  const json j = json::parse(body);
  if (a.as_json) {
    out << body;
  } else {
    out << j["table"].get<std::string>();
  }
  const std::string scatter_path = a.scatter.empty() ? (layout.root / "scatter.csv").string() : a.scatter;
  write_text_file(scatter_path, scatter);
  if (!a.as_json) out << "scatter: " << scatter_path << "\n";
  for (const auto& row : j["rows"]) {
    if (row["r"].is_null()) return kExitFindings;
  }
  return kExitOk;
}

struct SimulateArgs {
  std::string bank, cohort, store, tariff;
  int students = 110;
  std::uint64_t seed = 1;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  init_store(a.store, a.bank, a.cohort);
  Store store(a.store, StoreOptions{.fsync = false, .snapshot_every = 0});
  if (store.event_count() != 0) {
    throw Error(errc::kInvalidArgument, a.store + " already holds events; simulate needs a fresh store");
  }
  SimulationConfig cfg;
  cfg.students = a.students;
  cfg.seed = a.seed;
  const SimulationResult r = simulate(store, cfg);
  write_ingest_files(store, r);
  if (!a.tariff.empty()) write_text_file(store.layout().tariff().string(), read_text_file(a.tariff));
  out << fmt::format("simulated {} students, {} submitted attempts, {} events\n", r.student_ids.size(),
                     r.attempts, store.event_count());
  return kExitOk;
}

// Roster lines: student_id[,token]. Prints student_id,token.
int cmd_enroll(const std::string& store_dir, const std::string& roster, std::ostream& out) {
  Store store(store_dir);
  std::istringstream in(read_text_file(roster));
  std::string line;
  out << "student_id,token\n";
  const Timestamp now = now_utc();
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == "student_id" || line.rfind("student_id,", 0) == 0) continue;
    const auto comma = line.find(',');
    const std::string id = line.substr(0, comma);
    std::string token = comma == std::string::npos ? std::string() : line.substr(comma + 1);
    if (token.empty()) {
      std::random_device rd;
      std::uniform_int_distribution<std::uint64_t> dist;
      token = fmt::format("{:016x}{:016x}", dist(rd), dist(rd));
    }
    store.enroll(id, token, now);
    out << id << "," << token << "\n";
  }
  return kExitOk;
}

int cmd_verify(const std::string& store, std::ostream& out) {
  const bool ok = replay_verify(store);
  out << (ok ? "ok: snapshot matches the event log\n" : "mismatch: snapshot differs from the event log\n");
  return ok ? kExitOk : kExitFindings;
}

int cmd_serve(const ServiceConfig& config, std::ostream& out) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Server server(config);
  const int port = server.bind();
  out << fmt::format("listening on {}:{}\n", config.bind.substr(0, config.bind.rfind(':')), port)
      << std::flush;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.run();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"prepmark: preparatory test grading, sessions and analytics"};
  app.require_subcommand(1);

  std::string bank, cohort, store, responses, now, roster, config_path;
  bool as_json = false;

  auto* validate = app.add_subcommand("validate", "Check a question bank");
  validate->add_option("--bank", bank, "Bank file")->required();
  validate->add_flag("--json", as_json, "Machine-readable report");

  auto* grade = app.add_subcommand("grade", "Grade a file of responses");
  grade->add_option("--bank", bank, "Bank file")->required();
  grade->add_option("--responses", responses, "One JSON object per line")->required();

  bool followup = false, status = false;
  auto* report = app.add_subcommand("report", "Follow-up or status report from a store");
  report->add_option("--store", store, "Store directory")->required();
  auto* f1 = report->add_flag("--followup", followup, "Topics not passed by the deadline");
  auto* f2 = report->add_flag("--status", status, "Per-student pass map");
  f1->excludes(f2);
  report->add_option("--now", now, "Evaluation time (ISO-8601 UTC), default the current time");

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand("analyze", "Correlate EPT scores and tariffs with exam marks");
  analyze->add_option("--store", analyze_args.store, "Store directory")->required();
  analyze->add_option("--marks", analyze_args.marks, "student_id,module,mark");
  analyze->add_option("--quals", analyze_args.quals, "student_id,kind,subject_tag,grade");
  analyze->add_option("--tariff", analyze_args.tariff, "Tariff table");
  analyze->add_option("--scatter", analyze_args.scatter, "Scatter output, default <store>/scatter.csv");
  analyze->add_flag("--json", analyze_args.as_json, "Print the correlations document");

  SimulateArgs sim_args;
  auto* simulate_cmd = app.add_subcommand("simulate", "Populate a fresh store with a synthetic cohort");
  simulate_cmd->add_option("--bank", sim_args.bank, "Bank file")->required();
  simulate_cmd->add_option("--cohort", sim_args.cohort, "Cohort config")->required();
  simulate_cmd->add_option("--store", sim_args.store, "Store directory")->required();
  simulate_cmd->add_option("--students", sim_args.students, "Cohort size")->check(CLI::NonNegativeNumber);
  simulate_cmd->add_option("--seed", sim_args.seed, "Random seed");
  simulate_cmd->add_option("--tariff", sim_args.tariff, "Tariff table copied into the store");

  ServiceConfig overrides{"", "", "", "", ""};
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--config", config_path, "Service config file");
  serve->add_option("--store", overrides.store, "Store directory");
  serve->add_option("--bank", overrides.bank, "Bank file for a new store");
  serve->add_option("--cohort", overrides.cohort, "Cohort config for a new store");
  serve->add_option("--bind", overrides.bind, "host:port");
  serve->add_option("--admin-token", overrides.admin_token, "Token for reports and analytics");

  auto* enroll = app.add_subcommand("enroll", "Enrol a roster and issue tokens");
  enroll->add_option("--store", store, "Store directory")->required();
  enroll->add_option("--roster", roster, "Lines of student_id[,token]")->required();

  auto* verify = app.add_subcommand("verify", "Check the snapshot against the event log");
  verify->add_option("--store", store, "Store directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*validate) {
      if (!fs::exists(bank)) throw Error(errc::kIo, "cannot open " + bank);
      return cmd_validate(bank, as_json, out);
    }
    if (*grade) return cmd_grade(bank, responses, out);
    if (*report) {
      if (followup == status) {
        err << "report needs exactly one of --followup or --status\n";
        return kExitUsage;
      }
      return cmd_report(store, followup, now, out);
    }
    if (*analyze) return cmd_analyze(analyze_args, out);
    if (*simulate_cmd) return cmd_simulate(sim_args, out);
    if (*enroll) return cmd_enroll(store, roster, out);
    if (*verify) return cmd_verify(store, out);
    if (*serve) {
      ServiceConfig config = load_service_config(config_path);
      if (!overrides.store.empty()) config.store = overrides.store;
      if (!overrides.bank.empty()) config.bank = overrides.bank;
      if (!overrides.cohort.empty()) config.cohort = overrides.cohort;
      if (!overrides.bind.empty()) config.bind = overrides.bind;
      if (!overrides.admin_token.empty()) config.admin_token = overrides.admin_token;
      return cmd_serve(config, out);
    }
  } catch (const Error& e) {
    err << fmt::format("error [{}]: {}\n", e.code(), e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFindings;
  }
  return kExitUsage;
}

}  // namespace prepmark
