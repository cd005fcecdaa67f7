// spanagg: offline evaluation of session files, convergence simulations and
// the facilitation service.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spanagg/http_api.hpp"
#include "spanagg/session.hpp"
#include "spanagg/simulate.hpp"

using namespace spanagg;

namespace {

constexpr int kExitError = 1;
constexpr int kExitIncomplete = 2;
constexpr int kExitBelowThreshold = 3;

struct EvaluateOptions {
  std::string file;
  std::optional<double> epsilon, threshold;
  std::optional<std::size_t> cap;
  std::optional<std::string> mean;
  std::string spectrums;
  bool json_out = false;
  std::string write;
};

std::string fixed4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

Session load_with_overrides(const EvaluateOptions& o) {
  json doc = parse_json_text(read_text(o.file), o.file);
  const bool overridden = o.epsilon || o.threshold || o.cap || o.mean;
  if (!overridden) return session_from_document(doc);
  json config = doc.contains("config") && doc["config"].is_object() ? doc["config"] : json::object();
  if (o.epsilon) config["epsilon"] = *o.epsilon;
  if (o.threshold) config["threshold"] = *o.threshold;
  if (o.cap) config["cap"] = *o.cap;
  if (o.mean) config["mean"] = *o.mean;
  doc["config"] = config;
  // The history was recorded under the old configuration, so only the roster
  // and judgments are carried over.
  doc.erase("events");
  return session_from_document(doc);
}

void write_spectrums(const Session& s, const std::filesystem::path& dir) {
  const Evaluation ev = evaluate(s.state.group, s.config());
  if (!ev.ready()) return;
  std::filesystem::create_directories(dir);
  for (std::size_t l = 0; l < ev.agreement->spectrums.size(); ++l) {
    std::ofstream out(dir / ("spectrum_" + std::to_string(l) + ".txt"));
    write_spectrum_table(out, ev.agreement->spectrums[l]);
  }
}

void print_report(const Session& s) {
  const json& r = *s.results;
  std::cout << "status: " << r["status"].get<std::string>() << '\n';
  const auto w = r["w"].get<std::vector<double>>();
  const auto K = r["K"].get<std::vector<double>>();
  if (w.empty()) {
    std::cout << "the comparison graph is disconnected; suggested comparisons:\n";
    for (const auto& e : r["suggested_edges"]) {
      const std::size_t a = e[0], b = e[1];
      std::cout << "  " << s.alternatives[a] << " vs " << s.alternatives[b] << '\n';
    }
    return;
  }
  double total = 0.0;
  std::cout << "alternative        w       K\n";
  for (std::size_t l = 0; l < w.size(); ++l) {
    total += w[l];
    std::string label = s.alternatives[l];
    label.resize(std::max<std::size_t>(label.size(), 14), ' ');
    std::cout << label << "  " << fixed4(w[l]) << "  " << fixed4(K[l]) << '\n';
  }
  std::cout << "sum             " << fixed4(total) << '\n';
  std::cout << "min K " << fixed4(K[r["worst_coordinate"].get<std::size_t>()]) << " (threshold "
            << r["threshold"].get<double>() << ")\n";
  if (s.state.open_request) {
    const auto& q = *s.state.open_request;
    std::cout << "revision: ask " << s.experts[q.expert].id << " to move " << s.alternatives[q.row] << " vs "
              << s.alternatives[q.column] << " from " << fixed4(q.current_value) << " to "
              << fixed4(q.suggested_value) << '\n';
  }
  if (s.note) std::cout << "note: " << *s.note << '\n';
}

int run_evaluate(const EvaluateOptions& o) {
  Session s = load_with_overrides(o);
  s.apply(json{{"type", "evaluated"}});
  if (o.json_out) {
    std::cout << s.results->dump() << '\n';
  } else {
    print_report(s);
  }
  if (!o.spectrums.empty()) write_spectrums(s, o.spectrums);
  if (!o.write.empty()) {
    std::ofstream out(o.write);
    out << s.document().dump(2) << '\n';
    if (!out) throw Error(ErrorKind::resource, "cannot write " + o.write);
  }
  switch (s.status) {
    case SessionStatus::converged: return 0;
    case SessionStatus::incomplete: return kExitIncomplete;
    default: return kExitBelowThreshold;
  }
}

struct SimulateOptions {
  SimulationSpec spec;
  std::string policy = "accept";
  std::string mean = "geometric";
  std::vector<int> habits;
  std::vector<double> truth;
  bool trace = false;
  bool json_out = false;
};

int run_simulate(SimulateOptions o) {
  if (o.policy == "accept") {
    o.spec.policy = CompliancePolicy::accept;
  } else if (o.policy == "decline") {
    o.spec.policy = CompliancePolicy::decline;
  } else if (o.policy == "compromise") {
    o.spec.policy = CompliancePolicy::compromise;
  } else {
    throw Error(ErrorKind::parse, "policy must be accept, decline or compromise");
  }
  o.spec.config.mean = parse_mean(o.mean);
  o.spec.scale_habits = o.habits;
  if (!o.truth.empty()) o.spec.truth = o.truth;
  const SimulationSummary sum = simulate(o.spec);

  if (o.json_out) {
    json runs = json::array();
    for (const auto& r : sum.runs) {
      json rounds = json::array();
      for (const auto& rec : r.trace.rounds) {
        json x{{"round", rec.round}, {"min_K", rec.min_index}, {"worst_coordinate", rec.worst_coordinate}};
        if (rec.request) {
          x["expert"] = rec.request->expert;
          x["row"] = rec.request->row;
          x["column"] = rec.request->column;
          x["current_value"] = rec.request->current_value;
          x["suggested_value"] = rec.request->suggested_value;
          x["response"] = to_string(rec.response->action);
        }
        rounds.push_back(x);
      }
      runs.push_back(json{{"seed", r.seed}, {"status", to_string(r.trace.status)}, {"revisions", r.trace.revisions()},
                          {"linf_error", r.linf_error}, {"truth", r.truth},
                          {"w", r.trace.final_w ? r.trace.final_w->w : std::vector<double>{}},
                          {"trace", o.trace ? rounds : json(nullptr)}});
    }
    std::cout << json{{"runs", runs},
                      {"converged", sum.converged},
                      {"converged_fraction", sum.converged_fraction},
                      {"mean_rounds", sum.mean_rounds},
                      {"max_rounds", sum.max_rounds},
                      {"max_error", sum.max_error}}
                     .dump(2)
              << '\n';
    return 0;
  }

  for (const auto& r : sum.runs) {
    std::cout << "seed " << r.seed << ": " << to_string(r.trace.status) << " after " << r.trace.revisions()
              << " revisions, L-inf error " << fixed4(r.linf_error) << '\n';
    if (!o.trace) continue;
    for (const auto& rec : r.trace.rounds) {
      std::cout << "  round " << rec.round << "  min K " << fixed4(rec.min_index) << "  worst " << rec.worst_coordinate;
      if (rec.request) {
        std::cout << "  ask expert " << rec.request->expert << " (" << rec.request->row << "," << rec.request->column
                  << ") " << fixed4(rec.request->current_value) << " -> " << fixed4(rec.request->suggested_value)
                  << "  " << to_string(rec.response->action);
      }
      std::cout << '\n';
    }
  }
  std::cout << "converged " << sum.converged << "/" << sum.runs.size() << " (" << fixed4(sum.converged_fraction)
            << "), mean revisions " << fixed4(sum.mean_rounds) << ", max revisions " << sum.max_rounds
            << ", max L-inf error " << fixed4(sum.max_error) << '\n';
  return 0;
}

int run_serve(const std::string& host, int port, const std::string& data_dir) {
  std::optional<std::filesystem::path> dir;
  if (!data_dir.empty()) dir = data_dir;
  SessionStore store(dir);
  httplib::Server server;
  mount_session_api(server, store);
  std::cerr << "listening on " << host << ":" << port << '\n';
  if (!server.listen(host, port)) {
    std::cerr << "error: cannot listen on " << host << ":" << port << '\n';
    return kExitError;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group decisions from incomplete pairwise comparisons"};
  app.require_subcommand(1);

  EvaluateOptions eo;
  auto* ev = app.add_subcommand("evaluate", "Evaluate a session file");
  ev->add_option("file", eo.file, "Session file")->required()->check(CLI::ExistingFile);
  ev->add_option("--epsilon", eo.epsilon, "Spectrum grade width")->check(CLI::Range(1e-9, 0.5));
  ev->add_option("--threshold", eo.threshold, "Agreement threshold")->check(CLI::Range(0.0, 1.0));
  ev->add_option("--cap", eo.cap, "Maximum number of revision rounds");
  ev->add_option("--mean", eo.mean, "Aggregation mean")->check(CLI::IsMember({"geometric", "arithmetic"}));
  ev->add_option("--spectrums", eo.spectrums, "Directory for per-coordinate spectrum tables");
  ev->add_flag("--json", eo.json_out, "Print the results object as JSON");
  ev->add_option("--write", eo.write, "Write the evaluated session file here");

  SimulateOptions so;
  auto* sim = app.add_subcommand("simulate", "Run synthetic facilitations");
  sim->add_option("--n", so.spec.n, "Alternatives")->capture_default_str();
  sim->add_option("--m", so.spec.m, "Experts")->capture_default_str();
  sim->add_option("--seed", so.spec.seed, "First seed")->capture_default_str();
  sim->add_option("--runs", so.spec.runs, "Number of runs")->capture_default_str();
  sim->add_option("--jitter", so.spec.jitter, "Judgment noise in grades")->capture_default_str();
  sim->add_option("--truth", so.truth, "Ground-truth priorities (random when omitted)");
  sim->add_option("--scale-habits", so.habits, "Scale grades used by each expert");
  sim->add_option("--policy", so.policy, "accept, decline or compromise")->capture_default_str();
  sim->add_option("--fraction", so.spec.compromise_fraction, "Step of the compromise policy")->capture_default_str();
  sim->add_option("--epsilon", so.spec.config.epsilon, "Spectrum grade width")->capture_default_str();
  sim->add_option("--threshold", so.spec.config.threshold, "Agreement threshold")->capture_default_str();
  sim->add_option("--cap", so.spec.config.cap, "Maximum number of revision rounds")->capture_default_str();
  sim->add_option("--mean", so.mean, "Aggregation mean")->capture_default_str();
  sim->add_flag("--trace", so.trace, "Print every round");
  sim->add_flag("--json", so.json_out, "Print the summary as JSON");

  std::string host = "127.0.0.1", data_dir;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the facilitation service");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--data-dir", data_dir, "Persist sessions here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ev) return run_evaluate(eo);
    if (*sim) return run_simulate(so);
    if (*serve) return run_serve(host, port, data_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
