#ifndef SPANAGG_SESSION_HPP
#define SPANAGG_SESSION_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "spanagg/engine.hpp"
#include "spanagg/error.hpp"
#include "spanagg/feedback.hpp"

namespace spanagg {

using nlohmann::json;

enum class SessionStatus { collecting, incomplete, evaluating, awaiting_revision, converged, capped };

inline std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::collecting: return "collecting";
    case SessionStatus::incomplete: return "incomplete";
    case SessionStatus::evaluating: return "evaluating";
    case SessionStatus::awaiting_revision: return "awaiting-revision";
    case SessionStatus::converged: return "converged";
    case SessionStatus::capped: return "capped";
  }
  return "collecting";
}

inline SessionStatus parse_status(std::string_view s) {
  for (auto v : {SessionStatus::collecting, SessionStatus::incomplete, SessionStatus::evaluating,
                 SessionStatus::awaiting_revision, SessionStatus::converged, SessionStatus::capped}) {
    if (to_string(v) == s) return v;
  }
  throw Error(ErrorKind::parse, "unknown session status '" + std::string(s) + "'");
}

struct Expert {
  std::string id;
  std::string name;
  double competence = 1.0;
};

/// A judgment as it travels over the wire: expert by id, alternatives by
/// 0-based index.
struct JudgmentRecord {
  std::string expert;
  std::size_t i = 0;
  std::size_t j = 0;
  double grade = 1.0;
  int scale_grades = 9;
  Dominance direction = Dominance::row;
};

// ---------------------------------------------------------------- JSON codecs

namespace detail {

template <class T>
T field(const json& obj, const char* key, std::string_view where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorKind::parse, std::string(where) + ": missing field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::parse, std::string(where) + ": field '" + key + "' has the wrong type");
  }
}

template <class T>
T field_or(const json& obj, const char* key, T fallback, std::string_view where) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return fallback;
  return field<T>(obj, key, where);
}

}  // namespace detail

inline std::string_view to_string(Mean m) { return m == Mean::geometric ? "geometric" : "arithmetic"; }

inline Mean parse_mean(std::string_view s) {
  if (s == "geometric") return Mean::geometric;
  if (s == "arithmetic") return Mean::arithmetic;
  throw Error(ErrorKind::parse, "mean must be 'geometric' or 'arithmetic', got '" + std::string(s) + "'");
}

inline json config_to_json(const EngineConfig& c) {
  return json{{"epsilon", c.epsilon},
              {"threshold", c.threshold},
              {"cap", c.cap},
              {"mean", to_string(c.mean)},
              {"missing", c.missing == MissingCellPolicy::exclude ? "exclude" : "strict"},
              {"scales", c.scales.grades()}};
}

inline EngineConfig config_from_json(const json& j) {
  EngineConfig c;
  if (j.is_null()) return c;
  constexpr std::string_view where = "config";
  c.epsilon = detail::field_or<double>(j, "epsilon", c.epsilon, where);
  c.threshold = detail::field_or<double>(j, "threshold", c.threshold, where);
  c.cap = detail::field_or<std::size_t>(j, "cap", c.cap, where);
  c.mean = parse_mean(detail::field_or<std::string>(j, "mean", "geometric", where));
  const auto missing = detail::field_or<std::string>(j, "missing", "exclude", where);
  if (missing != "exclude" && missing != "strict") {
    throw Error(ErrorKind::parse, "config: missing must be 'exclude' or 'strict'");
  }
  c.missing = missing == "exclude" ? MissingCellPolicy::exclude : MissingCellPolicy::strict;
  if (j.contains("scales")) c.scales = ScaleRegistry(detail::field<std::vector<int>>(j, "scales", where));
  if (!(c.epsilon > 0.0) || c.epsilon > 0.5) throw Error(ErrorKind::domain, "epsilon must lie in (0, 0.5]");
  if (!(c.threshold >= 0.0) || c.threshold > 1.0) throw Error(ErrorKind::domain, "threshold must lie in [0, 1]");
  return c;
}

inline JudgmentRecord judgment_record_from_json(const json& j, std::string_view where) {
  JudgmentRecord r;
  if (!j.is_object()) throw Error(ErrorKind::parse, std::string(where) + ": judgment must be an object");
  const json& e = j.contains("expert") ? j.at("expert") : json();
  if (e.is_string()) {
    r.expert = e.get<std::string>();
  } else {
    throw Error(ErrorKind::parse, std::string(where) + ": 'expert' must be an expert id string");
  }
  const auto index = [&](const char* key) {
    const json& v = j.contains(key) ? j.at(key) : json();
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw Error(ErrorKind::parse, std::string(where) + ": '" + key + "' must be a non-negative integer");
    }
    return static_cast<std::size_t>(v.get<long long>());
  };
  r.i = index("i");
  r.j = index("j");
  r.grade = detail::field<double>(j, "grade", where);
  r.scale_grades = detail::field<int>(j, "scale_grades", where);
  const auto dir = detail::field_or<std::string>(j, "direction", "row", where);
  if (dir != "row" && dir != "column") {
    throw Error(ErrorKind::parse, std::string(where) + ": direction must be 'row' or 'column'");
  }
  r.direction = dir == "row" ? Dominance::row : Dominance::column;
  return r;
}

/// Request and results payloads shared by the service and the CLI.
inline json request_to_json(const RevisionRequest& r, const std::vector<Expert>& experts,
                            const std::vector<std::string>& alternatives) {
  return json{{"request_id", r.id},
              {"expert", experts.at(r.expert).id},
              {"row", r.row},
              {"column", r.column},
              {"row_label", alternatives.at(r.row)},
              {"column_label", alternatives.at(r.column)},
              {"current_value", r.current_value},
              {"suggested_value", r.suggested_value},
              {"coordinate", r.coordinate},
              {"round", r.round},
              {"version", r.state_version}};
}

/// Status a freshly evaluated state settles in: `rounds` revisions have
/// already been answered and `cap` is the limit.
inline SessionStatus status_after(const Evaluation& ev, std::size_t rounds, std::size_t cap) {
  if (!ev.ready()) return SessionStatus::incomplete;
  if (ev.agreement->passing) return SessionStatus::converged;
  if (rounds >= cap) return SessionStatus::capped;
  return SessionStatus::awaiting_revision;
}

inline json results_to_json(const Evaluation& ev, SessionStatus status, const std::vector<Expert>& experts) {
  json r;
  r["status"] = to_string(status);
  r["w"] = ev.ready() ? ev.aggregate->w.w : std::vector<double>{};
  r["K"] = ev.ready() ? ev.agreement->K : std::vector<double>{};
  if (ev.ready()) {
    r["threshold"] = ev.agreement->threshold;
    r["passing"] = ev.agreement->passing;
    r["worst_coordinate"] = ev.agreement->worst_coordinate;
    r["w_simple"] = ev.simple->w;
    r["trees"] = ev.aggregate->T;
    r["ratings"] = ev.aggregate->T_star;
  }
  r["trees_per_expert"] = ev.trees_per_expert;
  json edges = json::array();
  for (auto [i, j] : ev.completeness.suggested_edges) edges.push_back({i, j});
  r["suggested_edges"] = edges;
  json disconnected = json::array();
  for (std::size_t k : ev.completeness.disconnected_experts()) disconnected.push_back(experts.at(k).id);
  r["disconnected_experts"] = disconnected;
  return r;
}

// ------------------------------------------------------------------- Session

/// One facilitation: roster, judgments, configuration, the facilitation
/// state and an append-only event history. Every mutation is expressed as an
/// event and applied through `apply`, so replaying the history rebuilds the
/// session exactly.
class Session {
 public:
  std::string id;
  std::vector<std::string> alternatives;
  std::vector<Expert> experts;
  FacilitationState state;
  SessionStatus status = SessionStatus::collecting;
  std::optional<json> results;
  std::optional<std::string> note;
  std::vector<json> events;

  std::size_t n() const noexcept { return alternatives.size(); }
  std::uint64_t version() const noexcept { return state.version; }
  const EngineConfig& config() const noexcept { return state.config; }

  std::size_t expert_index(std::string_view expert_id) const {
    for (std::size_t k = 0; k < experts.size(); ++k)
      if (experts[k].id == expert_id) return k;
    throw Error(ErrorKind::not_found, "unknown expert '" + std::string(expert_id) + "'");
  }

  /// Judgments with the dominant alternative first, as stored in files.
  json judgments_json() const {
    json out = json::array();
    for (const auto& jd : state.group.judgments) {
      const bool row = jd.direction == Dominance::row;
      out.push_back(json{{"expert", experts.at(jd.expert).id},
                         {"i", row ? jd.i : jd.j},
                         {"j", row ? jd.j : jd.i},
                         {"grade", jd.grade},
                         {"scale_grades", jd.scale.grades}});
    }
    return out;
  }

  /// The session file document.
  json document() const {
    json ex = json::array();
    for (const auto& e : experts) ex.push_back(json{{"id", e.id}, {"name", e.name}, {"competence", e.competence}});
    json doc;
    doc["version"] = state.version;
    doc["id"] = id;
    doc["alternatives"] = alternatives;
    doc["experts"] = ex;
    doc["config"] = config_to_json(state.config);
    doc["judgments"] = judgments_json();
    doc["status"] = to_string(status);
    doc["round"] = state.round;
    doc["results"] = results ? *results : json(nullptr);
    doc["revision"] = state.open_request ? request_to_json(*state.open_request, experts, alternatives) : json(nullptr);
    if (note) doc["note"] = *note;
    doc["events"] = events;
    return doc;
  }

  /// Applies one event. Throws without touching *this on any error.
  void apply(const json& event) {
    Session next = *this;
    next.apply_in_place(event);
    next.events.push_back(event);
    *this = std::move(next);
  }

 private:
  void apply_in_place(const json& ev) {
    const auto type = detail::field<std::string>(ev, "type", "event");
    if (type == "created") {
      on_created(ev);
    } else if (type == "judgments") {
      on_judgments(ev);
    } else if (type == "evaluated") {
      on_evaluated();
    } else if (type == "revision") {
      on_revision(ev);
    } else {
      throw Error(ErrorKind::parse, "unknown event type '" + type + "'");
    }
  }

  void on_created(const json& ev) {
    if (!events.empty()) throw Error(ErrorKind::domain, "session already created");
    id = detail::field<std::string>(ev, "id", "created");
    alternatives = detail::field<std::vector<std::string>>(ev, "alternatives", "created");
    if (alternatives.size() < 2) throw Error(ErrorKind::domain, "at least 2 alternatives are required");
    for (std::size_t a = 0; a < alternatives.size(); ++a)
      for (std::size_t b = a + 1; b < alternatives.size(); ++b)
        if (alternatives[a] == alternatives[b]) {
          throw Error(ErrorKind::domain, "duplicate alternative label '" + alternatives[a] + "'");
        }
    const json& ex = ev.contains("experts") ? ev.at("experts") : json();
    if (!ex.is_array() || ex.empty()) throw Error(ErrorKind::domain, "at least 1 expert is required");
    double total = 0.0;
    for (const auto& e : ex) {
      Expert x;
      x.id = detail::field<std::string>(e, "id", "experts");
      x.name = detail::field_or<std::string>(e, "name", x.id, "experts");
      x.competence = detail::field_or<double>(e, "competence", 1.0, "experts");
      if (!(x.competence > 0.0) || !std::isfinite(x.competence)) {
        throw Error(ErrorKind::domain, "competence of expert '" + x.id + "' must be positive");
      }
      for (const auto& y : experts)
        if (y.id == x.id) throw Error(ErrorKind::domain, "duplicate expert id '" + x.id + "'");
      total += x.competence;
      experts.push_back(x);
    }
    // Competences are stored exactly as given when they already sum to 1.
    if (std::abs(total - 1.0) > 1e-12)
      for (auto& e : experts) e.competence /= total;
    state = FacilitationState{};
    state.config = config_from_json(ev.contains("config") ? ev.at("config") : json());
    state.group.n = alternatives.size();
    for (const auto& e : experts) state.group.competences.push_back(e.competence);
    status = SessionStatus::collecting;
  }

  void on_judgments(const json& ev) {
    const json& list = ev.contains("judgments") ? ev.at("judgments") : json();
    if (!list.is_array()) throw Error(ErrorKind::parse, "judgments must be a list");
    const UnifiedScale unified = state.config.unified();
    std::vector<Judgment> incoming;
    for (std::size_t t = 0; t < list.size(); ++t) {
      const std::string where = "judgments[" + std::to_string(t) + "]";
      const auto rec = judgment_record_from_json(list[t], where);
      Judgment jd;
      jd.expert = expert_index(rec.expert);
      if (rec.i >= n() || rec.j >= n() || rec.i == rec.j) {
        throw Error(ErrorKind::invalid_judgment, where + ": pair " + pair_label(rec.i, rec.j) +
                                                     " is not a pair of distinct alternatives");
      }
      // Stored with the dominant alternative first.
      jd.i = rec.direction == Dominance::row ? rec.i : rec.j;
      jd.j = rec.direction == Dominance::row ? rec.j : rec.i;
      jd.grade = rec.grade;
      jd.scale = Scale{rec.scale_grades};
      if (!state.config.scales.contains(jd.scale)) {
        throw Error(ErrorKind::invalid_judgment,
                    where + ": scale with " + std::to_string(rec.scale_grades) + " grades is not registered");
      }
      try {
        unified_ratio(jd.grade, jd.scale, unified);
      } catch (const Error& e) {
        throw Error(e.kind(), where + ": " + e.what());
      }
      incoming.push_back(jd);
    }
    // Contradictions inside one submission are rejected, not silently merged.
    for (std::size_t k = 0; k < experts.size(); ++k) {
      std::vector<Judgment> mine;
      for (const auto& jd : incoming)
        if (jd.expert == k) mine.push_back(jd);
      try {
        build_pcm(mine, n(), unified, k);
      } catch (const Error& e) {
        std::string msg = e.what();
        if (auto at = msg.find(" of expert "); at != std::string::npos) msg.resize(at);
        throw Error(e.kind(), msg + " from expert '" + experts[k].id + "'");
      }
    }
    auto& js = state.group.judgments;
    for (const auto& jd : incoming) {
      const CellRef ref = cell_ref(jd.expert, jd.i, jd.j);
      auto it = std::find_if(js.begin(), js.end(),
                             [&](const Judgment& o) { return cell_ref(o.expert, o.i, o.j) == ref; });
      if (it == js.end()) {
        js.push_back(jd);
      } else {
        *it = jd;
      }
    }
    ++state.version;
    state.open_request.reset();
    state.resting_cell.reset();
    status = SessionStatus::collecting;
    results.reset();
    note.reset();
  }

  void on_evaluated() {
    ++state.version;
    state.open_request.reset();
    recompute();
  }

  void on_revision(const json& ev) {
    if (!state.open_request) throw Error(ErrorKind::not_found, "no revision request is open");
    const auto request_id = detail::field<std::uint64_t>(ev, "request_id", "revision");
    RevisionRequest req = *state.open_request;
    if (request_id != req.id) {
      throw Error(ErrorKind::version_conflict,
                  "revision request " + std::to_string(request_id) + " is not the open request");
    }
    const auto action = detail::field<std::string>(ev, "action", "revision");
    RevisionResponse resp;
    if (action == "accept") {
      resp.action = ResponseAction::accept;
    } else if (action == "decline") {
      resp.action = ResponseAction::decline;
    } else if (action == "value") {
      resp.action = ResponseAction::value;
      resp.value = detail::field<double>(ev, "value", "revision");
      if (ev.contains("scale_grades") && !ev.at("scale_grades").is_null()) {
        resp.scale = Scale{detail::field<int>(ev, "scale_grades", "revision")};
      }
    } else {
      throw Error(ErrorKind::parse, "action must be accept, value or decline");
    }
    state = apply_revision(std::move(state), req, resp);
    recompute();
  }

  // Evaluates the current state and, when agreement is still short, opens
  // the next revision request.
  void recompute() {
    const Evaluation ev = evaluate(state.group, state.config);
    status = status_after(ev, state.round, state.config.cap);
    note.reset();
    if (status == SessionStatus::awaiting_revision) {
      try {
        RevisionRequest req = select_revision_target(state, ev);
        ++state.next_request_id;
        state.open_request = req;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::escalate) throw;
        note = e.what();
      }
    }
    results = results_to_json(ev, status, experts);
  }
};

// ------------------------------------------------------------ session files

namespace detail {

inline std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t p = 0; p < std::min(byte, text.size()); ++p) {
    if (text[p] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

/// Parses JSON text; syntax errors carry "name:line:column".
inline json parse_json_text(std::string_view text, std::string_view name) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, col] = detail::line_and_column(text, at);
    // Drop the library prefix and its own position; ours replaces it.
    std::string msg = e.what();
    if (auto p = msg.find("parse error"); p != std::string::npos) {
      const auto colon = msg.find(": ", p);
      msg = colon == std::string::npos ? msg.substr(p) : msg.substr(colon + 2);
    }
    throw Error(ErrorKind::parse,
                std::string(name) + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  }
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::not_found, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Event that creates a session from a create request or a session file.
inline json created_event(const json& body, const std::string& id) {
  json ev{{"type", "created"}, {"id", id}};
  ev["alternatives"] = body.contains("alternatives") ? body.at("alternatives") : json::array();
  ev["experts"] = body.contains("experts") ? body.at("experts") : json::array();
  ev["config"] = body.contains("config") ? body.at("config") : json(nullptr);
  return ev;
}

/// Rebuilds a session from its event history.
inline Session replay(const std::vector<json>& events) {
  if (events.empty() || !events.front().is_object() || events.front().value("type", "") != "created") {
    throw Error(ErrorKind::parse, "event history must start with a 'created' event");
  }
  Session s;
  for (const auto& ev : events) s.apply(ev);
  return s;
}

/// Loads a session file. A file with an event history is replayed; a bare
/// file (roster, config, judgments) is imported as a fresh session.
inline Session session_from_document(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::parse, "session file must be a JSON object");
  if (doc.contains("events") && doc.at("events").is_array() && !doc.at("events").empty()) {
    return replay(doc.at("events").get<std::vector<json>>());
  }
  Session s;
  s.apply(created_event(doc, doc.value("id", std::string("session"))));
  if (doc.contains("judgments")) s.apply(json{{"type", "judgments"}, {"judgments", doc.at("judgments")}});
  if (doc.contains("round") && doc.at("round").is_number_unsigned()) {
    s.state.round = doc.at("round").get<std::size_t>();
  }
  return s;
}

inline Session load_session_file(const std::filesystem::path& path) {
  return session_from_document(parse_json_text(read_text(path), path.string()));
}

// -------------------------------------------------------------- session store

/// Sessions held in memory, optionally persisted under a data directory as
/// <id>.json (current document) plus <id>.events.jsonl (append-only log).
/// Each session has its own reader/writer lock; different sessions never
/// contend.
class SessionStore {
 public:
  explicit SessionStore(std::optional<std::filesystem::path> data_dir = std::nullopt)
      : dir_(std::move(data_dir)) {
    if (!dir_) return;
    std::filesystem::create_directories(*dir_);
    for (const auto& entry : std::filesystem::directory_iterator(*dir_)) {
      const auto name = entry.path().filename().string();
      const std::string suffix = ".events.jsonl";
      if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
        continue;
      }
      auto slot = std::make_shared<Slot>();
      slot->session = replay(read_log(entry.path()));
      sessions_[slot->session.id] = slot;
    }
  }

  /// Creates a session from {id?, alternatives, experts, config}.
  json create(const json& body) {
    std::unique_lock lock(map_mutex_);
    std::string id = body.is_object() && body.contains("id") ? detail::field<std::string>(body, "id", "session")
                                                              : next_id();
    if (id.empty() || id.find_first_of("/\\. ") != std::string::npos) {
      throw Error(ErrorKind::domain, "session id must be non-empty without '/', '\\', '.' or spaces");
    }
    if (sessions_.count(id)) throw Error(ErrorKind::domain, "session '" + id + "' already exists");
    auto slot = std::make_shared<Slot>();
    slot->session.apply(created_event(body, id));
    persist(slot->session, 0);
    sessions_[id] = slot;
    return slot->session.document();
  }

  /// Runs `f` on a copy of the session under its write lock, then commits
  /// the new events. An exception leaves the stored session unchanged.
  template <class F>
  json mutate(const std::string& id, F&& f) {
    auto slot = find(id);
    std::unique_lock lock(slot->mutex);
    Session next = slot->session;
    const std::size_t before = next.events.size();
    json out = f(next);
    persist(next, before);
    slot->session = std::move(next);
    return out;
  }

  template <class F>
  json read(const std::string& id, F&& f) const {
    auto slot = find(id);
    std::shared_lock lock(slot->mutex);
    return f(slot->session);
  }

  Session snapshot(const std::string& id) const {
    return read_session(id);
  }

  std::vector<std::string> ids() const {
    std::shared_lock lock(map_mutex_);
    std::vector<std::string> out;
    for (const auto& [k, v] : sessions_) out.push_back(k);
    return out;
  }

  // Operations of the wire API.

  json submit_judgments(const std::string& id, const json& judgments, std::optional<std::uint64_t> version) {
    return mutate(id, [&](Session& s) {
      check_version(s, version);
      s.apply(json{{"type", "judgments"}, {"judgments", judgments}});
      return json{{"version", s.version()}, {"status", to_string(s.status)},
                  {"judgments", s.state.group.judgments.size()}};
    });
  }

  json evaluate(const std::string& id, std::optional<std::uint64_t> version = std::nullopt) {
    return mutate(id, [&](Session& s) {
      check_version(s, version);
      s.apply(json{{"type", "evaluated"}});
      return evaluation_view(s);
    });
  }

  json agreement(const std::string& id) const {
    return read(id, [](const Session& s) {
      if (!s.results) throw Error(ErrorKind::no_data, "session has not been evaluated");
      json out = *s.results;
      out["version"] = s.version();
      out["round"] = s.state.round;
      return out;
    });
  }

  json revision_request(const std::string& id) const {
    return read(id, [](const Session& s) {
      if (!s.state.open_request) {
        throw Error(ErrorKind::not_found, s.note ? *s.note : std::string("no revision request is open"));
      }
      return request_to_json(*s.state.open_request, s.experts, s.alternatives);
    });
  }

  /// body: {request_id, action, value?, scale_grades?, version}
  json respond_revision(const std::string& id, const json& body) {
    return mutate(id, [&](Session& s) {
      check_version(s, detail::field<std::uint64_t>(body, "version", "revision"));
      json ev{{"type", "revision"},
              {"request_id", detail::field<std::uint64_t>(body, "request_id", "revision")},
              {"action", detail::field<std::string>(body, "action", "revision")}};
      if (body.contains("value")) ev["value"] = body.at("value");
      if (body.contains("scale_grades")) ev["scale_grades"] = body.at("scale_grades");
      s.apply(ev);
      return evaluation_view(s);
    });
  }

  static json evaluation_view(const Session& s) {
    json out{{"version", s.version()}, {"status", to_string(s.status)}, {"round", s.state.round}};
    out["results"] = s.results ? *s.results : json(nullptr);
    out["revision"] = s.state.open_request ? request_to_json(*s.state.open_request, s.experts, s.alternatives)
                                           : json(nullptr);
    if (s.note) out["note"] = *s.note;
    return out;
  }

 private:
  struct Slot {
    mutable std::shared_mutex mutex;
    Session session;
  };

  static void check_version(const Session& s, std::optional<std::uint64_t> expected) {
    if (expected && *expected != s.version()) {
      throw Error(ErrorKind::version_conflict, "session is at version " + std::to_string(s.version()) +
                                                   ", request was made against version " +
                                                   std::to_string(*expected));
    }
  }

  std::shared_ptr<Slot> find(const std::string& id) const {
    std::shared_lock lock(map_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorKind::not_found, "unknown session '" + id + "'");
    return it->second;
  }

  Session read_session(const std::string& id) const {
    auto slot = find(id);
    std::shared_lock lock(slot->mutex);
    return slot->session;
  }

  std::string next_id() const {
    for (std::size_t k = sessions_.size() + 1;; ++k) {
      std::string id = "s" + std::to_string(k);
      if (!sessions_.count(id)) return id;
    }
  }

  static std::vector<json> read_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::vector<json> events;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (line.empty()) continue;
      events.push_back(parse_json_text(line, path.string() + ":" + std::to_string(number)));
    }
    return events;
  }

  void persist(const Session& s, std::size_t from) const {
    if (!dir_) return;
    {
      std::ofstream log(*dir_ / (s.id + ".events.jsonl"), std::ios::app);
      for (std::size_t e = from; e < s.events.size(); ++e) log << s.events[e].dump() << '\n';
      if (!log) throw Error(ErrorKind::resource, "cannot append to the event log of '" + s.id + "'");
    }
    const auto doc = *dir_ / (s.id + ".json");
    const auto tmp = *dir_ / (s.id + ".json.tmp");
    {
      std::ofstream out(tmp);
      out << s.document().dump(2) << '\n';
      if (!out) throw Error(ErrorKind::resource, "cannot write the document of '" + s.id + "'");
    }
    std::filesystem::rename(tmp, doc);
  }

  std::optional<std::filesystem::path> dir_;
  mutable std::shared_mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
};

}  // namespace spanagg

#endif  // SPANAGG_SESSION_HPP
