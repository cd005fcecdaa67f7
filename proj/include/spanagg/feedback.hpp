#ifndef SPANAGG_FEEDBACK_HPP
#define SPANAGG_FEEDBACK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spanagg/engine.hpp"
#include "spanagg/error.hpp"

namespace spanagg {

/// Ask expert `expert` to reconsider a(row, column), the most outlying
/// comparison in the row of the weakest priority coordinate.
struct RevisionRequest {
  std::uint64_t id = 0;
  std::size_t expert = 0;
  std::size_t row = 0;  // the failing coordinate
  std::size_t column = 0;
  double current_value = 1.0;
  double suggested_value = 1.0;
  std::size_t coordinate = 0;
  std::size_t round = 0;
  std::uint64_t state_version = 0;

  friend bool operator==(const RevisionRequest&, const RevisionRequest&) = default;
};

enum class ResponseAction { accept, value, decline };

inline std::string_view to_string(ResponseAction a) {
  switch (a) {
    case ResponseAction::accept: return "accept";
    case ResponseAction::value: return "value";
    case ResponseAction::decline: return "decline";
  }
  return "decline";
}

/// `value` is the new a(row, column) for ResponseAction::value. On a scale
/// coarser than the unified one it must be a whole grade (or its reciprocal).
struct RevisionResponse {
  ResponseAction action = ResponseAction::accept;
  double value = 1.0;
  std::optional<Scale> scale;

  friend bool operator==(const RevisionResponse&, const RevisionResponse&) = default;
};

struct CellRef {
  std::size_t expert = 0;
  std::size_t i = 0;  // i < j
  std::size_t j = 0;

  friend bool operator==(const CellRef&, const CellRef&) = default;
};

inline CellRef cell_ref(std::size_t expert, std::size_t a, std::size_t b) {
  return CellRef{expert, std::min(a, b), std::max(a, b)};
}

/// Mutable state of one facilitation: the group, its configuration and the
/// bookkeeping needed to reject stale responses.
struct FacilitationState {
  Group group;
  EngineConfig config;
  std::uint64_t version = 0;
  std::size_t round = 0;
  std::uint64_t next_request_id = 1;
  std::optional<RevisionRequest> open_request;
  /// Cell answered in the previous round; it is skipped for one round.
  std::optional<CellRef> resting_cell;
};

/// Targeting: in the row of the worst coordinate, the expert cell with
/// the largest |a_aggregate - a_expert|. Ties go to the lowest
/// (expert, column). If that row has nothing left to move, the next failing
/// coordinate is tried.
inline RevisionRequest select_revision_target(const FacilitationState& state, const Evaluation& ev) {
  if (!ev.ready()) throw Error(ErrorKind::no_data, "the group has not been aggregated");
  const auto& report = *ev.agreement;
  if (report.passing) throw Error(ErrorKind::domain, "agreement already passes the threshold");
  const auto& target = ev.aggregate->icpcm;
  const std::size_t n = state.group.n;

  std::vector<std::size_t> order(n);
  for (std::size_t l = 0; l < n; ++l) order[l] = l;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return report.K[a] < report.K[b]; });

  const double top = static_cast<double>(state.config.unified().grades);
  for (std::size_t l : order) {
    if (report.K[l] > report.threshold) break;
    std::optional<RevisionRequest> best;
    double best_dev = 0.0;
    for (std::size_t k = 0; k < ev.pcms.size(); ++k) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j == l || !ev.pcms[k].has(l, j)) continue;
        if (state.resting_cell && *state.resting_cell == cell_ref(k, l, j)) continue;
        const double current = ev.pcms[k].value(l, j);
        const double dev = std::abs(target(l, j) - current);
        if (dev <= 1e-12 * std::max(1.0, target(l, j))) continue;
        if (!best || dev > best_dev) {
          best_dev = dev;
          best = RevisionRequest{state.next_request_id, k, l, j, current,
                                 std::clamp(target(l, j), 1.0 / top, top), l, state.round,
                                 state.version};
        }
      }
    }
    if (best) return *best;
  }
  throw Error(ErrorKind::escalate,
              "no expert cell can move the failing coordinates; ask the facilitator to intervene");
}

namespace detail {

inline Judgment judgment_for_value(std::size_t expert, std::size_t row, std::size_t column,
                                   double value, Scale scale, UnifiedScale unified) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorKind::invalid_judgment, "revised value must be a positive ratio");
  }
  Judgment jd;
  jd.expert = expert;
  jd.i = row;
  jd.j = column;
  jd.scale = scale;
  jd.direction = value >= 1.0 ? Dominance::row : Dominance::column;
  jd.grade = value >= 1.0 ? value : 1.0 / value;
  if (scale.grades != unified.grades) {
    const double rounded = std::round(jd.grade);
    if (std::abs(rounded - jd.grade) < 1e-9) jd.grade = rounded;
  }
  unified_ratio(jd.grade, jd.scale, unified);  // validates range and integrality
  return jd;
}

}  // namespace detail

/// Applies an expert's answer to the open request and returns the next state.
/// Accepting stores the suggested value on the unified scale.
inline FacilitationState apply_revision(FacilitationState state, const RevisionRequest& request,
                                        const RevisionResponse& response) {
  if (!state.open_request || state.open_request->id != request.id ||
      request.state_version != state.version) {
    throw Error(ErrorKind::version_conflict, "revision request " + std::to_string(request.id) +
                                                 " is not the open request of this state");
  }
  const UnifiedScale unified = state.config.unified();
  if (response.action != ResponseAction::decline) {
    const double value =
        response.action == ResponseAction::accept ? request.suggested_value : response.value;
    Scale scale = response.action == ResponseAction::accept ? Scale{unified.grades}
                                                            : response.scale.value_or(Scale{unified.grades});
    if (!state.config.scales.contains(scale)) {
      throw Error(ErrorKind::invalid_judgment,
                  "scale with " + std::to_string(scale.grades) + " grades is not registered");
    }
    const Judgment revised =
        detail::judgment_for_value(request.expert, request.row, request.column, value, scale, unified);
    auto& js = state.group.judgments;
    const CellRef ref = cell_ref(request.expert, request.row, request.column);
    auto first = std::find_if(js.begin(), js.end(), [&](const Judgment& jd) {
      return cell_ref(jd.expert, jd.i, jd.j) == ref;
    });
    if (first == js.end()) {
      js.push_back(revised);
    } else {
      *first = revised;
      js.erase(std::remove_if(std::next(first), js.end(),
                              [&](const Judgment& jd) { return cell_ref(jd.expert, jd.i, jd.j) == ref; }),
               js.end());
    }
  }
  state.resting_cell = cell_ref(request.expert, request.row, request.column);
  state.open_request.reset();
  ++state.round;
  ++state.version;
  return state;
}

enum class TerminalStatus { converged, cap_reached, expert_declined, escalated, incomplete };

inline std::string_view to_string(TerminalStatus s) {
  switch (s) {
    case TerminalStatus::converged: return "converged";
    case TerminalStatus::cap_reached: return "cap-reached";
    case TerminalStatus::expert_declined: return "expert-declined";
    case TerminalStatus::escalated: return "escalated";
    case TerminalStatus::incomplete: return "incomplete";
  }
  return "incomplete";
}

struct RoundRecord {
  std::size_t round = 0;
  double min_index = 0.0;
  std::size_t worst_coordinate = 0;
  std::optional<RevisionRequest> request;
  std::optional<RevisionResponse> response;
};

struct ConvergenceTrace {
  std::vector<RoundRecord> rounds;
  TerminalStatus status = TerminalStatus::incomplete;
  std::optional<PriorityVector> final_w;
  std::vector<double> final_K;
  FacilitationState final_state;

  std::size_t revisions() const {
    std::size_t c = 0;
    for (const auto& r : rounds) c += r.request.has_value();
    return c;
  }
};

using Responder = std::function<RevisionResponse(const RevisionRequest&, const FacilitationState&)>;

namespace responders {

inline Responder accept_all() {
  return [](const RevisionRequest&, const FacilitationState&) {
    return RevisionResponse{ResponseAction::accept, 0.0, std::nullopt};
  };
}

inline Responder decline_all() {
  return [](const RevisionRequest&, const FacilitationState&) {
    return RevisionResponse{ResponseAction::decline, 0.0, std::nullopt};
  };
}

/// Moves a fraction of the way towards the suggestion in log space.
inline Responder compromise(double fraction) {
  return [fraction](const RevisionRequest& r, const FacilitationState&) {
    const double v = std::exp((1.0 - fraction) * std::log(r.current_value) +
                              fraction * std::log(r.suggested_value));
    return RevisionResponse{ResponseAction::value, v, std::nullopt};
  };
}

}  // namespace responders

/// Select, respond, apply, re-evaluate until the agreement passes or `cap`
/// revisions have been made.
inline ConvergenceTrace run_loop(FacilitationState state, const Responder& responder, std::size_t cap) {
  ConvergenceTrace trace;
  for (;;) {
    const Evaluation ev = evaluate(state.group, state.config);
    if (!ev.ready()) {
      trace.status = TerminalStatus::incomplete;
      break;
    }
    RoundRecord rec;
    rec.round = state.round;
    rec.min_index = ev.agreement->min_index();
    rec.worst_coordinate = ev.agreement->worst_coordinate;
    trace.final_w = ev.aggregate->w;
    trace.final_K = ev.agreement->K;
    if (ev.agreement->passing) {
      trace.rounds.push_back(rec);
      trace.status = TerminalStatus::converged;
      break;
    }
    if (trace.revisions() >= cap) {
      trace.rounds.push_back(rec);
      trace.status = TerminalStatus::cap_reached;
      break;
    }
    const bool after_decline = !trace.rounds.empty() && trace.rounds.back().response &&
                               trace.rounds.back().response->action == ResponseAction::decline;
    RevisionRequest req;
    try {
      req = select_revision_target(state, ev);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::escalate) throw;
      trace.rounds.push_back(rec);
      trace.status = after_decline ? TerminalStatus::expert_declined : TerminalStatus::escalated;
      break;
    }
    ++state.next_request_id;
    state.open_request = req;
    const RevisionResponse resp = responder(req, state);
    rec.request = req;
    rec.response = resp;
    trace.rounds.push_back(rec);
    state = apply_revision(std::move(state), req, resp);
  }
  trace.final_state = std::move(state);
  return trace;
}

}  // namespace spanagg

#endif  // SPANAGG_FEEDBACK_HPP
