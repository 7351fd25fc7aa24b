#ifndef CHROMA_ADVERSARY_HPP_
#define CHROMA_ADVERSARY_HPP_

#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chroma/neighbor.hpp"
#include "chroma/protocol.hpp"
#include "chroma/subdivision.hpp"
#include "chroma/tasks.hpp"
#include "chroma/topology.hpp"

namespace chroma {

struct NotReached : TopologyError {
  using TopologyError::TopologyError;
};
struct NotCoPoised : TopologyError {
  using TopologyError::TopologyError;
};
struct NotChoosable : TopologyError {
  using TopologyError::TopologyError;
};
struct CannotFinalize : TopologyError {
  using TopologyError::TopologyError;
};
struct AuditFailure : TopologyError {
  using TopologyError::TopologyError;
};

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

/**
 * Active distance between two vertex sets in the 1-skeleton of a complex:
 * the minimum over connecting paths of the number of edges whose two
 * endpoints are both non-terminated (terminated = OUTPUT in delta).
 * kUnreachable when no path exists.
 */
int active_distance(const std::vector<Vertex>& a, const std::vector<Vertex>& b,
                    const ColoredComplex& k, const DecisionMap& delta);

// One terminated vertex: its output, the label justifying it, the complex
// index at termination time and which assignment rule fired.
struct TerminationRecord {
  std::string value;
  Label label;
  int level = 0;
  int rule = 0;  // 1 or 2
  int set_index = -1;     // informational; sets may merge later
  Simplex depth_facet_rm;  // the execution's depth-r_m facet at termination
};

/**
 * A maximal group of same-labelled terminated vertices grown by adjacency,
 * together with a materialized patch: all facets of the current complex
 * within the safety radius (in active distance) of the members. The patch
 * makes adjacency and short-distance queries exact without ever
 * materializing the full complex.
 */
struct TerminatedSet {
  Label label;
  std::vector<Vertex> members;
  std::vector<Simplex> patch;  // facets of S^t near the members
  // Active distance from the members to every patch vertex, under the
  // terminations at the time of the last refresh. Exact within the patch
  // radius; vertices outside the patch are farther than the radius.
  std::map<Vertex, int> dist;
};

struct TranscriptRecord {
  int phase = 1;
  std::string kind;  // "query" | "assignment" | "end-phase"
  std::string config_key;
  std::set<ProcessId> procs;
  std::string response;
  int t_after = 0;
  bool audit_ok = true;
  std::string note;
};
using Transcript = std::vector<TranscriptRecord>;

// A NULL answer to an assignment query, remembered so that no later
// termination makes the demanded outputs reachable after all: terminations
// inside the guarded window that match f are suppressed.
struct NullGuard {
  Configuration config;
  std::set<ProcessId> procs;
  std::map<ProcessId, std::string> f;
  int round_cap = 0;  // window: P-only continuations up to this round
};

struct QueryResponse {
  Configuration after;
  std::map<ProcessId, Decision> values;  // one per queried process
};

// A schedule returned by an assignment query, kept for the replay-stability
// audit: re-running it must reproduce the same outputs.
struct ReturnedAnswer {
  std::string from_key;
  Schedule schedule;
  std::map<ProcessId, std::string> expected;
};

/**
 * The adaptive protocol. It pretends to be a wait-free protocol while
 * terminating as few states as possible: every state below the current
 * subdivision index t is bottom unless an assignment rule terminated it,
 * and t advances whenever a query touches the frontier.
 */
struct AdversaryState {
  ColoredTask task;
  // One member per simple label; shared because states are cloned freely
  // while exploring assignment queries and the family is by far the
  // heaviest part.
  std::shared_ptr<const std::vector<PartialProtocol>> family;
  std::map<Label, int> family_index;
  int r_m = 2;
  int r_a = 1;
  int r_s = 1;
  int t = 0;
  int phase = 1;
  Schedule alpha;  // committed prefix of the eventual schedule

  std::shared_ptr<NeighborContext> ctx;  // depth-r_m machinery, shared
  std::map<std::string, Configuration> reached;
  std::map<Vertex, TerminationRecord> terminated;
  std::vector<TerminatedSet> sets;
  int last_rule1 = std::numeric_limits<int>::min() / 2;
  int last_rule2 = std::numeric_limits<int>::min() / 2;

  std::vector<NullGuard> null_guards;
  std::vector<ReturnedAnswer> answers;
  Transcript transcript;
  long audit_failures = 0;
  std::string first_audit_failure;

  Decision value_of(const Vertex& v) const;  // output if terminated, else ⊥
  const PartialProtocol& family_member(const Label& l) const;
};

// Precondition: every family member solves the task (the compatibility of
// the family is what makes the strategy safe; an incompatible family is
// accepted but will eventually fail an audit or finalization).
AdversaryState init_adversary(ColoredTask task,
                              std::vector<PartialProtocol> family, int r_a,
                              int r_s);

// Scheduling query: applies P to C, answers with the per-process decisions
// of the resulting configuration, terminating frontier states per the
// assignment rules. Throws NotReached / NotCoPoised.
QueryResponse handle_query(AdversaryState& st, const Configuration& c,
                           const std::set<ProcessId>& p);

/**
 * Assignment query (C, P, f): if the adversary can reach, by scheduling
 * only processes of P, a configuration whose outputs extend f, it commits
 * to one (mutating its state through ordinary queries) and returns the full
 * schedule from C; otherwise NULL, and the guard is recorded so no later
 * answer contradicts it.
 */
std::optional<Schedule> handle_assignment_query(
    AdversaryState& st, const Configuration& c, const std::set<ProcessId>& p,
    const std::map<ProcessId, std::string>& f);

// One bridging walk built during finalization: the foreign set's label, the
// walk of shared simplices ending at a concurrent-replay terminal, and the
// ring assignments' scope.
struct BridgeReport {
  Label foreign;
  std::vector<Simplex> walk;  // s_0 .. s_e in the shared complex at r_m
  int rings = 0;
};

/**
 * The protocol produced by finalization: total on F_{t_final}(label).
 * States terminated during the game keep their outputs; ring overrides
 * bridge foreign-labelled sets; every other execution runs bottom until
 * round t_final and then adopts the label protocol's decision of its
 * round-r_m ancestor.
 */
struct FinalizedProtocol {
  Label label;
  int r_m = 2;
  int t_final = 0;
  PartialProtocol base;              // the family member for the label
  std::map<Vertex, Decision> decided;  // game terminations + ring overrides
  std::vector<Simplex> audited;      // materialized facets, checked exactly
  std::vector<BridgeReport> bridges;

  Decision value(const Vertex& v) const;
};

// End-of-phase: the chosen configuration's first scheduled process set
// (with its inputs) becomes the committed label. Stages: extra subdivisions
// until every foreign set is far enough; a terminated ring around each
// foreign set; the layered walk to a shared replay terminal and back; the
// ancestor rule everywhere else. Throws NotChoosable / CannotFinalize.
FinalizedProtocol finalize(AdversaryState& st, const Configuration& c_chosen);

// Exact task audit of a finalized protocol: the label protocol must solve
// the task, and every materialized facet's outputs must lie in delta of its
// carrier. Returns the first violation, if any.
SolvesWitness finalized_solves(const FinalizedProtocol& fp,
                               const ColoredTask& t);

// ---------------------------------------------------------------------------
// Internals exposed for tests and the finalizer.

// The simple label of an execution: the inputs of the first scheduled set.
Label execution_label(const ColoredComplex& input, const Configuration& c);

// The input simplex a view has transitively seen (its carrier in the
// original input complex).
Simplex input_carrier(const Vertex& v);

// The depth-r_m facet of the execution so far: completed rounds keep their
// steps, processes late for a round are appended as one final block.
Simplex depth_facet(const Configuration& c, int r_m);

// All facets of S^t within the given active-distance radius of the seed
// vertices, built by levelwise local subdivision from the depth-r_m
// complex. `terminated` marks carried (non-subdividing) vertices.
std::vector<Simplex> local_ball(NeighborContext& ctx,
                                const std::map<Vertex, TerminationRecord>& term,
                                const std::vector<Vertex>& seeds, int t,
                                int radius);

// Active distance between two vertex sets inside an explicit facet patch.
int patch_distance(const std::vector<Simplex>& patch,
                   const std::vector<Vertex>& a, const std::vector<Vertex>& b,
                   const std::map<Vertex, TerminationRecord>& term);

}  // namespace chroma

#endif  // CHROMA_ADVERSARY_HPP_
