#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "byzcount/adversary.hpp"
#include "byzcount/graph.hpp"
#include "byzcount/protocol.hpp"

namespace byzcount {

enum class Algorithm { basic, byzantine, baseline };

std::string to_string(Algorithm a);
std::string to_string(AlphaVariant v);

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ExperimentConfig {
  std::size_t n = 1024;
  unsigned d = 8;
  double delta = 1.0;
  double epsilon = 0.1;
  std::uint64_t seed = 1;
  Algorithm algorithm = Algorithm::basic;
  StrategySpec strategy;
  unsigned phase_cap = 0;  // 0: ceil(10 log2 n)
  SubphaseFactor subphase_factor;
  AlphaVariant alpha_variant = AlphaVariant::pseudocode;
  unsigned trials = 1;
  double band_lo = 0.25;
  double band_hi = 4.0;
  std::optional<unsigned> a_radius;  // default_a_radius() when unset
  unsigned baseline_rounds = 0;      // 0: until nothing changes

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

enum class Validation { protocol, fixture };

// Throws ConfigError naming the offending field. Fixture mode allows any even
// d >= 4 (so 3/d < delta still makes sense) and tiny n.
void validate(const ExperimentConfig& cfg, Validation mode = Validation::protocol);

unsigned effective_phase_cap(const ExperimentConfig& cfg);
std::uint64_t trial_seed(const ExperimentConfig& cfg, unsigned trial);

struct Band {
  double lo = 0.25;
  double hi = 4.0;
};

struct NodeOutcome {
  NodeId id;
  std::optional<unsigned> estimate;
  bool crashed = false;
  bool byzantine = false;
  std::string label;  // byzantine, non_tree_like, byz_unsafe, byz_safe
};

struct PhaseStats {
  unsigned phase = 0;
  unsigned alpha = 0;
  unsigned subphases = 0;
  std::uint64_t rounds = 0;
  std::uint64_t messages = 0;
  std::uint64_t queries = 0;
  std::size_t decided = 0;  // honest nodes deciding in this phase
};

enum class Termination { all_decided, phase_cap };

struct ExperimentResult {
  ExperimentConfig config;
  unsigned trial = 0;
  std::uint64_t seed = 0;  // per-trial root
  unsigned k = 0;
  unsigned a_radius = 0;

  std::vector<NodeOutcome> nodes;
  std::size_t byzantine = 0;
  std::size_t honest = 0;
  std::size_t crashed = 0;
  std::size_t deciders = 0;
  std::size_t non_deciders = 0;  // honest, uncrashed, undecided at the end
  std::size_t byz_safe = 0;
  double success_fraction = 0.0;
  double byz_safe_success_fraction = 0.0;

  std::uint64_t setup_rounds = 0;
  std::uint64_t rounds_total = 0;  // phases only
  std::uint64_t messages_total = 0;
  std::uint64_t tokens_sent = 0;
  std::uint64_t tokens_delivered = 0;
  std::uint64_t tokens_dropped = 0;
  std::uint64_t setup_messages = 0;
  std::uint64_t queries_total = 0;
  std::uint64_t answers_total = 0;
  std::uint64_t violations = 0;  // non-edge, spoofed or unencodable sends
  std::uint64_t malformed = 0;   // dropped by honest receivers
  std::uint64_t rejected = 0;    // failed provenance verification
  std::vector<PhaseStats> phases;
  Termination termination = Termination::all_decided;
  std::uint64_t transcript_hash = 0;
};

// success_fraction and byz_safe_success_fraction from per-node outcomes: the
// share of honest uncrashed nodes whose estimate lies in
// [lo log2 n, hi log2 n], with n = outcomes.size().
struct SuccessMetrics {
  std::size_t honest = 0;
  std::size_t crashed = 0;
  std::size_t deciders = 0;
  std::size_t non_deciders = 0;
  std::size_t byz_safe = 0;
  double success_fraction = 0.0;
  double byz_safe_success_fraction = 0.0;
};
SuccessMetrics collect_metrics(std::span<const NodeOutcome> outcomes, Band band);

std::vector<NodeOutcome> label_outcomes(std::span<const NodeState> states,
                                        const NodeClassification& c);

struct VerificationStep {
  unsigned index = 0;  // 1-based within the window
  bool is_query = true;
  unsigned depth = 0;  // chain depth this step serves
};

// The fixed 2(k-1)-step window after flooding round t: odd steps carry the
// queries for depth (s+1)/2, even steps their answers.
std::vector<VerificationStep> verification_subround_scheduler(unsigned t, unsigned k);

struct DeliveryStats {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
};

// Moves envelopes into per-node inboxes, dropping (and counting) anything on a
// non-edge of G, with a sender ID that is not the sender's, or too large for
// the wire format. Inboxes are cleared first.
DeliveryStats deliver_round(const Topology& t, std::span<const Envelope> outbox,
                            std::vector<std::vector<Token>>& inboxes);

struct TranscriptEntry {
  std::uint64_t global_round = 0;
  NodeIndex sender = 0;
  NodeIndex to = 0;
  Token token;

  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

struct SimulatorOptions {
  bool record_transcript = false;
  // Tally honest verdicts on tokens of this color sent by Byzantine nodes.
  std::optional<Color> watch_color;
};

struct WatchStats {
  std::uint64_t accepted_from_byzantine = 0;
  std::uint64_t rejected_from_byzantine = 0;
  NodeSet reached;  // honest nodes that accepted the watched color from anyone
};

using ColorSource = std::function<Color(NodeIndex v, unsigned i, unsigned j)>;

// One run of the basic or Byzantine protocol on a fixed topology and Byzantine set.
class Simulator {
 public:
  Simulator(const Topology& topology, NodeSet byzantine, const ExperimentConfig& cfg,
            std::unique_ptr<AdversaryStrategy> strategy, std::uint64_t protocol_seed,
            SimulatorOptions options = {});
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  // Overrides the honest color streams (scripted fixtures).
  void set_color_source(ColorSource source);

  void run_setup();
  // Runs phase i; false once no honest node is active any more.
  bool run_phase(unsigned i);
  // Setup, then phases until all honest nodes decide or the cap is reached.
  void run();

  const NodeState& state(NodeIndex v) const { return states_[v]; }
  std::span<const NodeState> states() const { return states_; }
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
  const WatchStats& watch() const { return watch_; }
  std::uint64_t transcript_hash() const;

  // Counters and per-phase stats gathered so far, classification not applied.
  ExperimentResult partial_result() const;

 private:
  class Router;
  class Observer;

  void run_subphase(const PhaseParams& p, unsigned j);
  void step_round(const PhaseParams& p, unsigned j, unsigned t);
  NodeEnvironment environment(NodeIndex v, const PhaseParams& p) const;
  std::span<const NodeId> ports(NodeIndex v) const;
  AdversarySnapshot snapshot(std::span<const Envelope> honest_outbox) const;
  bool any_honest_active() const;

  const Topology& topology_;
  NodeSet byz_;
  ExperimentConfig cfg_;
  std::unique_ptr<AdversaryStrategy> strategy_;
  std::uint64_t protocol_seed_;
  SimulatorOptions options_;
  ColorSource colors_;

  std::vector<NodeState> states_;
  std::vector<std::size_t> port_off_;
  std::vector<NodeId> port_ids_;
  std::vector<std::vector<Token>> inboxes_;
  std::vector<std::vector<Token>> next_inboxes_;
  std::vector<Envelope> outbox_;
  std::vector<std::size_t> out_begin_;
  std::vector<std::size_t> byz_rank_;
  std::vector<std::vector<Envelope>> byz_out_;
  std::vector<Envelope> merged_;
  std::unique_ptr<Router> router_;
  std::unique_ptr<Observer> observer_;
  RoundContext ctx_;
  std::uint64_t hash_ = 0;
  std::vector<TranscriptEntry> transcript_;
  WatchStats watch_;

  ExperimentResult counters_;
  PhaseStats* current_phase_ = nullptr;
  bool setup_done_ = false;
};

// Builds the topology and Byzantine set from the trial seed, runs, classifies.
ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned trial = 0,
                                Validation mode = Validation::protocol);
// All cfg.trials trials, spread over `threads` workers (0: hardware).
std::vector<ExperimentResult> run_trials(const ExperimentConfig& cfg, unsigned threads = 0,
                                         Validation mode = Validation::protocol);

}  // namespace byzcount
