#include "byzcount/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace byzcount {

namespace {

unsigned ceil_at_least_one(double x) {
  const double c = std::ceil(x - 1e-12);
  return c < 1.0 ? 1u : static_cast<unsigned>(c);
}

}  // namespace

unsigned alpha_subphases(unsigned i, double epsilon, unsigned d, AlphaVariant variant) {
  if (i < 1) throw std::invalid_argument("phase index starts at 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (d < 3) throw std::invalid_argument("alpha needs d >= 3");
  const double log_inv_eps = std::log2(1.0 / epsilon);
  const double log_d = std::log2(static_cast<double>(d));
  const double log_d1 = std::log2(static_cast<double>(d) - 1.0);
  const double di = static_cast<double>(i);

  // d (d-1)^(i-2) <= 2/eps, compared in log space
  const bool small_ball = log_d + (di - 2.0) * log_d1 <= std::log2(2.0 / epsilon);
  if (!small_ball) return ceil_at_least_one(1.0 + (di + 1.0) / log_inv_eps);

  double num = 0.0;
  double den = 0.0;
  if (variant == AlphaVariant::pseudocode) {
    num = log_inv_eps + di + 1.0;
    den = log_d + (di - 2.0) * log_d1 - 1.0;
  } else {
    num = log_inv_eps + di + 1.0 - log_d;
    den = (di - 2.0) * log_d1;
  }
  return ceil_at_least_one(num / std::max(den, 1.0));
}

double continuation_threshold(unsigned i, unsigned d) {
  if (i < 1) throw std::invalid_argument("phase index starts at 1");
  if (d < 3) throw std::invalid_argument("threshold needs d >= 3");
  const double l = std::log2(static_cast<double>(d)) +
                   (static_cast<double>(i) - 1.0) * std::log2(static_cast<double>(d) - 1.0);
  return l - std::log2(l);
}

PhaseParams make_phase_params(unsigned i, double epsilon, unsigned d, AlphaVariant variant,
                              SubphaseFactor factor) {
  PhaseParams p;
  p.i = i;
  p.alpha = alpha_subphases(i, epsilon, d, variant);
  p.subphases = p.alpha * std::max(1u, factor.multiplier) * (factor.times_phase ? i : 1u);
  p.threshold = continuation_threshold(i, d);
  p.rounds_per_subphase = i;
  return p;
}

bool fits_wire(const Token& t) { return t.color.value <= 0xFF; }

std::uint64_t pack_aux(const Token& t) {
  return (static_cast<std::uint64_t>(t.color.value & 0xFF) << 48) |
         (static_cast<std::uint64_t>(t.phase) << 32) |
         (static_cast<std::uint64_t>(t.subphase) << 16) | static_cast<std::uint64_t>(t.hop);
}

Token unpack_token(std::uint64_t aux, NodeId from, NodeId predecessor) {
  Token t;
  t.color = Color{static_cast<std::uint32_t>((aux >> 48) & 0xFF)};
  t.phase = static_cast<std::uint16_t>(aux >> 32);
  t.subphase = static_cast<std::uint16_t>(aux >> 16);
  t.hop = static_cast<std::uint16_t>(aux);
  t.from = from;
  t.predecessor = predecessor;
  return t;
}

void begin_phase(NodeState& s, unsigned i) {
  s.phase = i;
  s.subphase = 0;
  s.round = 0;
  s.flag_terminate = true;
}

void begin_subphase(NodeState& s, unsigned i, unsigned j, Color color) {
  s.phase = i;
  s.subphase = j;
  s.round = 0;
  s.k_values.clear();
  s.sent.assign(i, std::nullopt);
  s.own_color = s.active ? color : Color{};
  s.running_max = Color{};
  s.running_from = s.id;
  s.last_forwarded = Color{};
}

bool keeps_going(std::span<const Color> k_values, double threshold) {
  if (k_values.empty()) return false;
  const Color last = k_values.back();
  for (std::size_t t = 0; t + 1 < k_values.size(); ++t)
    if (!(last > k_values[t])) return false;
  return static_cast<double>(last.value) > threshold;
}

namespace {

bool from_port(const NodeEnvironment& env, NodeId from) {
  return std::find(env.port_ids.begin(), env.port_ids.end(), from) != env.port_ids.end();
}

void absorb(NodeState& s, std::span<const Token> inbox, unsigned t, const NodeEnvironment& env) {
  Color kt = (t == 1) ? s.own_color : Color{};
  for (const Token& tok : inbox) {
    if (tok.phase != s.phase || tok.subphase != s.subphase || tok.hop != t || tok.color.empty() ||
        !from_port(env, tok.from)) {
      ++s.malformed;
      continue;
    }
    bool ok = true;
    if (env.verifier != nullptr)
      ok = s.local_view.has_value() &&
           verify_color_provenance(*s.local_view, tok, env.k, *env.verifier);
    if (env.observer != nullptr) env.observer->observe(env.self, tok, ok);
    if (!ok) {
      ++s.rejected;
      continue;
    }
    ++s.accepted;
    kt = std::max(kt, tok.color);
    if (tok.color > s.running_max) {
      s.running_max = tok.color;
      s.running_from = tok.from;
    }
  }
  s.k_values.push_back(kt);
}

void emit(NodeState& s, unsigned t, const NodeEnvironment& env, std::vector<Envelope>& outbox) {
  Token tok;
  tok.phase = static_cast<std::uint16_t>(s.phase);
  tok.subphase = static_cast<std::uint16_t>(s.subphase);
  tok.hop = static_cast<std::uint16_t>(t);
  tok.from = s.id;
  if (t == 1) {
    if (s.own_color.empty()) return;
    s.running_max = s.own_color;
    s.running_from = s.id;
  } else if (!(s.running_max > s.last_forwarded)) {
    return;
  }
  tok.color = s.running_max;
  tok.predecessor = s.running_from;
  s.last_forwarded = s.running_max;
  s.sent[t - 1] = SendRecord{tok.color, tok.predecessor};
  for (NodeIndex p : env.ports) outbox.push_back({env.self, p, tok});
}

}  // namespace

void honest_node_step(NodeState& s, std::span<const Token> inbox, const RoundContext& ctx,
                      const NodeEnvironment& env, std::vector<Envelope>& outbox) {
  if (s.crashed) return;
  const unsigned t = ctx.round;
  if (t >= 2) {
    absorb(s, inbox, t - 1, env);
  } else {
    s.malformed += inbox.size();
  }
  s.round = t;
  if (t <= s.phase) {
    emit(s, t, env, outbox);
  } else if (s.active && keeps_going(s.k_values, env.threshold)) {
    s.flag_terminate = false;
  }
}

void end_phase(NodeState& s) {
  if (s.crashed || !s.active) return;
  if (s.flag_terminate) {
    s.decided = s.phase;
    s.active = false;
  }
}

std::optional<NodeId> answer_provenance_query(const NodeState& s, std::span<const NodeId> port_ids,
                                              const ProvenanceQuery& q) {
  if (s.crashed || q.round < 1 || q.round > s.sent.size()) return std::nullopt;
  const auto& rec = s.sent[q.round - 1];
  if (!rec || rec->color != q.color) return std::nullopt;
  if (std::find(port_ids.begin(), port_ids.end(), q.recipient) == port_ids.end())
    return std::nullopt;
  return rec->predecessor;
}

}  // namespace byzcount
