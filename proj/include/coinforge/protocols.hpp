#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coinforge/combinatorics.hpp"
#include "coinforge/simnet.hpp"

namespace coinforge {

/// Wire sub-protocol identifiers (Tag::channel).
enum Channel : std::uint8_t {
  kCoin = 0,
  kCrusVal = 1,
  kCrusRelay = 2,
  kCrusAux = 3,
  kPub = 4,
  kMaj = 5,
};

const std::vector<std::string>& channel_names();

inline bool is_crusader_channel(std::uint8_t ch) {
  return ch == kCrusVal || ch == kCrusRelay || ch == kCrusAux;
}

/// Bits needed to name one of `instances` protocol instances on the wire.
std::uint32_t tag_bits_for(std::int64_t instances);

// ---------------------------------------------------------------------------
// Crusader agreement among a fixed member set, tolerating t < s/3.
//
// Value round with amplification (relay b after t+1 distinct VAL(b), accept
// b after 2t+1), then one AUX carrying the first accepted bit. Outputs once
// s-t AUX values lie in the accepted set: b if s-t of them are b, else bot.

struct CrusaderSend {
  std::uint8_t channel = kCrusVal;
  std::uint8_t bit = 0;
};

class Crusader {
 public:
  Crusader(std::vector<PartyId> members, std::int64_t t);

  /// Messages (broadcast to every member) triggered by the input. Anything
  /// received before the input is buffered and replayed here.
  std::vector<CrusaderSend> start(std::uint8_t input);
  std::vector<CrusaderSend> on_message(PartyId from, std::uint8_t channel, std::uint64_t value);

  bool started() const { return input_.has_value(); }
  /// 0, 1 or sim::kBot.
  std::optional<std::uint64_t> output() const { return output_; }
  const std::vector<PartyId>& members() const { return members_; }
  std::int64_t fault_bound() const { return t_; }
  nlohmann::json state() const;

 private:
  struct Pending {
    PartyId from;
    std::uint8_t channel;
    std::uint64_t value;
  };

  int index_of(PartyId p) const;
  void handle(PartyId from, std::uint8_t channel, std::uint64_t value, std::vector<CrusaderSend>& out);
  void try_output();

  std::vector<PartyId> members_;
  std::int64_t t_;
  std::optional<std::uint8_t> input_;
  std::vector<Pending> buffer_;
  std::vector<std::uint8_t> val_seen_[2];
  std::int64_t val_count_[2] = {0, 0};
  bool val_sent_[2] = {false, false};
  bool accepted_[2] = {false, false};
  std::vector<std::int8_t> aux_from_;
  std::int64_t aux_count_[2] = {0, 0};
  std::optional<std::uint8_t> aux_sent_;
  std::optional<std::uint64_t> output_;
};

/// Fault bound for a committee of size s: ceil(s/3) - 1.
inline std::int64_t crusader_fault_bound(std::int64_t s) { return (s + 2) / 3 - 1; }

// ---------------------------------------------------------------------------
// Publish(Q, d)

/// Read-only view of a publish graph shared by all parties.
class PublishTopology {
 public:
  explicit PublishTopology(PublishGraph graph);

  const PublishGraph& graph() const { return graph_; }
  bool is_member(PartyId p) const;
  /// Receivers v_j adjacent to member p.
  const std::vector<PartyId>& out_neighbors(PartyId member) const;
  bool adjacent(PartyId member, PartyId receiver) const;
  std::int64_t delta_cap() const { return graph_.delta_cap; }

 private:
  PublishGraph graph_;
  std::vector<std::int32_t> member_index_;
  std::vector<std::vector<PartyId>> out_;
};

struct PublishStep {
  std::vector<CrusaderSend> crusader;
  /// Crusader output y to send to this member's graph neighbours.
  std::optional<std::uint64_t> publish;
  std::optional<std::uint8_t> output;
};

/// One party's state in one Publish instance.
class PublishInstance {
 public:
  PublishInstance(std::shared_ptr<const PublishTopology> topo, PartyId self);

  bool is_member() const { return crusader_.has_value(); }
  /// Members only: the input bit (from the strong coin). The member
  /// outputs it directly.
  PublishStep set_input(std::uint8_t b);
  PublishStep on_message(PartyId from, std::uint8_t channel, std::uint64_t value);

  std::optional<std::uint8_t> output() const { return output_; }
  std::optional<std::uint8_t> input() const { return input_; }
  const Crusader* crusader() const { return crusader_ ? &*crusader_ : nullptr; }
  const PublishTopology& topology() const { return *topo_; }
  std::uint64_t discarded() const { return discarded_; }
  nlohmann::json state() const;

 private:
  void after_crusader(PublishStep& step);

  std::shared_ptr<const PublishTopology> topo_;
  PartyId self_;
  std::optional<Crusader> crusader_;
  std::optional<std::uint8_t> input_;
  bool published_ = false;
  std::vector<std::uint8_t> heard_;
  std::int64_t tally_[2] = {0, 0};
  std::optional<std::uint8_t> output_;
  std::uint64_t discarded_ = 0;
};

// ---------------------------------------------------------------------------
// Ben-Or coin member: broadcast a random bit to the committee, wait for
// s - t_local bits, output the majority (ties -> 0).

class BenOrMember {
 public:
  BenOrMember(std::vector<PartyId> members, std::int64_t t_local);

  std::uint8_t draw(Rng& rng);
  /// Returns the coin output once the quorum is reached.
  std::optional<std::uint8_t> on_bit(PartyId from, std::uint64_t bit);

  std::optional<std::uint8_t> drawn() const { return drawn_; }
  std::optional<std::uint8_t> output() const { return output_; }
  const std::vector<PartyId>& members() const { return members_; }
  nlohmann::json state() const;

 private:
  std::vector<PartyId> members_;
  std::int64_t t_local_;
  std::optional<std::uint8_t> drawn_;
  std::vector<std::uint8_t> heard_;
  std::int64_t count_[2] = {0, 0};
  std::optional<std::uint8_t> output_;
};

/// Ben-Or ground truth: the coin is fair iff some bit was drawn by at least
/// ceil((s + t + 1) / 2) honest members.
std::optional<std::uint8_t> benor_forced_bit(const std::vector<std::uint8_t>& honest_bits,
                                             std::int64_t s, std::int64_t t_local);

}  // namespace coinforge
