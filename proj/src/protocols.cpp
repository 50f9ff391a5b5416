#include "coinforge/protocols.hpp"

#include <algorithm>
#include <stdexcept>

namespace coinforge {

const std::vector<std::string>& channel_names() {
  static const std::vector<std::string> names = {"COIN", "CRUS_VAL", "CRUS_RELAY", "CRUS_AUX", "PUB", "MAJ"};
  return names;
}

std::uint32_t tag_bits_for(std::int64_t instances) {
  std::uint32_t bits = 0;
  while ((std::int64_t{1} << bits) < instances) ++bits;
  return bits;
}

// ---------------------------------------------------------------------------
// Crusader

Crusader::Crusader(std::vector<PartyId> members, std::int64_t t)
    : members_(std::move(members)), t_(t) {
  std::sort(members_.begin(), members_.end());
  if (t_ < 0 || 3 * t_ >= static_cast<std::int64_t>(members_.size())) {
    throw std::invalid_argument("crusader needs t < s/3");
  }
  val_seen_[0].assign(members_.size(), 0);
  val_seen_[1].assign(members_.size(), 0);
  aux_from_.assign(members_.size(), -1);
}

int Crusader::index_of(PartyId p) const {
  auto it = std::lower_bound(members_.begin(), members_.end(), p);
  if (it == members_.end() || *it != p) return -1;
  return static_cast<int>(it - members_.begin());
}

std::vector<CrusaderSend> Crusader::start(std::uint8_t input) {
  std::vector<CrusaderSend> out;
  if (input_) return out;
  input_ = input & 1U;
  val_sent_[*input_] = true;
  out.push_back({kCrusVal, *input_});
  auto pending = std::move(buffer_);
  buffer_.clear();
  for (const auto& m : pending) handle(m.from, m.channel, m.value, out);
  return out;
}

std::vector<CrusaderSend> Crusader::on_message(PartyId from, std::uint8_t channel, std::uint64_t value) {
  std::vector<CrusaderSend> out;
  if (!input_) {
    buffer_.push_back({from, channel, value});
    return out;
  }
  handle(from, channel, value, out);
  return out;
}

void Crusader::handle(PartyId from, std::uint8_t channel, std::uint64_t value,
                      std::vector<CrusaderSend>& out) {
  const int j = index_of(from);
  if (j < 0 || value > 1) return;
  const auto b = static_cast<std::uint8_t>(value);

  if (channel == kCrusVal || channel == kCrusRelay) {
    if (val_seen_[b][j]) return;
    val_seen_[b][j] = 1;
    ++val_count_[b];
    if (val_count_[b] >= t_ + 1 && !val_sent_[b]) {
      val_sent_[b] = true;
      out.push_back({kCrusRelay, b});
    }
    if (val_count_[b] >= 2 * t_ + 1 && !accepted_[b]) {
      accepted_[b] = true;
      if (!aux_sent_) {
        aux_sent_ = b;
        out.push_back({kCrusAux, b});
      }
    }
  } else if (channel == kCrusAux) {
    if (aux_from_[j] >= 0) return;
    aux_from_[j] = static_cast<std::int8_t>(b);
    ++aux_count_[b];
  } else {
    return;
  }
  try_output();
}

void Crusader::try_output() {
  if (output_) return;
  const std::int64_t quorum = static_cast<std::int64_t>(members_.size()) - t_;
  std::int64_t usable = 0;
  for (int b = 0; b < 2; ++b) {
    if (accepted_[b]) usable += aux_count_[b];
  }
  if (usable < quorum) return;
  for (int b = 0; b < 2; ++b) {
    if (accepted_[b] && aux_count_[b] >= quorum) {
      output_ = static_cast<std::uint64_t>(b);
      return;
    }
  }
  output_ = sim::kBot;
}

nlohmann::json Crusader::state() const {
  nlohmann::json j;
  j["input"] = input_ ? nlohmann::json(*input_) : nlohmann::json(nullptr);
  j["val_count"] = {val_count_[0], val_count_[1]};
  j["val_sent"] = {val_sent_[0], val_sent_[1]};
  j["accepted"] = {accepted_[0], accepted_[1]};
  j["aux_sent"] = aux_sent_ ? nlohmann::json(*aux_sent_) : nlohmann::json(nullptr);
  j["aux_count"] = {aux_count_[0], aux_count_[1]};
  j["output"] = output_ ? nlohmann::json(*output_) : nlohmann::json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// Publish

PublishTopology::PublishTopology(PublishGraph graph) : graph_(std::move(graph)) {
  const auto n = graph_.adjacency.size();
  member_index_.assign(n, -1);
  for (std::size_t i = 0; i < graph_.committee.size(); ++i) {
    member_index_.at(graph_.committee[i]) = static_cast<std::int32_t>(i);
  }
  out_.resize(graph_.committee.size());
  for (std::size_t v = 0; v < n; ++v) {
    for (PartyId m : graph_.adjacency[v]) {
      const auto idx = member_index_.at(m);
      if (idx < 0) throw std::invalid_argument("publish graph edge leaves the committee");
      out_[idx].push_back(static_cast<PartyId>(v));
    }
  }
}

bool PublishTopology::is_member(PartyId p) const {
  return p < member_index_.size() && member_index_[p] >= 0;
}

const std::vector<PartyId>& PublishTopology::out_neighbors(PartyId member) const {
  return out_.at(member_index_.at(member));
}

bool PublishTopology::adjacent(PartyId member, PartyId receiver) const {
  const auto& adj = graph_.adjacency.at(receiver);
  return std::binary_search(adj.begin(), adj.end(), member);
}

PublishInstance::PublishInstance(std::shared_ptr<const PublishTopology> topo, PartyId self)
    : topo_(std::move(topo)), self_(self) {
  if (topo_->is_member(self_)) {
    const auto& q = topo_->graph().committee;
    crusader_.emplace(q, crusader_fault_bound(static_cast<std::int64_t>(q.size())));
  } else {
    heard_.assign(topo_->graph().adjacency.size(), 0);
  }
}

PublishStep PublishInstance::set_input(std::uint8_t b) {
  PublishStep step;
  if (!crusader_ || input_) return step;
  input_ = b & 1U;
  step.crusader = crusader_->start(*input_);
  output_ = *input_;
  step.output = output_;
  after_crusader(step);
  return step;
}

void PublishInstance::after_crusader(PublishStep& step) {
  if (!published_ && crusader_->output()) {
    published_ = true;
    step.publish = *crusader_->output();
  }
}

PublishStep PublishInstance::on_message(PartyId from, std::uint8_t channel, std::uint64_t value) {
  PublishStep step;
  if (is_crusader_channel(channel)) {
    if (!crusader_) return step;
    step.crusader = crusader_->on_message(from, channel, value);
    if (input_) after_crusader(step);
    return step;
  }
  if (channel != kPub || crusader_) return step;
  if (!topo_->adjacent(from, self_)) {
    ++discarded_;
    return step;
  }
  if (heard_[from] || value > sim::kBot) return step;
  heard_[from] = 1;
  if (value == 0 || value == sim::kBot) ++tally_[0];
  if (value == 1 || value == sim::kBot) ++tally_[1];
  if (!output_) {
    const std::int64_t delta = topo_->delta_cap();
    if (2 * tally_[0] > delta) {
      output_ = 0;
    } else if (2 * tally_[1] > delta) {
      output_ = 1;
    }
    step.output = output_;
  }
  return step;
}

nlohmann::json PublishInstance::state() const {
  nlohmann::json j;
  j["member"] = is_member();
  j["input"] = input_ ? nlohmann::json(*input_) : nlohmann::json(nullptr);
  j["output"] = output_ ? nlohmann::json(*output_) : nlohmann::json(nullptr);
  if (crusader_) j["crusader"] = crusader_->state();
  if (!crusader_) j["tally"] = {tally_[0], tally_[1]};
  return j;
}

// ---------------------------------------------------------------------------
// Ben-Or

BenOrMember::BenOrMember(std::vector<PartyId> members, std::int64_t t_local)
    : members_(std::move(members)), t_local_(t_local) {
  std::sort(members_.begin(), members_.end());
  if (t_local_ < 0 || t_local_ >= static_cast<std::int64_t>(members_.size())) {
    throw std::invalid_argument("ben-or wait threshold must be positive");
  }
  heard_.assign(members_.size(), 0);
}

std::uint8_t BenOrMember::draw(Rng& rng) {
  if (!drawn_) drawn_ = rng.bit() ? 1 : 0;
  return *drawn_;
}

std::optional<std::uint8_t> BenOrMember::on_bit(PartyId from, std::uint64_t bit) {
  auto it = std::lower_bound(members_.begin(), members_.end(), from);
  if (it == members_.end() || *it != from || bit > 1) return std::nullopt;
  const auto j = static_cast<std::size_t>(it - members_.begin());
  if (heard_[j] || output_) return std::nullopt;
  heard_[j] = 1;
  ++count_[bit];
  const std::int64_t quorum = static_cast<std::int64_t>(members_.size()) - t_local_;
  if (count_[0] + count_[1] < quorum) return std::nullopt;
  output_ = count_[1] > count_[0] ? 1 : 0;
  return output_;
}

nlohmann::json BenOrMember::state() const {
  nlohmann::json j;
  j["drawn"] = drawn_ ? nlohmann::json(*drawn_) : nlohmann::json(nullptr);
  j["count"] = {count_[0], count_[1]};
  j["output"] = output_ ? nlohmann::json(*output_) : nlohmann::json(nullptr);
  return j;
}

std::optional<std::uint8_t> benor_forced_bit(const std::vector<std::uint8_t>& honest_bits,
                                             std::int64_t s, std::int64_t t_local) {
  const std::int64_t need = (s + t_local + 2) / 2;
  std::int64_t ones = 0;
  for (auto b : honest_bits) ones += b;
  const std::int64_t zeros = static_cast<std::int64_t>(honest_bits.size()) - ones;
  if (ones >= need) return 1;
  if (zeros >= need) return 0;
  return std::nullopt;
}

}  // namespace coinforge
