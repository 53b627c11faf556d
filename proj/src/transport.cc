#include "hopper/transport.h"

#include <algorithm>
#include <cmath>

#include "hopper/errors.h"

namespace hopper {

const char* to_string(PacketKind kind) {
  switch (kind) {
    case PacketKind::kData:
      return "data";
    case PacketKind::kAck:
      return "ack";
    case PacketKind::kNack:
      return "nack";
    case PacketKind::kProbe:
      return "probe";
    case PacketKind::kProbeAck:
      return "probe_ack";
  }
  return "unknown";
}

ReceiverState::ReceiverState(std::uint32_t n_packets, std::uint32_t ooo_threshold)
    : received_(n_packets, 0), ooo_threshold_(ooo_threshold) {}

ReceiverState::Result ReceiverState::on_data(std::uint32_t seq) {
  Result r;
  if (seq >= received_.size() || seq < expected_ || received_[seq]) {
    ++duplicates_;
    r.duplicate = true;
    r.cum_ack = expected_;
    r.sack = seq;
    return r;
  }
  received_[seq] = 1;
  ++delivered_;
  if (seq == expected_) {
    ++expected_;
    while (expected_ < received_.size() && received_[expected_]) {
      ++expected_;
      --buffered_;
    }
    r.completed = complete();
  } else {
    ++buffered_;
    r.out_of_order = true;
    if (seq - expected_ > ooo_threshold_) r.reply = PacketKind::kNack;
  }
  r.cum_ack = expected_;
  r.sack = seq;
  return r;
}

namespace {
constexpr std::uint8_t kInQueue = 1;
constexpr std::uint8_t kRetransmitted = 2;
}  // namespace

SenderState::SenderState(std::uint64_t size_bytes, std::uint32_t mtu,
                         std::uint32_t window_packets, std::uint32_t chunk_packets)
    : mtu_(mtu), window_(window_packets), chunk_packets_(chunk_packets) {
  if (size_bytes == 0) throw ConfigError("flow size must be positive");
  if (mtu == 0 || window_packets == 0) throw ConfigError("mtu and window must be positive");
  n_packets_ = static_cast<std::uint32_t>((size_bytes + mtu - 1) / mtu);
  last_bytes_ = static_cast<std::uint32_t>(size_bytes - std::uint64_t{n_packets_ - 1} * mtu);
  chunk_end_ = chunk_packets_ == 0 ? n_packets_ : std::min(n_packets_, chunk_packets_);
  acked_.assign(n_packets_, 0);
  queued_.assign(n_packets_, 0);
}

std::uint32_t SenderState::packet_bytes(std::uint32_t seq) const {
  return seq + 1 == n_packets_ ? last_bytes_ : mtu_;
}

std::uint64_t SenderState::outstanding_bytes() const {
  std::uint64_t b = std::uint64_t{outstanding_} * mtu_;
  if (snd_nxt_ == n_packets_ && !acked_[n_packets_ - 1]) b -= mtu_ - last_bytes_;
  return b;
}

bool SenderState::has_work() {
  while (!retx_.empty() && acked_[retx_.front()]) {
    queued_[retx_.front()] &= static_cast<std::uint8_t>(~kInQueue);
    retx_.pop_front();
  }
  if (!retx_.empty()) return true;
  return snd_nxt_ < chunk_end_ && snd_nxt_ < snd_una_ + window_;
}

SenderState::Next SenderState::pop_next() {
  if (!retx_.empty()) {
    const std::uint32_t seq = retx_.front();
    retx_.pop_front();
    queued_[seq] = kRetransmitted;
    return Next{seq, true};
  }
  ++outstanding_;
  return Next{snd_nxt_++, false};
}

SenderState::AckResult SenderState::on_ack(std::uint32_t cum_ack, std::uint32_t sack) {
  AckResult r;
  if (sack >= snd_nxt_ || cum_ack > snd_nxt_) {
    r.known = false;
    return r;
  }
  auto mark = [&](std::uint32_t s) {
    if (!acked_[s]) {
      acked_[s] = 1;
      --outstanding_;
      ++r.newly_acked;
    }
  };
  for (std::uint32_t s = snd_una_; s < cum_ack; ++s) mark(s);
  mark(sack);
  while (snd_una_ < n_packets_ && acked_[snd_una_]) ++snd_una_;
  if (chunk_packets_ != 0 && snd_una_ >= chunk_end_ && chunk_end_ < n_packets_) {
    chunk_end_ = std::min(n_packets_, chunk_end_ + chunk_packets_);
    r.chunk_completed = true;
  }
  return r;
}

std::uint32_t SenderState::on_nack(std::uint32_t cum_ack, std::uint32_t sack) {
  std::uint32_t queued = 0;
  const std::uint32_t lo = std::max(cum_ack, snd_una_);
  const std::uint32_t hi = std::min(sack, snd_nxt_);
  for (std::uint32_t s = lo; s < hi; ++s) {
    if (acked_[s] || queued_[s] != 0) continue;
    queued_[s] = kInQueue;
    retx_.push_back(s);
    ++queued;
  }
  return queued;
}

std::uint32_t SenderState::on_timeout() {
  std::uint32_t queued = 0;
  for (std::uint32_t s = snd_una_; s < snd_nxt_; ++s) {
    if (acked_[s]) continue;
    if (queued_[s] & kInQueue) continue;
    queued_[s] = kInQueue;
    retx_.push_back(s);
    ++queued;
  }
  return queued;
}

RateState::RateState(std::uint64_t line_rate_bps, const DcqcnParams& params)
    : params_(params),
      line_rate_(static_cast<double>(line_rate_bps)),
      rate_(line_rate_),
      target_(line_rate_) {}

void RateState::advance(SimTime now) {
  if (seen_echo_ && next_alpha_update_ <= now) {
    const std::uint64_t steps = (now - next_alpha_update_).ns / params_.alpha_timer.ns + 1;
    alpha_ = (1.0 - params_.g) * alpha_ + (alpha_flag_ ? params_.g : 0.0);
    alpha_flag_ = false;
    if (steps > 1) alpha_ *= std::pow(1.0 - params_.g, static_cast<double>(steps - 1));
    next_alpha_update_ += params_.alpha_timer * steps;
  }
  while (increasing_ && next_increase_ <= now) {
    const std::uint32_t fr = params_.fast_recovery_stages;
    if (stage_ >= fr + params_.additive_stages) {
      target_ = std::min(line_rate_, target_ + static_cast<double>(params_.rhai_bps));
    } else if (stage_ >= fr) {
      target_ = std::min(line_rate_, target_ + static_cast<double>(params_.rai_bps));
    }
    rate_ = 0.5 * (rate_ + target_);
    ++stage_;
    next_increase_ += params_.rate_timer;
    if (target_ >= line_rate_ && line_rate_ - rate_ < 1.0) {
      rate_ = target_ = line_rate_;
      increasing_ = false;
    }
  }
}

double RateState::rate_bps(SimTime now) {
  advance(now);
  return rate_;
}

double RateState::target_bps(SimTime now) {
  advance(now);
  return target_;
}

double RateState::alpha(SimTime now) {
  advance(now);
  return alpha_;
}

bool RateState::on_congestion_echo(SimTime now) {
  if (!params_.enabled) return false;
  advance(now);
  bool cut = false;
  if (!seen_echo_) {
    seen_echo_ = true;
    alpha_ = 1.0;
    alpha_flag_ = false;
    next_alpha_update_ = now + params_.alpha_timer;
    cut = true;
  } else {
    alpha_flag_ = true;
    cut = now - last_decrease_ >= params_.min_decrease_interval;
  }
  if (cut) {
    target_ = rate_;
    rate_ = std::max(static_cast<double>(params_.min_rate_bps), rate_ * (1.0 - alpha_ / 2.0));
    stage_ = 0;
    increasing_ = true;
    next_increase_ = now + params_.rate_timer;
    last_decrease_ = now;
  }
  return cut;
}

}  // namespace hopper
