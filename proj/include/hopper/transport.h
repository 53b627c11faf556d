#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "hopper/sim_time.h"
#include "hopper/topology.h"

namespace hopper {

using FlowId = std::uint32_t;

enum class PacketKind : std::uint8_t { kData, kAck, kNack, kProbe, kProbeAck };

const char* to_string(PacketKind kind);

struct Packet {
  FlowId flow = 0;
  std::uint32_t seq = 0;
  std::uint32_t size = 0;
  HostId src = 0;
  HostId dst = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = kRoceDstPort;
  PacketKind kind = PacketKind::kData;
  bool ecn_ce = false;    // congestion experienced, set by switches
  bool ecn_echo = false;  // on ACK/NACK: the acked data packet was marked
  bool retransmission = false;
  SimTime sent_at;        // data/probe: when the NIC emitted it
  SimTime echo_sent_at;   // ACK/NACK/probe-ack: sent_at of the packet acked
  std::uint32_t cum_ack = 0;  // ACK/NACK: receiver's next expected seq
  std::uint32_t sack = 0;     // ACK/NACK: seq of the packet that triggered it

  FiveTuple tuple() const {
    return FiveTuple{host_address(src), host_address(dst), src_port, dst_port, kUdpProtocol};
  }
};

// Receiver side of selective repeat. Packets within `ooo_threshold` of the
// expected sequence number are buffered and acknowledged normally; a packet
// further ahead is still kept but answered with a NACK carrying the
// cumulative point and the triggering seq as SACK, which starts recovery.
class ReceiverState {
 public:
  ReceiverState(std::uint32_t n_packets, std::uint32_t ooo_threshold);

  struct Result {
    PacketKind reply = PacketKind::kAck;  // kAck or kNack
    std::uint32_t cum_ack = 0;
    std::uint32_t sack = 0;
    bool duplicate = false;
    bool out_of_order = false;  // arrived ahead of the expected seq
    bool completed = false;     // this packet made the transfer whole
  };

  Result on_data(std::uint32_t seq);

  std::uint32_t expected() const { return expected_; }
  std::uint32_t n_packets() const { return static_cast<std::uint32_t>(received_.size()); }
  std::uint32_t ooo_threshold() const { return ooo_threshold_; }
  std::size_t buffered() const { return buffered_; }
  bool is_buffered(std::uint32_t seq) const {
    return seq > expected_ && seq < received_.size() && received_[seq];
  }
  std::uint32_t delivered() const { return delivered_; }
  std::uint64_t duplicates() const { return duplicates_; }
  bool complete() const { return expected_ == received_.size(); }

 private:
  std::vector<std::uint8_t> received_;
  std::uint32_t ooo_threshold_;
  std::uint32_t expected_ = 0;
  std::size_t buffered_ = 0;
  std::uint32_t delivered_ = 0;
  std::uint64_t duplicates_ = 0;
};

// Sender window for one flow. New data is limited to the sequence range
// [snd_una, snd_una + window), the BDP cap. With chunking, new data never
// crosses the end of the current chunk until every packet of it is acked.
class SenderState {
 public:
  SenderState(std::uint64_t size_bytes, std::uint32_t mtu, std::uint32_t window_packets,
              std::uint32_t chunk_packets = 0);

  std::uint32_t n_packets() const { return n_packets_; }
  std::uint32_t packet_bytes(std::uint32_t seq) const;
  std::uint32_t window_packets() const { return window_; }
  std::uint32_t snd_una() const { return snd_una_; }
  std::uint32_t snd_nxt() const { return snd_nxt_; }
  std::uint32_t chunk_end() const { return chunk_end_; }
  bool complete() const { return snd_una_ == n_packets_; }

  // Packets sent at least once and not yet acknowledged.
  std::uint32_t outstanding() const { return outstanding_; }
  std::uint64_t outstanding_bytes() const;

  bool has_work();
  struct Next {
    std::uint32_t seq = 0;
    bool retransmission = false;
  };
  // Retransmissions first, then new data. Call only when has_work().
  Next pop_next();

  struct AckResult {
    bool known = true;           // refers to a packet that was sent
    std::uint32_t newly_acked = 0;
    bool chunk_completed = false;
  };
  AckResult on_ack(std::uint32_t cum_ack, std::uint32_t sack);

  // Queues every un-SACKed packet in [cum_ack, sack) not already queued for
  // retransmission. Returns how many were queued.
  std::uint32_t on_nack(std::uint32_t cum_ack, std::uint32_t sack);

  // Last-resort recovery: queues every unacked packet below snd_nxt.
  std::uint32_t on_timeout();

  bool acked(std::uint32_t seq) const { return acked_.at(seq) != 0; }

 private:
  std::uint32_t n_packets_;
  std::uint32_t mtu_;
  std::uint32_t last_bytes_;
  std::uint32_t window_;
  std::uint32_t chunk_packets_;
  std::uint32_t chunk_end_;
  std::uint32_t snd_una_ = 0;
  std::uint32_t snd_nxt_ = 0;
  std::uint32_t outstanding_ = 0;
  std::vector<std::uint8_t> acked_;
  std::vector<std::uint8_t> queued_;   // queued for retransmission since last timeout
  std::deque<std::uint32_t> retx_;
};

struct DcqcnParams {
  bool enabled = true;
  double g = 1.0 / 256.0;
  std::uint64_t rai_bps = 40'000'000;
  std::uint64_t rhai_bps = 200'000'000;
  SimTime rate_timer = microseconds(55);
  SimTime alpha_timer = microseconds(55);
  std::uint32_t fast_recovery_stages = 5;
  // Additive stages before hyper increase kicks in.
  std::uint32_t additive_stages = 5;
  std::uint64_t min_rate_bps = 100'000'000;
  // Rate cuts are applied at most once per interval; echoes in between only
  // feed the alpha estimate.
  SimTime min_decrease_interval = microseconds(50);
};

// DCQCN reaction point driven by ECN echoes on ACKs. Timers are evaluated
// lazily: every query first applies all alpha and rate-increase steps whose
// deadline has passed.
class RateState {
 public:
  RateState(std::uint64_t line_rate_bps, const DcqcnParams& params);

  double rate_bps(SimTime now);
  double target_bps(SimTime now);
  double alpha(SimTime now);
  std::uint32_t stage() const { return stage_; }
  double line_rate_bps() const { return line_rate_; }

  // Returns true if the rate was cut.
  bool on_congestion_echo(SimTime now);

 private:
  void advance(SimTime now);

  DcqcnParams params_;
  double line_rate_;
  double rate_;
  double target_;
  double alpha_ = 1.0;
  bool alpha_flag_ = false;
  bool seen_echo_ = false;
  SimTime next_alpha_update_;
  SimTime next_increase_;
  bool increasing_ = false;
  std::uint32_t stage_ = 0;
  SimTime last_decrease_;
};

}  // namespace hopper
