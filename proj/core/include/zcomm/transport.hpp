#pragma once

#include <array>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "zcomm/frame.hpp"

namespace zcomm {

inline constexpr uint64_t kSlotBytes = 512ull * 1024;
inline constexpr unsigned kSlotsPerChannel = 8;
// One transport batch covers a full slot rotation of raw data.
inline constexpr uint64_t kBatchRawBytes = kSlotsPerChannel * kSlotBytes;
// Staging holds a header plus a worst-case (raw) batch payload.
inline constexpr uint64_t kStageBankBytes = kHeaderBytes + kBatchRawBytes;
inline constexpr unsigned kStageBanks = 2;

enum class Regime : uint8_t { IntraNode = 0, InterNode = 1 };

struct NetworkModel {
  double latencySec = 5.0e-6;
  double bytesPerSec = 10.0 * 1073741824.0;
  Regime regime = Regime::InterNode;
};

inline NetworkModel internode_network() {
  return {5.0e-6, 10.0 * 1073741824.0, Regime::InterNode};
}
inline NetworkModel intranode_network() {
  return {5.0e-6, 200.0 * 1073741824.0, Regime::IntraNode};
}

// Modeled duration of one isolated transfer: latency + bytes/bandwidth.
double transfer_time(const NetworkModel& m, uint64_t bytes);

struct FrameMsg {
  std::vector<uint8_t> bytes;
  unsigned slotSpan = kSlotsPerChannel;
  double deliverSimSec = 0.0;
};

// Thrown out of blocked link operations when a peer aborts the collective.
struct LinkPoisoned : std::runtime_error {
  LinkPoisoned() : std::runtime_error("link poisoned by an aborting peer") {}
};

// One direction of a point-to-point channel: a slot-credit FIFO carrying
// framed bytes plus a simulated link clock. Single producer, single consumer.
//
// Credits model the 8-slot window: a frame consumes slotSpan credits at
// enqueue and the consumer returns them at dequeue, stamped with its
// simulated clock so a blocked producer resumes at the right modeled time.
class Connection {
 public:
  explicit Connection(NetworkModel model);

  // Blocks until at least k slot credits are free. Does not consume them.
  void wait_slots_free(unsigned k);

  // Consumes slotSpan credits (blocking if needed), schedules the bytes on
  // the link, and returns the modeled delivery time. readySimSec is the
  // producer's simulated clock when the frame became ready.
  double enqueue_frame(std::span<const uint8_t> frame, double readySimSec,
                       unsigned slotSpan = kSlotsPerChannel);

  // Blocks for the oldest frame. Advances rxClockSec to at least its
  // delivery time, then returns the frame's credits stamped with that clock.
  FrameMsg dequeue_frame(double& rxClockSec);

  unsigned slots_free() const;
  const NetworkModel& model() const { return model_; }

  // Wakes every blocked endpoint with LinkPoisoned so an aborting collective
  // cannot strand its peers.
  void poison();

  // Returns the link to its initial state: full credit window at time zero,
  // idle link, empty queue, poison cleared. An epoch boundary between runs.
  void reset_sim();

 private:
  // Pops k credits and returns the simulated time the last of them freed.
  double consume_credits_locked(unsigned k);

  mutable std::mutex mu_;
  std::condition_variable cvProducer_;
  std::condition_variable cvConsumer_;
  std::deque<FrameMsg> q_;
  // (slots, simulated time they became free); times are nondecreasing.
  std::deque<std::pair<unsigned, double>> credits_;
  unsigned freeSlots_ = kSlotsPerChannel;
  double linkFreeSimSec_ = 0.0;
  bool poisoned_ = false;
  NetworkModel model_;
};

// Sender-side ping-pong staging: bank = batchId mod 2, so batch i+1 is
// assembled while batch i's bytes are on the wire.
class ChannelState {
 public:
  ChannelState();

  // Hands out the bank for batchId. Throws if the bank's previous batch has
  // not been released (a frame still being assembled or injected).
  std::span<uint8_t> acquire_bank(uint64_t batchId);

  // Marks batchId's bank reusable once its frame has been copied to the link.
  void release_bank(uint64_t batchId);

  // Monotone per-channel batch counter driving bank alternation.
  uint64_t next_batch_id() { return nextId_++; }

  // Epoch boundary: restart numbering and reclaim banks stranded by aborts.
  void reset() {
    nextId_ = 0;
    inUse_.fill(false);
  }

  static constexpr unsigned bank_index(uint64_t batchId) {
    return static_cast<unsigned>(batchId % kStageBanks);
  }

 private:
  std::array<std::vector<uint8_t>, kStageBanks> banks_;
  std::array<bool, kStageBanks> inUse_{};
  uint64_t nextId_ = 0;
};

// Batch arithmetic for splitting a message into 4 MiB raw spans.
inline uint64_t batch_count(uint64_t rawBytes) {
  return rawBytes == 0 ? 0 : (rawBytes + kBatchRawBytes - 1) / kBatchRawBytes;
}

// [offset, length) of batch b within a rawBytes message.
std::pair<uint64_t, uint64_t> batch_range(uint64_t rawBytes, uint64_t b);

// Slots a frame with payloadBytes of encoded data occupies at slot
// granularity (the per-slot framing study); the header rides in the bank's
// reserve. Standard batching always spans kSlotsPerChannel.
inline unsigned slot_span_for_payload(uint64_t payloadBytes) {
  uint64_t s = (payloadBytes + kSlotBytes - 1) / kSlotBytes;
  if (s == 0) s = 1;
  if (s > kSlotsPerChannel) s = kSlotsPerChannel;
  return static_cast<unsigned>(s);
}

}  // namespace zcomm
