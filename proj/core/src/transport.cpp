#include "zcomm/transport.hpp"

#include <algorithm>
#include <stdexcept>

namespace zcomm {

double transfer_time(const NetworkModel& m, uint64_t bytes) {
  if (m.bytesPerSec <= 0.0) throw std::invalid_argument("bandwidth must be positive");
  return m.latencySec + static_cast<double>(bytes) / m.bytesPerSec;
}

Connection::Connection(NetworkModel model) : model_(model) {
  if (model_.bytesPerSec <= 0.0) throw std::invalid_argument("bandwidth must be positive");
  credits_.emplace_back(kSlotsPerChannel, 0.0);
}

void Connection::wait_slots_free(unsigned k) {
  if (k > kSlotsPerChannel) throw std::invalid_argument("cannot wait for more slots than exist");
  std::unique_lock lk(mu_);
  cvProducer_.wait(lk, [&] { return poisoned_ || freeSlots_ >= k; });
  if (poisoned_) throw LinkPoisoned();
}

double Connection::consume_credits_locked(unsigned k) {
  double gate = 0.0;
  while (k > 0) {
    auto& [slots, sim] = credits_.front();
    gate = sim;  // entries are in nondecreasing sim order
    if (slots > k) {
      slots -= k;
      k = 0;
    } else {
      k -= slots;
      credits_.pop_front();
    }
  }
  return gate;
}

double Connection::enqueue_frame(std::span<const uint8_t> frame, double readySimSec,
                                 unsigned slotSpan) {
  if (frame.empty()) throw std::invalid_argument("cannot enqueue an empty frame");
  if (slotSpan == 0 || slotSpan > kSlotsPerChannel)
    throw std::invalid_argument("slot span out of range");
  if (frame.size() > kHeaderBytes + static_cast<uint64_t>(slotSpan) * kSlotBytes)
    throw std::invalid_argument("frame exceeds its slot span");

  std::unique_lock lk(mu_);
  cvProducer_.wait(lk, [&] { return poisoned_ || freeSlots_ >= slotSpan; });
  if (poisoned_) throw LinkPoisoned();
  double creditGate = consume_credits_locked(slotSpan);
  freeSlots_ -= slotSpan;

  // The transfer starts once the frame is ready, its slots are free at the
  // receiver, and the link has drained earlier frames; latency delays
  // delivery without occupying the link.
  double start = std::max({readySimSec, creditGate, linkFreeSimSec_});
  double end = start + static_cast<double>(frame.size()) / model_.bytesPerSec;
  linkFreeSimSec_ = end;
  double deliver = end + model_.latencySec;

  FrameMsg msg;
  msg.bytes.assign(frame.begin(), frame.end());
  msg.slotSpan = slotSpan;
  msg.deliverSimSec = deliver;
  q_.push_back(std::move(msg));
  cvConsumer_.notify_one();
  return deliver;
}

FrameMsg Connection::dequeue_frame(double& rxClockSec) {
  std::unique_lock lk(mu_);
  cvConsumer_.wait(lk, [&] { return poisoned_ || !q_.empty(); });
  if (poisoned_) throw LinkPoisoned();
  FrameMsg msg = std::move(q_.front());
  q_.pop_front();
  rxClockSec = std::max(rxClockSec, msg.deliverSimSec);
  credits_.emplace_back(msg.slotSpan, rxClockSec);
  freeSlots_ += msg.slotSpan;
  cvProducer_.notify_one();
  return msg;
}

unsigned Connection::slots_free() const {
  std::lock_guard lk(mu_);
  return freeSlots_;
}

void Connection::poison() {
  std::lock_guard lk(mu_);
  poisoned_ = true;
  cvProducer_.notify_all();
  cvConsumer_.notify_all();
}

void Connection::reset_sim() {
  std::lock_guard lk(mu_);
  q_.clear();
  credits_.clear();
  credits_.emplace_back(kSlotsPerChannel, 0.0);
  freeSlots_ = kSlotsPerChannel;
  linkFreeSimSec_ = 0.0;
  poisoned_ = false;
}

ChannelState::ChannelState() {
  for (auto& b : banks_) b.resize(kStageBankBytes);
}

std::span<uint8_t> ChannelState::acquire_bank(uint64_t batchId) {
  unsigned b = bank_index(batchId);
  if (inUse_[b]) throw std::logic_error("staging bank still owned by an in-flight batch");
  inUse_[b] = true;
  return {banks_[b].data(), banks_[b].size()};
}

void ChannelState::release_bank(uint64_t batchId) {
  unsigned b = bank_index(batchId);
  if (!inUse_[b]) throw std::logic_error("releasing a staging bank that was never acquired");
  inUse_[b] = false;
}

std::pair<uint64_t, uint64_t> batch_range(uint64_t rawBytes, uint64_t b) {
  uint64_t off = b * kBatchRawBytes;
  if (off >= rawBytes) return {rawBytes, 0};
  return {off, std::min(kBatchRawBytes, rawBytes - off)};
}

}  // namespace zcomm
