/*
 * Copyright 2026 The SLADV Bench Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SLADV_SPLIT_HPP_
#define SLADV_SPLIT_HPP_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "sladv/data.hpp"
#include "sladv/network.hpp"
#include "sladv/optimizer.hpp"

namespace sladv::split {

// Layer counts of the input (client), server and output (client) segments.
struct SplitPlan {
  std::size_t n_input = 2;
  std::size_t n_server = 1;
  std::size_t n_output = 1;

  std::size_t total() const { return n_input + n_server + n_output; }
};

enum class Owner { client, server };

struct Segment {
  nn::Network net;
  nn::OptimizerState optimizer;
  Owner owner = Owner::client;
};

struct OptimizerSettings {
  double learning_rate = 0.01;
  double momentum = 0.9;
};

// theta_1 / theta_2 / theta_3. All clients share one instance of the client
// segments (weight-synchronised clients).
struct SplitModel {
  Segment input;
  Segment server;
  Segment output;

  nn::Network assemble() const;
};

// Moves the layers of `net` into three contiguous segments.
SplitModel partition(nn::Network&& net, const SplitPlan& plan, OptimizerSettings optimizer = {});

// ------------------------------------------------------------------ messages

enum class Direction : std::uint8_t { client_to_server, server_to_client };
enum class MessageKind : std::uint8_t { activation, gradient };

struct ProtocolMessage {
  Direction direction = Direction::client_to_server;
  MessageKind kind = MessageKind::activation;
  std::uint64_t batch_id = 0;
  nn::Tensor payload;
};

// One line of the round trace log.
struct TraceRecord {
  std::uint64_t round = 0;
  Direction direction = Direction::client_to_server;
  MessageKind kind = MessageKind::activation;
  nn::Shape shape;
  std::uint64_t checksum = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

// {"round":..,"direction":"client->server","kind":"activation","shape":[..],"checksum":"..."}
void write_trace_line(std::ostream& out, const TraceRecord& record);

// In-memory queues between the parties. Every message sent is appended to
// the trace when recording is on.
class Transport {
 public:
  explicit Transport(bool record = false) : record_(record) {}

  void send(ProtocolMessage message);
  ProtocolMessage receive(Direction direction);
  bool idle() const { return to_server_.empty() && to_client_.empty(); }

  const std::vector<TraceRecord>& trace() const { return trace_; }
  std::uint64_t messages_sent() const { return sent_; }

 private:
  bool record_;
  std::deque<ProtocolMessage> to_server_;
  std::deque<ProtocolMessage> to_client_;
  std::vector<TraceRecord> trace_;
  std::uint64_t sent_ = 0;
};

// The server only ever sees protocol messages: o_1 and dL/do_2 in, o_2 and
// the gradient for o_1 out. It never receives raw inputs, labels or the
// client segments.
class Server {
 public:
  virtual ~Server() = default;
  virtual ProtocolMessage on_activation(const ProtocolMessage& o1) = 0;
  virtual ProtocolMessage on_gradient(const ProtocolMessage& grad_o2) = 0;
};

class HonestServer : public Server {
 public:
  explicit HonestServer(Segment& layers) : layers_(layers) {}

  ProtocolMessage on_activation(const ProtocolMessage& o1) override;
  ProtocolMessage on_gradient(const ProtocolMessage& grad_o2) override;

 protected:
  // Backpropagates dL/do_2 through theta_2, applies the update, and returns
  // g_1 = dL/do_1.
  nn::Tensor backward_and_update(const ProtocolMessage& grad_o2);

  Segment& layers_;
  nn::ActivationTrace pending_;
  std::uint64_t pending_batch_ = 0;
  bool has_pending_ = false;
};

// Executes one U-shaped round: o_1 ->, <- o_2, dL/do_2 ->, <- dL/do_1.
// Returns the task loss.
double run_round(SplitModel& model, Server& server, Transport& transport, const nn::Tensor& x,
                 std::span<const std::size_t> y, std::uint64_t batch_id);

double honest_round(SplitModel& model, const nn::Tensor& x, std::span<const std::size_t> y,
                    Transport* transport = nullptr, std::uint64_t batch_id = 0);

struct TrainSchedule {
  std::size_t iterations = 0;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

struct RoundLog {
  std::size_t round = 0;
  std::size_t client = 0;
  double task_loss = 0.0;
};

using RoundCallback = std::function<void(const RoundLog&)>;

// Seed of client c's batch sampler.
std::uint64_t client_sampler_seed(std::uint64_t seed, std::size_t client);

// T rounds; round t is served by client t mod n, drawing a batch from its own
// shard.
std::vector<RoundLog> train(SplitModel& model, Server& server, const std::vector<data::Dataset>& clients,
                            const TrainSchedule& schedule, Transport* transport = nullptr,
                            const RoundCallback& on_round = {});

std::vector<RoundLog> train_honest(SplitModel& model, const std::vector<data::Dataset>& clients,
                                   const TrainSchedule& schedule, Transport* transport = nullptr);

}  // namespace sladv::split

#endif  // SLADV_SPLIT_HPP_
