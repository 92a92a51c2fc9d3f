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

#include "sladv/split.hpp"

#include <ostream>
#include <string>
#include <utility>

#include "sladv/errors.hpp"
#include "sladv/loss.hpp"

namespace sladv::split {

nn::Network SplitModel::assemble() const { return nn::Network::concat({&input.net, &server.net, &output.net}); }

SplitModel partition(nn::Network&& net, const SplitPlan& plan, OptimizerSettings optimizer) {
  if (plan.n_input == 0 || plan.n_server == 0 || plan.n_output == 0) {
    throw ConfigError("every split segment needs at least one layer");
  }
  if (plan.total() != net.layer_count()) {
    throw ConfigError("split plan (" + std::to_string(plan.n_input) + "," + std::to_string(plan.n_server) + "," +
                      std::to_string(plan.n_output) + ") does not cover a " + std::to_string(net.layer_count()) +
                      "-layer network");
  }
  auto parts = nn::Network::split(std::move(net), {plan.n_input, plan.n_server, plan.n_output});
  auto make = [&](nn::Network&& n, Owner owner) {
    Segment s;
    s.optimizer = nn::OptimizerState::for_network(n, optimizer.learning_rate, optimizer.momentum);
    s.net = std::move(n);
    s.owner = owner;
    return s;
  };
  SplitModel model;
  model.input = make(std::move(parts[0]), Owner::client);
  model.server = make(std::move(parts[1]), Owner::server);
  model.output = make(std::move(parts[2]), Owner::client);
  return model;
}

void write_trace_line(std::ostream& out, const TraceRecord& r) {
  out << "{\"round\":" << r.round << ",\"direction\":\""
      << (r.direction == Direction::client_to_server ? "client->server" : "server->client") << "\",\"kind\":\""
      << (r.kind == MessageKind::activation ? "activation" : "gradient") << "\",\"shape\":[";
  for (std::size_t i = 0; i < r.shape.size(); ++i) out << (i ? "," : "") << r.shape[i];
  out << "],\"checksum\":\"" << std::hex << r.checksum << std::dec << "\"}\n";
}

void Transport::send(ProtocolMessage message) {
  if (record_) {
    trace_.push_back(TraceRecord{message.batch_id, message.direction, message.kind, message.payload.shape(),
                                 nn::checksum(message.payload)});
  }
  ++sent_;
  (message.direction == Direction::client_to_server ? to_server_ : to_client_).push_back(std::move(message));
}

ProtocolMessage Transport::receive(Direction direction) {
  auto& queue = direction == Direction::client_to_server ? to_server_ : to_client_;
  if (queue.empty()) throw InternalError("no pending message in the requested direction");
  ProtocolMessage m = std::move(queue.front());
  queue.pop_front();
  return m;
}

ProtocolMessage HonestServer::on_activation(const ProtocolMessage& o1) {
  if (o1.kind != MessageKind::activation || o1.direction != Direction::client_to_server) {
    throw InternalError("server expected an activation from the clients");
  }
  pending_ = nn::forward(layers_.net, o1.payload);
  pending_batch_ = o1.batch_id;
  has_pending_ = true;
  return {Direction::server_to_client, MessageKind::activation, o1.batch_id, pending_.output};
}

nn::Tensor HonestServer::backward_and_update(const ProtocolMessage& grad_o2) {
  if (!has_pending_ || grad_o2.batch_id != pending_batch_ || grad_o2.kind != MessageKind::gradient) {
    throw InternalError("gradient does not match the pending forward pass");
  }
  auto result = nn::backward(layers_.net, pending_, grad_o2.payload);
  nn::sgd_momentum_step(layers_.net, result.param_grads, layers_.optimizer);
  has_pending_ = false;
  pending_ = {};
  return std::move(result.input_grad);
}

ProtocolMessage HonestServer::on_gradient(const ProtocolMessage& grad_o2) {
  const std::uint64_t id = grad_o2.batch_id;
  return {Direction::server_to_client, MessageKind::gradient, id, backward_and_update(grad_o2)};
}

double run_round(SplitModel& model, Server& server, Transport& transport, const nn::Tensor& x,
                 std::span<const std::size_t> y, std::uint64_t batch_id) {
  // Clients: o_1 = F_theta1(x).
  nn::ActivationTrace input_trace = nn::forward(model.input.net, x);
  transport.send({Direction::client_to_server, MessageKind::activation, batch_id, input_trace.output});

  transport.send(server.on_activation(transport.receive(Direction::client_to_server)));
  ProtocolMessage o2 = transport.receive(Direction::server_to_client);
  if (o2.batch_id != batch_id || o2.payload.shape().empty() ||
      o2.payload.sample_shape() != model.output.net.input_shape()) {
    throw ConfigError("server output " + nn::shape_string(o2.payload.shape()) + " does not fit the output layers");
  }

  // Clients: loss, theta_3 update, dL/do_2 to the server.
  nn::ActivationTrace output_trace = nn::forward(model.output.net, o2.payload);
  nn::LossResult loss = nn::softmax_cross_entropy(output_trace.output, y);
  auto out_grads = nn::backward(model.output.net, output_trace, loss.grad);
  nn::sgd_momentum_step(model.output.net, out_grads.param_grads, model.output.optimizer);
  transport.send({Direction::client_to_server, MessageKind::gradient, batch_id, std::move(out_grads.input_grad)});

  transport.send(server.on_gradient(transport.receive(Direction::client_to_server)));
  ProtocolMessage g = transport.receive(Direction::server_to_client);
  if (g.kind != MessageKind::gradient || g.payload.shape() != input_trace.output.shape()) {
    throw ConfigError("returned gradient does not match the shape of o_1");
  }

  // Clients: theta_1 update from the returned gradient.
  auto in_grads = nn::backward(model.input.net, input_trace, g.payload, {.param_grads = true, .input_grad = false});
  nn::sgd_momentum_step(model.input.net, in_grads.param_grads, model.input.optimizer);
  return loss.loss;
}

double honest_round(SplitModel& model, const nn::Tensor& x, std::span<const std::size_t> y, Transport* transport,
                    std::uint64_t batch_id) {
  HonestServer server(model.server);
  Transport local;
  return run_round(model, server, transport ? *transport : local, x, y, batch_id);
}

std::uint64_t client_sampler_seed(std::uint64_t seed, std::size_t client) { return Rng::derive(seed, 1000 + client); }

std::vector<RoundLog> train(SplitModel& model, Server& server, const std::vector<data::Dataset>& clients,
                            const TrainSchedule& schedule, Transport* transport, const RoundCallback& on_round) {
  if (clients.empty()) throw InputError("training needs at least one client dataset");
  std::vector<data::BatchSampler> samplers;
  samplers.reserve(clients.size());
  for (std::size_t c = 0; c < clients.size(); ++c) {
    if (clients[c].size() == 0) throw InputError("client " + std::to_string(c) + " has an empty dataset");
    samplers.emplace_back(clients[c].size(), schedule.batch_size, client_sampler_seed(schedule.seed, c));
  }
  Transport local;
  Transport& link = transport ? *transport : local;
  std::vector<RoundLog> log;
  log.reserve(schedule.iterations);
  for (std::size_t t = 0; t < schedule.iterations; ++t) {
    const std::size_t c = t % clients.size();
    const auto idx = samplers[c].next();
    const nn::Tensor x = clients[c].batch_images(idx);
    const auto y = clients[c].batch_labels(idx);
    RoundLog entry{t, c, run_round(model, server, link, x, y, t)};
    if (on_round) on_round(entry);
    log.push_back(entry);
  }
  return log;
}

std::vector<RoundLog> train_honest(SplitModel& model, const std::vector<data::Dataset>& clients,
                                   const TrainSchedule& schedule, Transport* transport) {
  HonestServer server(model.server);
  return train(model, server, clients, schedule, transport);
}

}  // namespace sladv::split
