// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/hubd/control.hpp"

#include "dhub/core/error.hpp"

namespace dhub::hubd {

using nlohmann::json;

std::string_view to_string(ControlCommand c) {
  switch (c) {
    case ControlCommand::Configure: return "CONFIGURE";
    case ControlCommand::Start: return "START";
    case ControlCommand::Stop: return "STOP";
    case ControlCommand::Reset: return "RESET";
    case ControlCommand::Status: return "STATUS";
  }
  return "?";
}

std::optional<ControlCommand> parse_control_command(std::string_view s) {
  for (auto c : kAllCommands) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::vector<Violation> validate_setup(const std::string& hub_id, const HubSetup& setup) {
  // Reuse the session validator on a one-hub session.
  SessionConfig cfg;
  cfg.session_name = setup.session_name.empty() ? "hub-setup" : setup.session_name;
  cfg.hubs.push_back({hub_id, ""});
  cfg.streams = setup.streams;
  cfg.storage_dir = "-";
  cfg.queue_capacity = setup.queue_capacity;
  cfg.metrics_interval_ms = setup.metrics_interval_ms;
  cfg.codecs = setup.codecs;
  auto violations = validate_session_config(cfg);
  for (auto& v : violations) {
    if (v.code == "UNKNOWN_HUB") v.message = "stream belongs to another hub than " + hub_id;
  }
  return violations;
}

ControlOutcome handle_control(const HubControlState& state, const ControlRequest& request) {
  ControlOutcome out{state, {}};
  auto reject = [&](std::string code, std::string message) {
    out.next = state;
    out.reply = {false, state.state, std::move(code), std::move(message)};
    return out;
  };
  auto accept = [&](HubState next) {
    out.next.state = next;
    out.reply = {true, next, "", ""};
    return out;
  };
  auto bad_transition = [&] {
    return reject("BAD_TRANSITION", std::string(to_string(request.command)) + " is not allowed in " +
                                        std::string(to_string(state.state)));
  };

  switch (request.command) {
    case ControlCommand::Status:
      return accept(state.state);
    case ControlCommand::Reset:
      out.next.setup.reset();
      return accept(HubState::Idle);
    case ControlCommand::Configure: {
      if (state.state == HubState::Streaming) return bad_transition();
      auto problems = validate_setup(state.hub_id, request.setup);
      if (!problems.empty()) {
        std::string msg;
        for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p.code + " at " + p.path;
        return reject("BAD_SPEC", msg);
      }
      out.next.setup = request.setup;
      return accept(HubState::Ready);
    }
    case ControlCommand::Start:
      if (state.state != HubState::Ready) return bad_transition();
      return accept(HubState::Streaming);
    case ControlCommand::Stop:
      if (state.state != HubState::Streaming) return bad_transition();
      return accept(HubState::Ready);
  }
  return bad_transition();
}

json to_json(const HubSetup& setup) {
  json streams = json::array();
  for (const auto& s : setup.streams) streams.push_back(to_json(s));
  json codecs = json::array();
  for (const auto& c : setup.codecs) {
    codecs.push_back({{"codec_id", c.codec_id}, {"encoder", c.encoder}, {"decoder", c.decoder}, {"lossy", c.lossy}});
  }
  return {{"session_name", setup.session_name},
          {"streams", std::move(streams)},
          {"codecs", std::move(codecs)},
          {"queue_capacity", setup.queue_capacity},
          {"metrics_interval_ms", setup.metrics_interval_ms}};
}

json to_json(const ControlRequest& request) {
  json j{{"cmd", std::string(to_string(request.command))}, {"request_id", request.request_id}};
  if (request.command == ControlCommand::Configure) j["setup"] = to_json(request.setup);
  return j;
}

ControlRequest parse_control_request(const json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "CONTROL body must be an object");
  ControlRequest r;
  auto cmd = j.find("cmd");
  std::optional<ControlCommand> parsed;
  if (cmd != j.end() && cmd->is_string()) parsed = parse_control_command(cmd->get<std::string>());
  if (!parsed) throw Error(Errc::InvalidArgument, "unknown control command");
  r.command = *parsed;
  if (auto id = j.find("request_id"); id != j.end() && id->is_number_unsigned()) {
    r.request_id = id->get<std::uint64_t>();
  }
  if (r.command != ControlCommand::Configure) return r;

  auto setup = j.find("setup");
  if (setup == j.end() || !setup->is_object()) throw Error(Errc::BadSpec, "CONFIGURE needs a setup object");
  // Parse through the session parser so field errors carry the same codes.
  json session = *setup;
  session["hubs"] = json::array();
  session["storage_dir"] = "-";
  if (!session.contains("session_name")) session["session_name"] = "hub-setup";
  auto parsed_cfg = parse_session_config(session);
  if (!parsed_cfg.config) {
    std::string msg;
    for (const auto& v : parsed_cfg.violations) {
      if (v.code == "UNKNOWN_HUB") continue;
      msg += (msg.empty() ? "" : "; ") + v.code + " at " + v.path;
    }
    throw Error(Errc::BadSpec, msg.empty() ? "malformed setup" : msg);
  }
  r.setup.session_name = parsed_cfg.config->session_name;
  r.setup.streams = parsed_cfg.config->streams;
  r.setup.codecs = parsed_cfg.config->codecs;
  r.setup.queue_capacity = parsed_cfg.config->queue_capacity;
  r.setup.metrics_interval_ms = parsed_cfg.config->metrics_interval_ms;
  return r;
}

json ack_json(const ControlRequest& request, const ControlReply& reply) {
  return {{"request_id", request.request_id},
          {"cmd", std::string(to_string(request.command))},
          {"state", std::string(to_string(reply.state))}};
}

json error_json(std::uint64_t request_id, const std::string& code, const std::string& message) {
  return {{"request_id", request_id}, {"code", code}, {"message", message}};
}

}  // namespace dhub::hubd
