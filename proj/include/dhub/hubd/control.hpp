// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hub control state machine. The transition table:
//
//   state      CONFIGURE  START      STOP   RESET  STATUS
//   IDLE       READY      -          -      IDLE   IDLE
//   READY      READY      STREAMING  -      IDLE   READY
//   STREAMING  -          -          READY  IDLE   STREAMING
//
// "-" is rejected with BAD_TRANSITION. STATUS never changes state.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dhub/core/config.hpp"
#include "dhub/core/types.hpp"

namespace dhub::hubd {

enum class ControlCommand : std::uint8_t { Configure, Start, Stop, Reset, Status };

inline constexpr ControlCommand kAllCommands[] = {ControlCommand::Configure, ControlCommand::Start,
                                                  ControlCommand::Stop, ControlCommand::Reset,
                                                  ControlCommand::Status};

std::string_view to_string(ControlCommand c);
std::optional<ControlCommand> parse_control_command(std::string_view s);

/// What a hub is told to run.
struct HubSetup {
  std::string session_name;
  std::vector<StreamConfig> streams;
  std::vector<ExternalCodecConfig> codecs;
  std::uint32_t queue_capacity = 256;
  std::uint32_t metrics_interval_ms = 500;

  bool operator==(const HubSetup&) const = default;
};

struct ControlRequest {
  ControlCommand command = ControlCommand::Status;
  std::uint64_t request_id = 0;
  /// Only for CONFIGURE.
  HubSetup setup;
};

struct HubControlState {
  std::string hub_id;
  HubState state = HubState::Idle;
  std::optional<HubSetup> setup;

  bool operator==(const HubControlState&) const = default;
};

struct ControlReply {
  bool ok = true;
  HubState state = HubState::Idle;
  /// BAD_TRANSITION or BAD_SPEC when !ok.
  std::string code;
  std::string message;
};

struct ControlOutcome {
  HubControlState next;
  ControlReply reply;
};

/// Pure transition function; never throws.
ControlOutcome handle_control(const HubControlState& state, const ControlRequest& request);

/// Problems with a CONFIGURE payload for `hub_id`; empty when acceptable.
std::vector<Violation> validate_setup(const std::string& hub_id, const HubSetup& setup);

nlohmann::json to_json(const HubSetup& setup);
nlohmann::json to_json(const ControlRequest& request);
/// Throws Error(BadSpec) for an unusable CONFIGURE body and
/// Error(InvalidArgument) for an unknown command.
ControlRequest parse_control_request(const nlohmann::json& j);

nlohmann::json ack_json(const ControlRequest& request, const ControlReply& reply);
nlohmann::json error_json(std::uint64_t request_id, const std::string& code, const std::string& message);

}  // namespace dhub::hubd
