// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0
//
// Session lifecycle as a pure transition function. Side effects are returned
// as a list for the supervisor to carry out.
//
//   state        apply       start       stop        finalized  write_failed  hub_lost/recovered
//   IDLE         CONFIGURED  -           -           -          -             IDLE
//   CONFIGURED   CONFIGURED  RECORDING*  -           -          -             CONFIGURED
//   RECORDING    -           -           FINALIZING  -          ERROR         RECORDING (degraded)
//   FINALIZING   -           -           -           COMPLETE   ERROR         FINALIZING
//   COMPLETE     CONFIGURED  -           -           -          -             COMPLETE
//   ERROR        CONFIGURED  -           -           -          -             ERROR
//
// (*) only when every hub named in the config reports READY, otherwise
// HUBS_NOT_READY. "-" is rejected with BAD_TRANSITION. Hub loss and
// recovery never change the state; they update readiness, and during
// RECORDING or FINALIZING loss marks the session degraded for good.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dhub/core/config.hpp"
#include "dhub/core/types.hpp"

namespace dhub::supd {

enum class SessionState : std::uint8_t { Idle, Configured, Recording, Finalizing, Complete, Error };

inline constexpr SessionState kAllSessionStates[] = {SessionState::Idle,       SessionState::Configured,
                                                     SessionState::Recording,  SessionState::Finalizing,
                                                     SessionState::Complete,   SessionState::Error};

std::string_view to_string(SessionState s);
std::optional<SessionState> parse_session_state(std::string_view s);

enum class EventKind : std::uint8_t { Apply, Start, Stop, HubLost, HubRecovered, WriteFailed, Finalized };

inline constexpr EventKind kAllEventKinds[] = {EventKind::Apply,        EventKind::Start,
                                               EventKind::Stop,         EventKind::HubLost,
                                               EventKind::HubRecovered, EventKind::WriteFailed,
                                               EventKind::Finalized};

std::string_view to_string(EventKind e);

struct SessionEvent {
  EventKind kind = EventKind::Start;
  /// For Apply.
  std::optional<SessionConfig> config;
  /// For HubLost / HubRecovered.
  std::string hub_id;
  /// For WriteFailed.
  std::string reason;
};

enum class EffectKind : std::uint8_t {
  /// Send CONFIGURE with its share of the config to `hub_id`.
  ConfigureHub,
  /// Create the recording directory and writer.
  OpenRecording,
  StartHub,
  StopHub,
  /// Drain in-flight frames, then finalize the writer.
  FinalizeRecording,
  /// Close the writer without a manifest.
  AbortRecording,
  Warn,
};

std::string_view to_string(EffectKind e);

struct Effect {
  EffectKind kind;
  std::string hub_id;
  /// Warning code for Warn (HUB_LOST, HUB_RECOVERED, WRITE_FAILED).
  std::string code;
  std::string message;

  bool operator==(const Effect&) const = default;
};

struct SessionModel {
  SessionState state = SessionState::Idle;
  std::optional<SessionConfig> config;
  /// Last reported state of every connected hub.
  std::map<std::string, HubState> hubs;
  bool degraded = false;

  bool operator==(const SessionModel&) const = default;
};

struct TransitionResult {
  bool ok = true;
  SessionModel next;
  std::vector<Effect> effects;
  /// BAD_TRANSITION, HUBS_NOT_READY or INVALID_CONFIG when !ok.
  std::string code;
  std::string message;
};

/// Never throws. A rejected event leaves the model unchanged.
TransitionResult transition(const SessionModel& model, const SessionEvent& event);

/// Records a hub state report; not a lifecycle event.
SessionModel observe_hub(SessionModel model, const std::string& hub_id, HubState state);

/// Hubs named by the active config that are not READY (missing ones
/// included), in config order.
std::vector<std::string> hubs_not_ready(const SessionModel& model);

}  // namespace dhub::supd
