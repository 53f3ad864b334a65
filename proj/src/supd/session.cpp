// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/supd/session.hpp"

namespace dhub::supd {

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::Idle: return "IDLE";
    case SessionState::Configured: return "CONFIGURED";
    case SessionState::Recording: return "RECORDING";
    case SessionState::Finalizing: return "FINALIZING";
    case SessionState::Complete: return "COMPLETE";
    case SessionState::Error: return "ERROR";
  }
  return "?";
}

std::optional<SessionState> parse_session_state(std::string_view s) {
  for (auto st : kAllSessionStates) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

std::string_view to_string(EventKind e) {
  switch (e) {
    case EventKind::Apply: return "apply";
    case EventKind::Start: return "start";
    case EventKind::Stop: return "stop";
    case EventKind::HubLost: return "hub_lost";
    case EventKind::HubRecovered: return "hub_recovered";
    case EventKind::WriteFailed: return "write_failed";
    case EventKind::Finalized: return "finalized";
  }
  return "?";
}

std::string_view to_string(EffectKind e) {
  switch (e) {
    case EffectKind::ConfigureHub: return "configure_hub";
    case EffectKind::OpenRecording: return "open_recording";
    case EffectKind::StartHub: return "start_hub";
    case EffectKind::StopHub: return "stop_hub";
    case EffectKind::FinalizeRecording: return "finalize_recording";
    case EffectKind::AbortRecording: return "abort_recording";
    case EffectKind::Warn: return "warn";
  }
  return "?";
}

SessionModel observe_hub(SessionModel model, const std::string& hub_id, HubState state) {
  model.hubs[hub_id] = state;
  return model;
}

std::vector<std::string> hubs_not_ready(const SessionModel& model) {
  std::vector<std::string> out;
  if (!model.config) return out;
  for (const auto& h : model.config->hubs) {
    auto it = model.hubs.find(h.hub_id);
    if (it == model.hubs.end() || it->second != HubState::Ready) out.push_back(h.hub_id);
  }
  return out;
}

namespace {

bool in_config(const SessionModel& m, const std::string& hub_id) {
  if (!m.config) return false;
  for (const auto& h : m.config->hubs) {
    if (h.hub_id == hub_id) return true;
  }
  return false;
}

// Emits `kind` for every configured hub that is currently connected.
void for_connected_hubs(const SessionModel& m, EffectKind kind, std::vector<Effect>& out) {
  for (const auto& h : m.config->hubs) {
    if (m.hubs.count(h.hub_id)) out.push_back({kind, h.hub_id, "", ""});
  }
}

}  // namespace

TransitionResult transition(const SessionModel& model, const SessionEvent& event) {
  TransitionResult r;
  r.next = model;
  auto reject = [&](std::string code, std::string message) {
    r.ok = false;
    r.next = model;
    r.effects.clear();
    r.code = std::move(code);
    r.message = std::move(message);
    return r;
  };
  auto bad_transition = [&] {
    return reject("BAD_TRANSITION", std::string(to_string(event.kind)) + " is not allowed in " +
                                        std::string(to_string(model.state)));
  };
  const auto s = model.state;

  switch (event.kind) {
    case EventKind::Apply: {
      if (s == SessionState::Recording || s == SessionState::Finalizing) return bad_transition();
      if (!event.config) return reject("INVALID_CONFIG", "apply needs a config");
      auto violations = validate_session_config(*event.config);
      if (!violations.empty()) {
        return reject("INVALID_CONFIG", violations.front().code + " at " + violations.front().path);
      }
      r.next.state = SessionState::Configured;
      r.next.config = event.config;
      r.next.degraded = false;
      for_connected_hubs(r.next, EffectKind::ConfigureHub, r.effects);
      return r;
    }
    case EventKind::Start: {
      if (s != SessionState::Configured) return bad_transition();
      auto missing = hubs_not_ready(model);
      if (!missing.empty()) {
        std::string list;
        for (const auto& h : missing) list += (list.empty() ? "" : ", ") + h;
        return reject("HUBS_NOT_READY", "hubs not ready: " + list);
      }
      r.next.state = SessionState::Recording;
      r.effects.push_back({EffectKind::OpenRecording, "", "", ""});
      for_connected_hubs(r.next, EffectKind::StartHub, r.effects);
      return r;
    }
    case EventKind::Stop:
      if (s != SessionState::Recording) return bad_transition();
      r.next.state = SessionState::Finalizing;
      for_connected_hubs(r.next, EffectKind::StopHub, r.effects);
      r.effects.push_back({EffectKind::FinalizeRecording, "", "", ""});
      return r;
    case EventKind::Finalized:
      if (s != SessionState::Finalizing) return bad_transition();
      r.next.state = SessionState::Complete;
      return r;
    case EventKind::WriteFailed:
      if (s == SessionState::Recording) {
        r.next.state = SessionState::Error;
        for_connected_hubs(r.next, EffectKind::StopHub, r.effects);
        r.effects.push_back({EffectKind::AbortRecording, "", "", ""});
      } else if (s == SessionState::Finalizing) {
        r.next.state = SessionState::Error;
      } else {
        return bad_transition();
      }
      r.effects.push_back({EffectKind::Warn, "", "WRITE_FAILED", event.reason});
      return r;
    case EventKind::HubLost: {
      r.next.hubs.erase(event.hub_id);
      bool active = s == SessionState::Recording || s == SessionState::Finalizing;
      if (active && in_config(model, event.hub_id)) r.next.degraded = true;
      r.effects.push_back({EffectKind::Warn, event.hub_id, "HUB_LOST",
                           "hub " + event.hub_id + " disconnected" +
                               (active ? "; session continues degraded" : "")});
      return r;
    }
    case EventKind::HubRecovered: {
      // The hub's reported state was observed just before this event.
      if (!in_config(model, event.hub_id)) return r;
      auto it = model.hubs.find(event.hub_id);
      HubState hs = it == model.hubs.end() ? HubState::Idle : it->second;
      if (s == SessionState::Configured && hs != HubState::Streaming) {
        // A returning hub may hold an older setup; always refresh it.
        r.effects.push_back({EffectKind::ConfigureHub, event.hub_id, "", ""});
      } else if (s == SessionState::Recording) {
        // Bring a restarted hub back into the running session.
        if (hs == HubState::Idle) r.effects.push_back({EffectKind::ConfigureHub, event.hub_id, "", ""});
        if (hs != HubState::Streaming) r.effects.push_back({EffectKind::StartHub, event.hub_id, "", ""});
        r.effects.push_back({EffectKind::Warn, event.hub_id, "HUB_RECOVERED",
                             "hub " + event.hub_id + " rejoined the session"});
      }
      return r;
    }
  }
  return bad_transition();
}

}  // namespace dhub::supd
