#include "rejuv/rejuvenation.hpp"

#include <openssl/crypto.h>
#include <openssl/hmac.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

namespace rejuv {

namespace {

constexpr double kTimeTol = 1e-9;

std::array<std::uint8_t, 96> canonical_bytes(const State& point) {
  std::array<std::uint8_t, 96> buf{};
  for (int i = 0; i < 12; ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(point(i));
    for (int b = 0; b < 8; ++b) {
      buf[8 * i + b] = static_cast<std::uint8_t>((bits >> (8 * b)) & 0xff);
    }
  }
  return buf;
}

double quad_form(const Mat& p, const State& x, const State& c) {
  const Vec d = x - c;
  return d.dot(p * d);
}

}  // namespace

Tag ref_tag(const State& point, const Key& key) {
  const auto bytes = canonical_bytes(point);
  Tag tag{};
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), bytes.data(),
       bytes.size(), tag.data(), &len);
  return tag;
}

bool authenticate(const RefMessage& msg, const Key& key) {
  if (msg.tag.size() != 32 || !msg.point.allFinite()) return false;
  const Tag expected = ref_tag(msg.point, key);
  return CRYPTO_memcmp(expected.data(), msg.tag.data(), expected.size()) == 0;
}

Key key_from_hex(const std::string& hex) {
  if (hex.size() % 2 != 0 || hex.empty()) {
    throw ConfigError("authentication key must be a nonempty hex string");
  }
  Key key(hex.size() / 2);
  for (std::size_t i = 0; i < key.size(); ++i) {
    const auto nibble = [&](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      throw ConfigError("invalid hex digit in authentication key");
    };
    key[i] = static_cast<std::uint8_t>(16 * nibble(hex[2 * i]) +
                                       nibble(hex[2 * i + 1]));
  }
  return key;
}

bool is_equilibrium_point(const State& x, double tol) {
  if (!x.allFinite()) return false;
  return std::abs(x(SPHI)) <= tol && std::abs(x(STHETA)) <= tol &&
         x.segment<6>(SVX).cwiseAbs().maxCoeff() <= tol;
}

void TimingParams::validate() const {
  if (!(t_sr > 0.0) || !(control_period > 0.0)) {
    throw ConfigError("timing: T_SR and the control period must be positive");
  }
  if (!(t_r > 0.0) || t_r > t_uc - t_sr + kTimeTol) {
    throw ConfigError("timing: need 0 < t_r <= T_UC - T_SR");
  }
  if (tc_budget() < control_period - kTimeTol) {
    throw ConfigError("timing: tracking budget shorter than one control period");
  }
}

double TimingParams::sr_quantized() const {
  return std::ceil((t_sr - kTimeTol) / control_period) * control_period;
}

double TimingParams::tc_budget() const {
  return t_r - (sr_quantized() - t_sr);
}

const char* event_name(EventKind k) {
  switch (k) {
    case EventKind::ModeSwitch: return "mode_switch";
    case EventKind::RefSwitch: return "ref_switch";
    case EventKind::AuthOk: return "auth_ok";
    case EventKind::AuthFail: return "auth_fail";
    case EventKind::MsgDropped: return "msg_dropped";
    case EventKind::TcCompleted: return "tc_completed";
    case EventKind::TcTimeout: return "tc_timeout";
    case EventKind::ScCompleted: return "sc_completed";
    case EventKind::SrCompleted: return "sr_completed";
    case EventKind::AttackOn: return "attack_on";
    case EventKind::AttackOff: return "attack_off";
    case EventKind::SwitchOutsideSafeSet: return "switch_outside_safe_set";
    case EventKind::Fault: return "fault";
  }
  return "?";
}

HypervisorState hv_init(const State& x_start, double first_sc_hold,
                        double t0) {
  HypervisorState hv;
  hv.mode = Mode::SR;
  hv.x_cur = x_start;
  hv.x_new = x_start;  // a cycle with no authenticated message re-tracks
  hv.mode_entry_time = t0;
  hv.comm_on = false;
  hv.first_sc_hold = first_sc_hold;
  return hv;
}

namespace {

void process_inbox(HypervisorState& hv, const HvContext& ctx, double t,
                   std::span<const RefMessage> inbox, HvStepResult& res) {
  for (const RefMessage& msg : inbox) {
    if (!hv.comm_on) {
      ++hv.dropped_messages;
      res.events.push_back({t, EventKind::MsgDropped, "comm off"});
      continue;
    }
    if (msg.tag.size() != 32 || !msg.point.allFinite() ||
        !is_equilibrium_point(msg.point)) {
      ++hv.dropped_messages;
      res.events.push_back({t, EventKind::MsgDropped, "malformed"});
      continue;
    }
    if (authenticate(msg, ctx.key)) {
      hv.x_new = msg.point;
      res.authenticated.push_back(msg.point);
      res.events.push_back({t, EventKind::AuthOk, ""});
    } else {
      ++hv.auth_failures;
      if (ctx.auth_policy == AuthFailPolicy::ResetToCurrent) {
        hv.x_new = hv.x_cur;
      }
      res.events.push_back({t, EventKind::AuthFail, ""});
    }
  }
}

void enter_sc(HypervisorState& hv, double t, HvStepResult& res) {
  hv.mode = Mode::SC;
  hv.mode_entry_time = t;
  hv.comm_on = false;
  hv.sc_hold_until = t + hv.first_sc_hold;
  hv.first_sc_hold = 0.0;
  res.events.push_back({t, EventKind::SrCompleted, ""});
  res.events.push_back({t, EventKind::ModeSwitch, "SR->SC"});
}

void enter_tc(HypervisorState& hv, const HvContext& ctx, double t,
              HvStepResult& res) {
  res.events.push_back({t, EventKind::ScCompleted, ""});
  if ((hv.x_new - hv.x_cur).cwiseAbs().maxCoeff() != 0.0) {
    res.ref_switched = true;
    res.ref_before = hv.x_cur;
    res.events.push_back({t, EventKind::RefSwitch, ""});
  }
  hv.x_cur = hv.x_new;
  hv.mode = Mode::TC;
  hv.mode_entry_time = t;
  hv.timer_deadline = t + ctx.timing.tc_budget();
  hv.comm_on = true;
  res.events.push_back({t, EventKind::ModeSwitch, "SC->TC"});
}

void enter_sr(HypervisorState& hv, double t, EventKind reason,
              HvStepResult& res) {
  res.events.push_back({t, reason, ""});
  hv.mode = Mode::SR;
  hv.mode_entry_time = t;
  hv.comm_on = false;
  res.events.push_back({t, EventKind::ModeSwitch, "TC->SR"});
}

}  // namespace

HvStepResult hv_step(HypervisorState& hv, const HvContext& ctx, const State& x,
                     double t, std::span<const RefMessage> inbox) {
  HvStepResult res;
  process_inbox(hv, ctx, t, inbox, res);

  if (hv.mode == Mode::SR &&
      t - hv.mode_entry_time >= ctx.timing.sr_quantized() - kTimeTol) {
    enter_sc(hv, t, res);
  }
  if (hv.mode == Mode::SC && t >= hv.sc_hold_until - kTimeTol &&
      quad_form(ctx.p, x, hv.x_cur) <= ctx.eps_sc) {
    enter_tc(hv, ctx, t, res);
  } else if (hv.mode == Mode::TC) {
    if (quad_form(ctx.p, x, hv.x_cur) <= ctx.eps_tc) {
      enter_sr(hv, t, EventKind::TcCompleted, res);
    } else if (t + ctx.timing.control_period > hv.timer_deadline + kTimeTol) {
      enter_sr(hv, t, EventKind::TcTimeout, res);
    }
  }

  res.mode = hv.mode;
  res.comm_on = hv.comm_on;
  res.reference = hv.x_cur;
  return res;
}

}  // namespace rejuv
