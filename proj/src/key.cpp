#include "dtams/key.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "dtams/error.hpp"

namespace dtams {

using nlohmann::json;

double to_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

std::string exact_f32_decimal(double x) {
  const double f = to_f32(x);
  char buf[256];
  auto res = std::to_chars(buf, buf + sizeof buf, f, std::chars_format::scientific, 120);
  std::string s(buf, res.ptr);
  const auto e = s.find('e');
  std::string mant = s.substr(0, e), expo = s.substr(e);
  if (mant.find('.') != std::string::npos) {
    while (mant.back() == '0') mant.pop_back();
    if (mant.back() == '.') mant.pop_back();
  }
  return mant + expo;
}

namespace {

double parse_real(const json& j, const char* what) {
  if (!j.is_string()) throw Error(ErrorKind::malformed_header, std::string("expected decimal string: ") + what);
  const std::string s = j.get<std::string>();
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorKind::malformed_header, std::string("bad decimal for ") + what + ": " + s);
  return v;
}

json real(double x) { return exact_f32_decimal(x); }

json to_json(const MappingKey& k) {
  json hooks = json::array();
  for (const auto& h : k.hooks) {
    json chans = json::array();
    for (const auto& lv : h.channels) {
      json tau = json::array();
      for (double t : lv.part.tau) tau.push_back(real(t));
      chans.push_back({{"tau", tau}, {"perm", lv.P.perm}, {"sd", real(lv.sd)}, {"kappa", real(lv.kappa)}});
    }
    hooks.push_back({{"t", h.t}, {"channels", chans}});
  }
  return {{"format", "dtams-key"},
          {"version", k.version},
          {"master_seed", k.master_seed},
          {"schedule",
           {{"id", "linear"},
            {"num_steps", k.schedule.num_steps},
            {"a_at_T", real(k.schedule.a_at_T)},
            {"a_at_1", real(k.schedule.a_at_1)},
            {"sigma", real(k.schedule.sigma)}}},
          {"target_id", k.target_id},
          {"shape", {k.height, k.width, k.channels}},
          {"g", k.g},
          {"payload_bytes", k.payload_bytes},
          {"timesteps", k.timesteps},
          {"placement", k.placement},
          {"w", real(k.w)},
          {"margin", real(k.margin)},
          {"eps", real(k.eps)},
          {"hooks", hooks}};
}

}  // namespace

void MappingKey::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorKind::malformed_header, "key: " + m); };
  if (version != kKeyVersion) bad("unsupported version " + std::to_string(version));
  if (g < 1 || g > 8) bad("g outside [1, 8]");
  if (height < 1 || width < 1 || channels < 1) bad("bad shape");
  if (schedule.num_steps < 1) bad("bad schedule");
  if (placement != "nested") bad("unknown placement mode " + placement);
  if (!(w > 0 && w <= 1) || !(margin >= 0 && margin < 0.5)) bad("bad w or margin");
  for (std::size_t i = 0; i < timesteps.size(); ++i) {
    if (timesteps[i] < 1 || timesteps[i] > schedule.num_steps) bad("timestep outside schedule");
    if (i && timesteps[i] >= timesteps[i - 1]) bad("timesteps not strictly descending");
  }
  if (hooks.size() > timesteps.size()) bad("more hooks than timesteps");
  const int T = 1 << g;
  for (std::size_t i = 0; i < hooks.size(); ++i) {
    if (hooks[i].t != timesteps[i]) bad("hook order does not follow T*");
    if (static_cast<int>(hooks[i].channels.size()) != channels) bad("hook channel count");
    for (const auto& lv : hooks[i].channels) {
      if (lv.part.T() != T || static_cast<int>(lv.P.perm.size()) != T) bad("interval count != 2^g");
      for (int j = 1; j <= T; ++j)
        if (!(lv.part.tau[j] > lv.part.tau[j - 1])) bad("boundaries not increasing");
      if (!(lv.sd > 0) || !(lv.kappa > 0)) bad("nonpositive sd or kappa");
    }
  }
}

std::string key_to_json(const MappingKey& k) { return to_json(k).dump(2) + "\n"; }

MappingKey key_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::malformed_header, std::string("key is not JSON: ") + e.what());
  }
  MappingKey k;
  try {
    if (j.at("format") != "dtams-key") throw Error(ErrorKind::malformed_header, "not a dtams key");
    k.version = j.at("version").get<int>();
    if (k.version != kKeyVersion)
      throw Error(ErrorKind::malformed_header, "unsupported key version " + std::to_string(k.version));
    k.master_seed = j.at("master_seed").get<std::uint64_t>();
    const auto& s = j.at("schedule");
    if (s.at("id") != "linear") throw Error(ErrorKind::malformed_header, "unknown schedule id");
    k.schedule.num_steps = s.at("num_steps").get<int>();
    k.schedule.a_at_T = parse_real(s.at("a_at_T"), "a_at_T");
    k.schedule.a_at_1 = parse_real(s.at("a_at_1"), "a_at_1");
    k.schedule.sigma = parse_real(s.at("sigma"), "sigma");
    k.target_id = j.at("target_id").get<std::string>();
    const auto shape = j.at("shape").get<std::vector<int>>();
    if (shape.size() != 3) throw Error(ErrorKind::malformed_header, "shape needs 3 entries");
    k.height = shape[0];
    k.width = shape[1];
    k.channels = shape[2];
    k.g = j.at("g").get<int>();
    k.payload_bytes = j.at("payload_bytes").get<std::size_t>();
    k.timesteps = j.at("timesteps").get<std::vector<int>>();
    k.placement = j.at("placement").get<std::string>();
    k.w = parse_real(j.at("w"), "w");
    k.margin = parse_real(j.at("margin"), "margin");
    k.eps = parse_real(j.at("eps"), "eps");
    for (const auto& h : j.at("hooks")) {
      HookKey hk;
      hk.t = h.at("t").get<int>();
      for (const auto& c : h.at("channels")) {
        NestLevel lv;
        lv.part.g = k.g;
        for (const auto& t : c.at("tau")) lv.part.tau.push_back(parse_real(t, "tau"));
        lv.P = mapping_from_perm(c.at("perm").get<std::vector<int>>());
        lv.sd = parse_real(c.at("sd"), "sd");
        lv.kappa = parse_real(c.at("kappa"), "kappa");
        hk.channels.push_back(std::move(lv));
      }
      k.hooks.push_back(std::move(hk));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::malformed_header, std::string("malformed key: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::malformed_header) throw;
    throw Error(ErrorKind::malformed_header, std::string("malformed key: ") + e.what());
  }
  k.validate();
  return k;
}

void save_key(const std::string& path, const MappingKey& k) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::io, "cannot open " + path);
  os << key_to_json(k);
  if (!os) throw Error(ErrorKind::io, "write failed: " + path);
}

MappingKey load_key(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::io, "cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return key_from_json(ss.str());
}

std::string key_fingerprint(const MappingKey& k) {
  const std::string canon = to_json(k).dump();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(canon.data(), canon.size(), md, &len, EVP_sha256(), nullptr))
    throw Error(ErrorKind::io, "SHA-256 failed");
  std::string hex;
  char b[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(b, sizeof b, "%02x", md[i]);
    hex += b;
  }
  return hex;
}

}  // namespace dtams
