#include "dogfight/checkpoint.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dogfight/digest.hpp"

namespace dogfight {

namespace {

using Json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'D', 'F', 'C', 'K'};
constexpr std::size_t kHeaderSize = 4 + 4 + 8;
constexpr std::size_t kChecksumSize = 32;
constexpr const char* kNetNames[] = {"actor", "q1", "q2", "q1_target", "q2_target"};

template <typename T>
void put_le(std::string& out, T v) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(std::string_view in, std::size_t at) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return v;
}

void put_f32(std::string& out, std::span<const float> values) {
  for (float f : values) put_le(out, std::bit_cast<std::uint32_t>(f));
}

const nn::Mlp& net(const sac::PolicyBundle& b, int i) {
  const nn::Mlp* nets[] = {&b.actor, &b.q1, &b.q2, &b.q1_target, &b.q2_target};
  return *nets[i];
}

nn::Mlp& net(sac::PolicyBundle& b, int i) {
  nn::Mlp* nets[] = {&b.actor, &b.q1, &b.q2, &b.q1_target, &b.q2_target};
  return *nets[i];
}

std::string features_name(sac::CriticFeatures f) {
  return f == sac::CriticFeatures::tabular_sign ? "tabular_sign" : "state_action";
}

sac::CriticFeatures features_from(const std::string& s) {
  if (s == "state_action") return sac::CriticFeatures::state_action;
  if (s == "tabular_sign") return sac::CriticFeatures::tabular_sign;
  throw CheckpointError("manifest: unknown critic_features '" + s + "'");
}

void fsync_path(const std::string& path, int flags) {
  const int fd = ::open(path.c_str(), flags);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

std::string parent_dir(const std::string& path) {
  const auto slash = path.find_last_of('/');
  if (slash == std::string::npos) return ".";
  if (slash == 0) return "/";
  return path.substr(0, slash);
}

}  // namespace

const sac::PolicyBundle& Checkpoint::get(std::string_view name) const {
  for (const auto& nb : bundles) {
    if (nb.name == name) return nb.bundle;
  }
  throw CheckpointError("checkpoint has no bundle named '" + std::string(name) + "'");
}

bool Checkpoint::contains(std::string_view name) const {
  for (const auto& nb : bundles) {
    if (nb.name == name) return true;
  }
  return false;
}

std::string serialize_checkpoint(const Checkpoint& c) {
  Json manifest;
  manifest["format"] = "dogfight-checkpoint";
  manifest["kind"] = c.kind;
  manifest["profile"] = c.profile;
  manifest["config_hash"] = c.config_hash;
  manifest["config_text"] = c.config_text;
  manifest["seed"] = c.seed;
  manifest["counters"] = Json::object();
  for (const auto& [k, v] : c.counters) manifest["counters"][k] = v;

  std::string payload;
  Json tensors = Json::array();
  Json bundles = Json::array();
  auto add_tensor = [&](const std::string& name, std::vector<std::size_t> shape, std::span<const float> data) {
    tensors.push_back({{"name", name}, {"shape", shape}, {"offset", payload.size()}});
    put_f32(payload, data);
  };
  for (const auto& nb : c.bundles) {
    const auto& b = nb.bundle;
    Json jb;
    jb["name"] = nb.name;
    jb["obs_dim"] = b.obs_dim;
    jb["act_dim"] = b.act_dim;
    jb["critic_features"] = features_name(b.critic_features);
    jb["frozen"] = b.frozen;
    jb["entropy_target"] = b.entropy_target;
    jb["gamma"] = b.gamma;
    jb["log_std_min"] = b.log_std_min;
    jb["log_std_max"] = b.log_std_max;
    for (int i = 0; i < 5; ++i) {
      const nn::Mlp& m = net(b, i);
      jb["layers"][kNetNames[i]] = m.sizes();
      for (std::size_t l = 0; l < m.layers().size(); ++l) {
        const auto& layer = m.layers()[l];
        const std::string base = nb.name + "/" + kNetNames[i] + "/" + std::to_string(l);
        add_tensor(base + "/weight",
                   {static_cast<std::size_t>(layer.weight.rows()), static_cast<std::size_t>(layer.weight.cols())},
                   std::span<const float>(layer.weight.data(), static_cast<std::size_t>(layer.weight.size())));
        add_tensor(base + "/bias", {static_cast<std::size_t>(layer.bias.size())},
                   std::span<const float>(layer.bias.data(), static_cast<std::size_t>(layer.bias.size())));
      }
    }
    const float log_alpha = b.log_alpha;
    add_tensor(nb.name + "/log_alpha", {1}, std::span<const float>(&log_alpha, 1));
    bundles.push_back(jb);
  }
  manifest["bundles"] = bundles;
  manifest["tensors"] = tensors;
  manifest["payload_bytes"] = payload.size();

  const std::string text = manifest.dump();
  std::string out(kMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  out += payload;
  Digest d;
  d.update(out);
  const auto sum = d.bytes();
  out.append(reinterpret_cast<const char*>(sum.data()), sum.size());
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < kHeaderSize + kChecksumSize) throw CheckpointError("checkpoint truncated: file too short");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CheckpointError("not a checkpoint: bad magic");
  const std::string_view body = bytes.substr(0, bytes.size() - kChecksumSize);
  Digest d;
  d.update(body);
  const auto sum = d.bytes();
  if (std::memcmp(sum.data(), bytes.data() + body.size(), kChecksumSize) != 0) {
    throw CheckpointError("checkpoint checksum mismatch (truncated or corrupted file)");
  }
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto manifest_len = get_le<std::uint64_t>(bytes, 8);
  if (manifest_len > body.size() - kHeaderSize) throw CheckpointError("manifest length exceeds file");
  const std::string_view payload = body.substr(kHeaderSize + manifest_len);

  Json m;
  try {
    m = Json::parse(body.substr(kHeaderSize, manifest_len));
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("manifest is not valid JSON: ") + e.what());
  }

  Checkpoint c;
  try {
    if (m.at("format") != "dogfight-checkpoint") throw CheckpointError("manifest: wrong format tag");
    if (m.at("payload_bytes").get<std::size_t>() != payload.size()) {
      throw CheckpointError("manifest: payload size mismatch");
    }
    c.kind = m.at("kind").get<std::string>();
    c.profile = m.at("profile").get<std::string>();
    c.config_hash = m.at("config_hash").get<std::string>();
    c.config_text = m.at("config_text").get<std::string>();
    c.seed = m.at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : m.at("counters").items()) c.counters[k] = v.get<std::int64_t>();

    const Json& tensors = m.at("tensors");
    std::size_t next_tensor = 0;
    std::size_t expected_offset = 0;
    auto read_tensor = [&](const std::string& name, std::span<float> dst) {
      if (next_tensor >= tensors.size()) throw CheckpointError("manifest: missing tensor " + name);
      const Json& t = tensors.at(next_tensor++);
      if (t.at("name").get<std::string>() != name) {
        throw CheckpointError("manifest: expected tensor " + name + ", found " + t.at("name").get<std::string>());
      }
      std::size_t count = 1;
      for (const auto& dim : t.at("shape")) count *= dim.get<std::size_t>();
      if (count != dst.size()) throw CheckpointError("manifest: tensor " + name + " has the wrong shape");
      const auto offset = t.at("offset").get<std::size_t>();
      if (offset != expected_offset || offset + 4 * count > payload.size()) {
        throw CheckpointError("manifest: tensor " + name + " has a bad offset");
      }
      for (std::size_t i = 0; i < count; ++i) {
        dst[i] = std::bit_cast<float>(get_le<std::uint32_t>(payload, offset + 4 * i));
      }
      expected_offset = offset + 4 * count;
    };

    for (const Json& jb : m.at("bundles")) {
      NamedBundle nb;
      nb.name = jb.at("name").get<std::string>();
      auto& b = nb.bundle;
      b.obs_dim = jb.at("obs_dim").get<int>();
      b.act_dim = jb.at("act_dim").get<int>();
      b.critic_features = features_from(jb.at("critic_features").get<std::string>());
      b.frozen = jb.at("frozen").get<bool>();
      b.entropy_target = jb.at("entropy_target").get<float>();
      b.gamma = jb.at("gamma").get<float>();
      b.log_std_min = jb.at("log_std_min").get<float>();
      b.log_std_max = jb.at("log_std_max").get<float>();
      for (int i = 0; i < 5; ++i) {
        auto sizes = jb.at("layers").at(kNetNames[i]).get<std::vector<int>>();
        if (sizes.size() < 2) throw CheckpointError("manifest: network needs at least two layer sizes");
        for (int s : sizes) {
          if (s <= 0) throw CheckpointError("manifest: non-positive layer size");
        }
        nn::Mlp& mlp = net(b, i);
        mlp = nn::Mlp(sizes);
        for (std::size_t l = 0; l < mlp.layers().size(); ++l) {
          auto& layer = mlp.layers()[l];
          const std::string base = nb.name + "/" + kNetNames[i] + "/" + std::to_string(l);
          read_tensor(base + "/weight",
                      std::span<float>(layer.weight.data(), static_cast<std::size_t>(layer.weight.size())));
          read_tensor(base + "/bias", std::span<float>(layer.bias.data(), static_cast<std::size_t>(layer.bias.size())));
        }
      }
      read_tensor(nb.name + "/log_alpha", std::span<float>(&b.log_alpha, 1));
      if (b.actor.input_size() != b.obs_dim || b.actor.output_size() != 2 * b.act_dim ||
          b.q1.input_size() != b.critic_input_dim() || b.q1.output_size() != 1 || !b.q1.same_shape(b.q2) ||
          !b.q1.same_shape(b.q1_target) || !b.q2.same_shape(b.q2_target)) {
        throw CheckpointError("manifest: layer sizes of bundle '" + nb.name + "' are inconsistent");
      }
      c.bundles.push_back(std::move(nb));
    }
    if (next_tensor != tensors.size() || expected_offset != payload.size()) {
      throw CheckpointError("manifest: unreferenced tensor data");
    }
  } catch (const Json::exception& e) {
    throw CheckpointError(std::string("manifest is malformed: ") + e.what());
  }
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  const std::string bytes = serialize_checkpoint(checkpoint);
  const std::string tmp = path + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw CheckpointError("cannot create " + tmp + ": " + std::strerror(errno));
  std::size_t written = 0;
  while (written < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + written, bytes.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      ::unlink(tmp.c_str());
      throw CheckpointError("write to " + tmp + " failed: " + std::strerror(err));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) {
    ::unlink(tmp.c_str());
    throw CheckpointError("cannot flush " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    ::unlink(tmp.c_str());
    throw CheckpointError("cannot rename " + tmp + " to " + path + ": " + std::strerror(errno));
  }
  fsync_path(parent_dir(path), O_RDONLY | O_DIRECTORY);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  std::ostringstream s;
  s << in.rdbuf();
  try {
    return parse_checkpoint(s.str());
  } catch (const CheckpointError& e) {
    throw CheckpointError(path + ": " + e.what());
  }
}

void check_layout(const sac::PolicyBundle& loaded, const sac::PolicyBundle& expected, std::string_view name) {
  const std::string who = "bundle '" + std::string(name) + "': ";
  if (loaded.obs_dim != expected.obs_dim || loaded.act_dim != expected.act_dim) {
    throw CheckpointError(who + "dimensions " + std::to_string(loaded.obs_dim) + "x" +
                          std::to_string(loaded.act_dim) + " do not match expected " +
                          std::to_string(expected.obs_dim) + "x" + std::to_string(expected.act_dim));
  }
  for (int i = 0; i < 5; ++i) {
    if (!net(loaded, i).same_shape(net(expected, i))) {
      throw CheckpointError(who + "layer sizes of " + kNetNames[i] + " do not match the expected network");
    }
  }
}

}  // namespace dogfight
