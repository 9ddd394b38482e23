#include "mcgan/train/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

namespace mcgan::train {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<char, 8> kMagic{'M', 'C', 'G', 'A', 'N', 'C', 'K', 'P'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f32(float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    u32(v);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  const std::vector<unsigned char>& data() const { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& buf, std::size_t end) : buf_(buf), end_(end) {}
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw LoadError("checkpoint truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_++]) << (8 * i);
    return v;
  }
  float f32() {
    const std::uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<unsigned char>& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

void write_array(Writer& w, const std::string& name, const nn::Tensor<float>& t) {
  w.str(name);
  w.u32(static_cast<std::uint32_t>(t.rank()));
  for (int d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
  for (float v : t.values()) w.f32(v);
}

std::vector<std::pair<std::string, nn::Tensor<float>*>> state_arrays(TrainState& s) {
  std::vector<std::pair<std::string, nn::Tensor<float>*>> out;
  auto add_params = [&](const nn::ParamList<float>& params) {
    for (const auto& p : params) {
      nn::Var<float> v = p.var;
      out.emplace_back(p.name, &v.mutable_value());
    }
  };
  auto add_moments = [&](const std::string& prefix, nn::Adam<float>& opt) {
    const auto& params = opt.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      out.emplace_back("adam/" + prefix + "/m/" + params[i].name, &opt.first_moments()[i]);
      out.emplace_back("adam/" + prefix + "/v/" + params[i].name, &opt.second_moments()[i]);
    }
  };
  add_params(s.gen.parameters());
  add_params(s.disc.parameters());
  add_moments("gen", s.gen_opt);
  add_moments("disc", s.disc_opt);
  return out;
}

}  // namespace

json to_json(const model::GeneratorConfig& c) {
  return {{"width", c.width},
          {"height", c.height},
          {"label_channels", c.label_channels},
          {"fusion_channels", c.fusion_channels},
          {"local_channels", c.local_channels},
          {"global_blocks", c.global_blocks},
          {"local_blocks", c.local_blocks},
          {"pretrain_global", c.pretrain_global}};
}

json to_json(const model::DiscriminatorConfig& c) {
  return {{"input_channels", c.input_channels},
          {"stem_channels", c.stem_channels},
          {"stem_depth", c.stem_depth},
          {"channels", c.channels},
          {"layers", c.layers},
          {"norm", c.norm}};
}

json to_json(const TrainConfig& c) {
  return {{"lr0", c.lr0},
          {"epochs_constant", c.epochs_constant},
          {"epochs_decay", c.epochs_decay},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"batch_size", c.batch_size},
          {"mc", {{"n", c.mc.n}, {"dropout", c.mc.dropout}, {"enabled", c.mc.enabled}}},
          {"lambda", c.lambda},
          {"seed", c.seed},
          {"checkpoint_every", c.checkpoint_every},
          {"pretrain_epochs", c.pretrain_epochs}};
}

model::GeneratorConfig generator_config_from_json(const json& j) {
  model::GeneratorConfig c;
  c.width = j.at("width");
  c.height = j.at("height");
  c.label_channels = j.at("label_channels");
  c.fusion_channels = j.at("fusion_channels");
  c.local_channels = j.at("local_channels");
  c.global_blocks = j.at("global_blocks");
  c.local_blocks = j.at("local_blocks");
  c.pretrain_global = j.at("pretrain_global");
  return c;
}

model::DiscriminatorConfig discriminator_config_from_json(const json& j) {
  model::DiscriminatorConfig c;
  c.input_channels = j.at("input_channels");
  c.stem_channels = j.at("stem_channels");
  c.stem_depth = j.at("stem_depth");
  c.channels = j.at("channels");
  c.layers = j.at("layers");
  c.norm = j.at("norm");
  return c;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.lr0 = j.at("lr0");
  c.epochs_constant = j.at("epochs_constant");
  c.epochs_decay = j.at("epochs_decay");
  c.beta1 = j.at("beta1");
  c.beta2 = j.at("beta2");
  c.batch_size = j.at("batch_size");
  c.mc.n = j.at("mc").at("n");
  c.mc.dropout = j.at("mc").at("dropout");
  c.mc.enabled = j.at("mc").at("enabled");
  c.lambda = j.at("lambda");
  c.seed = j.at("seed");
  c.checkpoint_every = j.at("checkpoint_every");
  c.pretrain_epochs = j.at("pretrain_epochs");
  return c;
}

void save_checkpoint(const TrainState& state, const fs::path& path) {
  json header;
  header["format"] = "mcgan-checkpoint";
  header["version"] = kCheckpointVersion;
  header["gen_config"] = to_json(state.gen.config);
  header["disc_config"] = to_json(state.disc.config);
  header["train_config"] = to_json(state.config);
  header["epoch"] = state.epoch;
  header["step"] = state.step;
  header["rng_state"] = engine_state(state.rng);
  header["adam"] = {{"gen_steps", state.gen_opt.steps()}, {"disc_steps", state.disc_opt.steps()}};
  const std::string header_text = header.dump();

  Writer w;
  w.bytes(kMagic.data(), kMagic.size());
  w.u32(kCheckpointVersion);
  w.u64(header_text.size());
  w.bytes(header_text.data(), header_text.size());
  const auto gen_params = state.gen.parameters();
  const auto disc_params = state.disc.parameters();
  w.u32(static_cast<std::uint32_t>(3 * (gen_params.size() + disc_params.size())));
  for (const auto& p : gen_params) write_array(w, p.name, p.var.value());
  for (const auto& p : disc_params) write_array(w, p.name, p.var.value());
  auto write_moments = [&](const std::string& prefix, const nn::Adam<float>& opt) {
    for (std::size_t i = 0; i < opt.params().size(); ++i) {
      write_array(w, "adam/" + prefix + "/m/" + opt.params()[i].name, opt.first_moments()[i]);
      write_array(w, "adam/" + prefix + "/v/" + opt.params()[i].name, opt.second_moments()[i]);
    }
  };
  write_moments("gen", state.gen_opt);
  write_moments("disc", state.disc_opt);
  const auto& body = w.data();
  const std::uint64_t sum =
      fnv1a64(std::string_view(reinterpret_cast<const char*>(body.data()), body.size()));
  w.u64(sum);

  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write checkpoint: " + tmp.string());
    os.write(reinterpret_cast<const char*>(w.data().data()), static_cast<std::streamsize>(w.data().size()));
    if (!os) throw IoError("failed writing checkpoint: " + tmp.string());
  }
  fs::rename(tmp, path);
}

TrainState load_checkpoint(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < kMagic.size() + 4 + 8 + 8) throw LoadError("checkpoint truncated: " + path.string());
  if (!std::equal(kMagic.begin(), kMagic.end(), buf.begin())) throw LoadError("not an mcgan checkpoint: " + path.string());

  Reader r(buf, buf.size() - 8);
  r.str(kMagic.size());
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw LoadError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  {
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(buf[buf.size() - 8 + i]) << (8 * i);
    const std::uint64_t actual = fnv1a64(std::string_view(reinterpret_cast<const char*>(buf.data()), buf.size() - 8));
    if (stored != actual) throw LoadError("checkpoint checksum mismatch (corrupt or truncated): " + path.string());
  }

  json header;
  try {
    header = json::parse(r.str(r.u64()));
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed checkpoint header: ") + e.what());
  }

  TrainState state;
  std::map<std::string, nn::Tensor<float>> arrays;
  try {
    if (header.at("format") != "mcgan-checkpoint") throw LoadError("checkpoint format tag mismatch");
    const auto gen_cfg = generator_config_from_json(header.at("gen_config"));
    const auto disc_cfg = discriminator_config_from_json(header.at("disc_config"));
    const auto train_cfg = train_config_from_json(header.at("train_config"));
    state = init_train_state(gen_cfg, disc_cfg, train_cfg);
    state.epoch = header.at("epoch");
    state.step = header.at("step");
    state.rng = engine_from_state(header.at("rng_state").get<std::string>());
    state.gen_opt.set_steps(header.at("adam").at("gen_steps"));
    state.disc_opt.set_steps(header.at("adam").at("disc_steps"));
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("invalid configuration in checkpoint: ") + e.what());
  }

  const std::uint32_t count = r.u32();
  for (std::uint32_t a = 0; a < count; ++a) {
    const std::string name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw LoadError("checkpoint array '" + name + "' has implausible rank");
    nn::Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<int>(r.u32()));
    const std::size_t n = nn::shape_numel(shape);
    r.need(n * 4);
    std::vector<float> values(n);
    for (auto& v : values) v = r.f32();
    if (!arrays.emplace(name, nn::Tensor<float>(shape, std::move(values))).second)
      throw LoadError("duplicate checkpoint array '" + name + "'");
  }
  if (r.pos() != buf.size() - 8) throw LoadError("trailing bytes in checkpoint");

  auto targets = state_arrays(state);
  if (targets.size() != arrays.size())
    throw LoadError("checkpoint has " + std::to_string(arrays.size()) + " arrays, expected " + std::to_string(targets.size()));
  for (auto& [name, tensor] : targets) {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw LoadError("checkpoint missing array '" + name + "'");
    if (it->second.shape() != tensor->shape())
      throw LoadError("checkpoint array '" + name + "' has shape " + nn::shape_string(it->second.shape()) + ", expected " +
                      nn::shape_string(tensor->shape()));
    *tensor = std::move(it->second);
  }
  return state;
}

}  // namespace mcgan::train
