#include "fv/train/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

namespace fv::train {
namespace {

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path), tmp_(path + ".tmp") {
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw DataError("checkpoint: cannot open " + tmp_ + " for writing");
  }

  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    std::uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    bytes(b, 8);
  }
  void f32_array(const float* p, std::size_t n) {
    // Host is little-endian x86; floats go out verbatim.
    bytes(p, n * sizeof(float));
  }

  void commit() {
    out_.flush();
    if (!out_) throw DataError("checkpoint: write to " + tmp_ + " failed");
    out_.close();
    std::filesystem::rename(tmp_, path_);
  }

 private:
  std::string path_;
  std::string tmp_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("checkpoint: cannot open " + path);
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  std::size_t offset() const { return off_; }
  bool at_end() const { return off_ == buf_.size(); }

  void bytes(void* p, std::size_t n, const char* what) {
    if (off_ + n > buf_.size())
      throw FormatError(std::string("checkpoint truncated while reading ") + what, off_);
    std::memcpy(p, buf_.data() + off_, n);
    off_ += n;
  }
  std::uint8_t u8(const char* what) {
    std::uint8_t v;
    bytes(&v, 1, what);
    return v;
  }
  std::uint32_t u32(const char* what) {
    std::uint8_t b[4];
    bytes(b, 4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    std::uint8_t b[8];
    bytes(b, 8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  std::string str(std::size_t n, const char* what) {
    std::string s(n, '\0');
    bytes(s.data(), n, what);
    return s;
  }

 private:
  std::vector<char> buf_;
  std::size_t off_ = 0;
};

void write_tensor(Writer& w, const std::string& name, const nn::Tensor& t) {
  w.u32(static_cast<std::uint32_t>(name.size()));
  w.bytes(name.data(), name.size());
  w.u8(0);  // dtype tag: float32
  const nn::Shape s = t.shape();
  w.u64(static_cast<std::uint64_t>(s.n));
  w.u64(static_cast<std::uint64_t>(s.c));
  w.u64(static_cast<std::uint64_t>(s.h));
  w.u64(static_cast<std::uint64_t>(s.w));
  w.f32_array(t.data(), static_cast<std::size_t>(t.numel()));
}

}  // namespace

void checkpoint_save(const std::string& path, resfpn::Model& model,
                     const nn::AdamState* adam, const nlohmann::json& extra) {
  std::vector<nn::ParamSlot> slots = model.state_tensors();
  std::vector<nn::ParamSlot> trainable = model.parameters();
  const bool with_adam = adam != nullptr && !adam->m.empty();
  if (with_adam && adam->m.size() != trainable.size())
    throw ParamError("checkpoint: optimiser state does not match model parameters");

  nlohmann::json meta = extra.is_object() ? extra : nlohmann::json::object();
  meta["model"] = model.config();
  if (with_adam) {
    meta["adam"] = {{"lr", adam->lr},
                    {"beta1", adam->beta1},
                    {"beta2", adam->beta2},
                    {"eps", adam->eps},
                    {"step", adam->step}};
  }
  const std::string meta_str = meta.dump();

  std::uint32_t count = static_cast<std::uint32_t>(slots.size());
  if (with_adam) count += static_cast<std::uint32_t>(2 * trainable.size());

  Writer w(path);
  w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.u32(kCheckpointVersion);
  w.u64(meta_str.size());
  w.bytes(meta_str.data(), meta_str.size());
  w.u32(count);
  for (const nn::ParamSlot& s : slots) write_tensor(w, s.name, *s.tensor);
  if (with_adam) {
    for (std::size_t i = 0; i < trainable.size(); ++i) {
      nn::Tensor m(trainable[i].tensor->shape());
      std::copy(adam->m[i].begin(), adam->m[i].end(), m.data());
      write_tensor(w, "adam.m." + trainable[i].name, m);
      nn::Tensor v(trainable[i].tensor->shape());
      std::copy(adam->v[i].begin(), adam->v[i].end(), v.data());
      write_tensor(w, "adam.v." + trainable[i].name, v);
    }
  }
  w.commit();
}

Checkpoint checkpoint_load(const std::string& path) {
  Reader r(path);
  char magic[sizeof(kCheckpointMagic)];
  r.bytes(magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw FormatError("checkpoint: bad magic bytes", 0);
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion)
    throw VersionError("checkpoint: unsupported format version " +
                       std::to_string(version) + ", expected " +
                       std::to_string(kCheckpointVersion));

  const std::size_t meta_off = r.offset();
  const std::uint64_t meta_len = r.u64("metadata length");
  const std::string meta_str = r.str(static_cast<std::size_t>(meta_len), "metadata");
  nlohmann::json meta = nlohmann::json::parse(meta_str, nullptr, false);
  if (meta.is_discarded() || !meta.is_object())
    throw FormatError("checkpoint: metadata is not a JSON object", meta_off);
  if (!meta.contains("model"))
    throw FormatError("checkpoint: metadata lacks the architecture block", meta_off);

  resfpn::ModelConfig cfg;
  try {
    cfg = meta.at("model").get<resfpn::ModelConfig>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(std::string("checkpoint: bad architecture block: ") + e.what(),
                      meta_off);
  }

  Checkpoint ck{resfpn::Model::build_empty(cfg), std::nullopt, nlohmann::json::object()};

  const std::uint32_t count = r.u32("tensor count");
  struct Stored {
    nn::Shape shape;
    std::vector<float> data;
  };
  std::map<std::string, Stored> stored;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t entry_off = r.offset();
    const std::uint32_t name_len = r.u32("tensor name length");
    if (name_len == 0 || name_len > 4096)
      throw FormatError("checkpoint: implausible tensor name length", entry_off);
    const std::string name = r.str(name_len, "tensor name");
    const std::uint8_t tag = r.u8("dtype tag");
    if (tag != 0)
      throw FormatError("checkpoint: unknown dtype tag for " + name, entry_off);
    nn::Shape s;
    s.n = static_cast<std::int64_t>(r.u64("dim n"));
    s.c = static_cast<std::int64_t>(r.u64("dim c"));
    s.h = static_cast<std::int64_t>(r.u64("dim h"));
    s.w = static_cast<std::int64_t>(r.u64("dim w"));
    if (s.n <= 0 || s.c <= 0 || s.h <= 0 || s.w <= 0 || s.numel() > (1ll << 32))
      throw FormatError("checkpoint: implausible shape for " + name, entry_off);
    Stored st;
    st.shape = s;
    st.data.resize(static_cast<std::size_t>(s.numel()));
    r.bytes(st.data.data(), st.data.size() * sizeof(float), "tensor payload");
    if (!stored.emplace(name, std::move(st)).second)
      throw FormatError("checkpoint: duplicate tensor " + name, entry_off);
  }
  if (!r.at_end())
    throw FormatError("checkpoint: trailing bytes after last tensor", r.offset());

  for (const nn::ParamSlot& slot : ck.model.state_tensors()) {
    auto it = stored.find(slot.name);
    if (it == stored.end())
      throw FormatError("checkpoint: missing tensor " + slot.name, r.offset());
    if (!(it->second.shape == slot.tensor->shape()))
      throw FormatError("checkpoint: shape mismatch for " + slot.name, r.offset());
    slot.tensor->vec() = it->second.data;
    stored.erase(it);
  }

  if (meta.contains("adam")) {
    nn::AdamState adam;
    const nlohmann::json& aj = meta.at("adam");
    adam.lr = aj.at("lr").get<float>();
    adam.beta1 = aj.at("beta1").get<float>();
    adam.beta2 = aj.at("beta2").get<float>();
    adam.eps = aj.at("eps").get<float>();
    adam.step = aj.at("step").get<std::int64_t>();
    for (const nn::ParamSlot& slot : ck.model.parameters()) {
      auto im = stored.find("adam.m." + slot.name);
      auto iv = stored.find("adam.v." + slot.name);
      if (im == stored.end() || iv == stored.end())
        throw FormatError("checkpoint: missing optimiser tensors for " + slot.name,
                          r.offset());
      if (!(im->second.shape == slot.tensor->shape()) ||
          !(iv->second.shape == slot.tensor->shape()))
        throw FormatError("checkpoint: optimiser shape mismatch for " + slot.name,
                          r.offset());
      adam.m.push_back(std::move(im->second.data));
      adam.v.push_back(std::move(iv->second.data));
      stored.erase(im);
      stored.erase(iv);
    }
    ck.adam = std::move(adam);
  }

  if (!stored.empty())
    throw FormatError("checkpoint: unexpected tensor " + stored.begin()->first,
                      r.offset());

  meta.erase("model");
  meta.erase("adam");
  ck.extra = std::move(meta);
  return ck;
}

}  // namespace fv::train
