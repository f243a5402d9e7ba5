#include "ninr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "ninr/error.hpp"

namespace ninr {
namespace {

constexpr char kMagic[8] = {'N', 'I', 'N', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint: truncated payload");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

Tensor* slot(Params& p, std::size_t layer, const std::string& name) {
  if (layer >= p.layers.size()) throw FormatError("checkpoint: layer index out of range");
  Tensor* t = p.find(name, layer);
  if (t == nullptr) throw FormatError("checkpoint: unknown tensor name '" + name + "'");
  return t;
}

}  // namespace

std::vector<std::uint8_t> checkpoint_to_bytes(const Params& params) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put(out, kVersion);
  std::uint32_t count = 0;
  params.for_each_tensor([&](ParamRef, const Tensor&) { ++count; });
  put(out, count);
  params.for_each_tensor([&](ParamRef r, const Tensor& t) {
    put(out, static_cast<std::uint32_t>(r.layer));
    put(out, static_cast<std::uint32_t>(r.name.size()));
    out.insert(out.end(), r.name.begin(), r.name.end());
    put(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put(out, static_cast<std::uint64_t>(d));
    for (double v : t.data()) put(out, v);
  });
  return out;
}

Params checkpoint_from_bytes(const std::vector<std::uint8_t>& bytes, std::size_t layer_count) {
  Reader in(bytes);
  if (in.str(8) != std::string(kMagic, 8)) throw FormatError("checkpoint: bad magic");
  if (in.get<std::uint32_t>() != kVersion) throw FormatError("checkpoint: unsupported version");
  const auto count = in.get<std::uint32_t>();
  Params p;
  p.layers.resize(layer_count);
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto layer = in.get<std::uint32_t>();
    const std::string name = in.str(in.get<std::uint32_t>());
    const auto rank = in.get<std::uint32_t>();
    if (rank > 8) throw FormatError("checkpoint: implausible tensor rank");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(in.get<std::uint64_t>());
    std::vector<double> data(shape_size(shape));
    for (double& v : data) v = in.get<double>();
    *slot(p, layer, name) = Tensor(std::move(shape), std::move(data));
  }
  if (!in.done()) throw FormatError("checkpoint: trailing bytes");
  return p;
}

std::string checkpoint_to_json(const Params& params) {
  nlohmann::json j;
  j["format"] = "ninr-checkpoint";
  j["version"] = kVersion;
  j["tensors"] = nlohmann::json::array();
  params.for_each_tensor([&](ParamRef r, const Tensor& t) {
    j["tensors"].push_back({{"layer", r.layer},
                            {"name", r.name},
                            {"shape", t.shape()},
                            {"data", t.storage()}});
  });
  return j.dump();
}

Params checkpoint_from_json(const std::string& text, std::size_t layer_count) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  if (j.value("format", "") != "ninr-checkpoint") throw FormatError("checkpoint: not a ninr checkpoint");
  Params p;
  p.layers.resize(layer_count);
  try {
    for (const auto& t : j.at("tensors")) {
      *slot(p, t.at("layer").get<std::size_t>(), t.at("name").get<std::string>()) =
          Tensor(t.at("shape").get<Shape>(), t.at("data").get<std::vector<double>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const Params& params) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("checkpoint: cannot write " + path.string());
  if (path.extension() == ".json") {
    f << checkpoint_to_json(params);
  } else {
    const auto bytes = checkpoint_to_bytes(params);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
}

Params load_checkpoint(const std::filesystem::path& path, std::size_t layer_count) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("checkpoint: cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (path.extension() == ".json") return checkpoint_from_json(std::string(bytes.begin(), bytes.end()), layer_count);
  return checkpoint_from_bytes(bytes, layer_count);
}

}  // namespace ninr
