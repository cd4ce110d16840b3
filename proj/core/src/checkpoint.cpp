#include "ccp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "ccp/cifar.hpp"
#include "ccp/errors.hpp"

namespace ccp {
namespace {

constexpr char kMagic[4] = {'C', 'C', 'P', 'M'};

enum class LayerKind : std::uint8_t { Conv2D = 0, ReLU, MaxPool2, Flatten, Dense, Softmax };

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint truncated");
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    auto s = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(s[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto s = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(s[i]) << (8 * i);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Model& model) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(model.input_height()));
  put_u32(out, static_cast<std::uint32_t>(model.input_width()));
  put_u32(out, static_cast<std::uint32_t>(model.spec().layers.size()));
  for (const auto& layer : model.spec().layers) {
    std::uint32_t arg = 0;
    if (const auto* conv = std::get_if<Conv2D>(&layer)) arg = conv->out_channels;
    if (const auto* dense = std::get_if<Dense>(&layer)) arg = dense->out_dim;
    out.push_back(static_cast<std::uint8_t>(layer.index()));
    put_u32(out, arg);
  }
  put_u64(out, model.parameter_count());
  for (double p : model.parameters()) put_u64(out, std::bit_cast<std::uint64_t>(p));
  return out;
}

Model decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  const auto magic = in.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError("not a CCPM checkpoint");
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelSpec spec;
  spec.input_height = static_cast<int>(in.u32());
  spec.input_width = static_cast<int>(in.u32());
  const std::uint32_t layer_count = in.u32();
  if (layer_count > 1024) throw FormatError("checkpoint declares too many layers");
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    const auto kind = static_cast<LayerKind>(in.u8());
    const auto arg = static_cast<int>(in.u32());
    switch (kind) {
      case LayerKind::Conv2D: spec.layers.emplace_back(Conv2D{arg}); break;
      case LayerKind::ReLU: spec.layers.emplace_back(ReLU{}); break;
      case LayerKind::MaxPool2: spec.layers.emplace_back(MaxPool2{}); break;
      case LayerKind::Flatten: spec.layers.emplace_back(Flatten{}); break;
      case LayerKind::Dense: spec.layers.emplace_back(Dense{arg}); break;
      case LayerKind::Softmax: spec.layers.emplace_back(Softmax{}); break;
      default: throw FormatError("unknown layer kind in checkpoint");
    }
  }
  Model model = [&] {
    try {
      return Model(std::move(spec));
    } catch (const DataError& e) {
      throw FormatError(std::string("checkpoint holds an invalid model: ") + e.what());
    }
  }();
  const std::uint64_t count = in.u64();
  if (count != model.parameter_count()) {
    throw FormatError("checkpoint has " + std::to_string(count) + " parameters, spec needs " +
                      std::to_string(model.parameter_count()));
  }
  for (double& p : model.parameters()) p = std::bit_cast<double>(in.u64());
  if (!in.done()) throw FormatError("trailing bytes after checkpoint parameters");
  return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  write_file_bytes(path, encode_checkpoint(model));
}

Model load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path));
}

}  // namespace ccp
