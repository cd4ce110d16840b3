#include "ccp/cifar.hpp"

#include <fstream>
#include <iterator>
#include <string>

#include "ccp/errors.hpp"

namespace ccp {

Dataset decode_cifar_binary(std::span<const std::uint8_t> bytes, std::size_t expected_count,
                            const CifarLayout& layout) {
  if (layout.side <= 0 || layout.num_classes <= 0 || layout.num_classes > 256) {
    throw DataError("invalid CIFAR layout");
  }
  const std::size_t record = layout.record_size();
  const std::size_t expected_bytes = expected_count * record;
  if (bytes.size() != expected_bytes) {
    throw FormatError("CIFAR binary: expected " + std::to_string(expected_bytes) + " bytes (" +
                      std::to_string(expected_count) + " records of " + std::to_string(record) +
                      "), got " + std::to_string(bytes.size()));
  }

  Dataset ds;
  ds.num_classes = layout.num_classes;
  ds.images.reserve(expected_count);
  ds.labels.reserve(expected_count);
  for (std::size_t i = 0; i < expected_count; ++i) {
    const auto rec = bytes.subspan(i * record, record);
    if (rec[0] >= layout.num_classes) {
      throw FormatError("CIFAR binary: corrupt record " + std::to_string(i) + ": label byte " +
                        std::to_string(rec[0]) + " exceeds " +
                        std::to_string(layout.num_classes - 1));
    }
    ds.labels.push_back(rec[0]);
    ds.images.emplace_back(layout.side, layout.side,
                           std::vector<double>(rec.begin() + 1, rec.end()));
  }
  return ds;
}

Dataset load_cifar_binary(const std::filesystem::path& path, std::size_t expected_count,
                          const CifarLayout& layout) {
  const auto bytes = read_file_bytes(path);
  return decode_cifar_binary(bytes, expected_count, layout);
}

Dataset load_cifar_binary(const std::filesystem::path& path, const CifarLayout& layout) {
  const auto bytes = read_file_bytes(path);
  const std::size_t record = layout.record_size();
  if (bytes.size() % record != 0) {
    throw FormatError("CIFAR binary: " + path.string() + " has " +
                      std::to_string(bytes.size()) + " bytes, not a multiple of the " +
                      std::to_string(record) + "-byte record");
  }
  return decode_cifar_binary(bytes, bytes.size() / record, layout);
}

std::vector<std::uint8_t> encode_cifar_binary(const Dataset& dataset) {
  dataset.validate();
  if (dataset.empty()) return {};
  const Image& first = dataset.images.front();
  if (first.height() != first.width()) {
    throw DataError("CIFAR records require square images");
  }
  if (dataset.num_classes > 256) {
    throw DataError("CIFAR records hold at most 256 classes");
  }
  std::vector<std::uint8_t> out;
  out.reserve(dataset.size() * (1 + first.size()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out.push_back(static_cast<std::uint8_t>(dataset.labels[i]));
    for (double v : dataset.images[i].data()) {
      out.push_back(static_cast<std::uint8_t>(to_storage_value(v)));
    }
  }
  return out;
}

void write_cifar_binary(const Dataset& dataset, const std::filesystem::path& path) {
  write_file_bytes(path, encode_cifar_binary(dataset));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace ccp
