#include <zlib.h>

#include <json.hpp>

#include "bytes.hpp"
#include "triplh/dataset.hpp"
#include "triplh/error.hpp"

namespace triplh {

namespace {

constexpr std::string_view kSplitMagic{"TRPLDS1\0", 8};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large files
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = crc32(crc, bytes.data() + pos, static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> encode_split(const InteractionDataset& dataset) {
  detail::ByteWriter w;
  w.raw(kSplitMagic);
  w.u32(kSplitFormatVersion);
  w.u32(static_cast<std::uint32_t>(dataset.n_users()));
  w.u32(static_cast<std::uint32_t>(dataset.n_items()));
  const auto interactions = dataset.interactions();
  w.u64(interactions.size());
  for (const Interaction& it : interactions) {
    w.u32(it.user);
    w.u32(it.item);
    w.i64(it.timestamp);
  }
  for (const Interaction& it : interactions) w.u8(static_cast<std::uint8_t>(it.split));
  const nlohmann::json ids = {{"users", dataset.user_tokens()}, {"items", dataset.item_tokens()}};
  const std::string text = ids.dump();
  w.u64(text.size());
  w.raw(text);
  w.u32(crc32_of(w.bytes()));
  return std::move(w.bytes());
}

InteractionDataset decode_split(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kSplitMagic.size() + 4) throw DataError("split file: truncated");
  const std::size_t body = bytes.size() - 4;
  detail::ByteReader tail(bytes.subspan(body), "split file");
  if (tail.u32() != crc32_of(bytes.first(body))) throw DataError("split file: checksum mismatch");

  detail::ByteReader r(bytes.first(body), "split file");
  if (r.raw(kSplitMagic.size()) != kSplitMagic) throw DataError("split file: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kSplitFormatVersion) {
    throw DataError("split file: unsupported version " + std::to_string(version));
  }
  const std::uint32_t n_users = r.u32();
  const std::uint32_t n_items = r.u32();
  const std::uint64_t n = r.u64();
  if (n > r.remaining() / 17) throw DataError("split file: interaction count exceeds file size");
  std::vector<Interaction> interactions(n);
  for (Interaction& it : interactions) {
    it.user = r.u32();
    it.item = r.u32();
    it.timestamp = r.i64();
  }
  for (Interaction& it : interactions) {
    const std::uint8_t tag = r.u8();
    if (tag > 2) throw DataError("split file: bad split tag " + std::to_string(tag));
    it.split = static_cast<Split>(tag);
  }
  const std::uint64_t json_len = r.u64();
  if (json_len != r.remaining()) throw DataError("split file: id map length mismatch");
  std::vector<std::string> users, items;
  try {
    const auto ids = nlohmann::json::parse(r.raw(json_len));
    users = ids.at("users").get<std::vector<std::string>>();
    items = ids.at("items").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("split file: bad id map: ") + e.what());
  }
  return InteractionDataset(n_users, n_items, std::move(interactions), std::move(users),
                            std::move(items));
}

void save_split(const InteractionDataset& dataset, const std::string& path) {
  detail::write_file(path, encode_split(dataset));
}

InteractionDataset load_split(const std::string& path) {
  const auto bytes = detail::read_file(path);
  try {
    return decode_split(bytes);
  } catch (const DataError& e) {
    throw DataError("'" + path + "': " + e.what());
  }
}

}  // namespace triplh
