#include <json.hpp>

#include "bytes.hpp"
#include "triplh/config.hpp"
#include "triplh/error.hpp"
#include "triplh/model.hpp"

namespace triplh {

namespace {
constexpr std::string_view kCheckpointMagic{"TRPLH1\0\0", 8};
}

std::vector<std::uint8_t> encode_checkpoint(const EmbeddingTable& table, const ModelConfig& cfg) {
  if (table.dim() != cfg.dim) throw UsageError("checkpoint: table dim differs from config dim");
  detail::ByteWriter w;
  w.raw(kCheckpointMagic);
  w.u32(static_cast<std::uint32_t>(table.n_users()));
  w.u32(static_cast<std::uint32_t>(table.n_items()));
  w.u32(static_cast<std::uint32_t>(table.dim()));
  for (double v : table.user_data()) w.f64(v);
  for (double v : table.item_data()) w.f64(v);
  w.f64(table.margin_a);
  w.f64(table.margin_b);
  w.raw(to_json(cfg).dump());
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "checkpoint");
  if (r.raw(kCheckpointMagic.size()) != kCheckpointMagic) throw DataError("checkpoint: bad magic");
  const std::uint32_t n_users = r.u32();
  const std::uint32_t n_items = r.u32();
  const std::uint32_t dim = r.u32();
  const std::uint64_t n_values = (std::uint64_t{n_users} + n_items) * dim + 2;
  if (n_values > r.remaining() / 8) throw DataError("checkpoint: truncated parameter block");
  Checkpoint ck{EmbeddingTable(n_users, n_items, dim), {}};
  for (double& v : ck.table.user_data()) v = r.f64();
  for (double& v : ck.table.item_data()) v = r.f64();
  ck.table.margin_a = r.f64();
  ck.table.margin_b = r.f64();
  try {
    ck.config = model_config_from_json(nlohmann::json::parse(r.raw(r.remaining())));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: bad config trailer: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("checkpoint: bad config trailer: ") + e.what());
  }
  if (ck.config.dim != dim) throw DataError("checkpoint: header dim differs from config dim");
  return ck;
}

void save_checkpoint(const std::string& path, const EmbeddingTable& table, const ModelConfig& cfg) {
  detail::write_file(path, encode_checkpoint(table, cfg));
}

Checkpoint load_checkpoint(const std::string& path) {
  const auto bytes = detail::read_file(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const DataError& e) {
    throw DataError("'" + path + "': " + e.what());
  }
}

}  // namespace triplh
