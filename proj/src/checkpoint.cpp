#include "saekit/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "byteio.hpp"
#include "saekit/errors.hpp"

namespace saekit::model {

namespace {

using Kind = FormatError::Kind;

std::string encode_meta(const SaeParams& p, const CheckpointMeta& m) {
  std::ostringstream os;
  os << "dict_size=" << p.dict_size() << '\n'
     << "hidden_dim=" << p.hidden_dim() << '\n'
     << "k=" << m.k << '\n'
     << "activation=" << m.activation << '\n'
     << "schedule=" << m.schedule << '\n'
     << "config_digest=" << m.config_digest << '\n'
     << "step=" << m.step << '\n'
     << "seed=" << m.seed << '\n';
  return os.str();
}

std::map<std::string, std::string> parse_meta(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(Kind::kBadMetadata, "checkpoint metadata line without '='");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::uint64_t meta_u64(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw FormatError(Kind::kBadMetadata, "checkpoint metadata missing '" + key + "'");
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw FormatError(Kind::kBadMetadata, "checkpoint metadata '" + key + "' is not an integer");
  }
}

std::string meta_str(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  return it == kv.end() ? std::string() : it->second;
}

}  // namespace

void save(const std::string& path, const SaeParams& params, const CheckpointMeta& meta) {
  params.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(Kind::kIo, "cannot open " + path + " for writing");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put_le<std::uint8_t>(out, kCheckpointVersion);
  const std::string m = encode_meta(params, meta);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.size()));
  out.write(m.data(), static_cast<std::streamsize>(m.size()));
  const std::size_t d = params.dict_size();
  const std::size_t h = params.hidden_dim();
  detail::put_le<std::uint64_t>(out, 4ULL * (2 * d * h + d + h));
  detail::put_f32s(out, params.w_enc.data());
  detail::put_f32s(out, params.b_enc);
  detail::put_f32s(out, params.w_dec.data());
  detail::put_f32s(out, params.b_dec);
  if (!out) throw FormatError(Kind::kIo, "write failed for " + path);
}

Checkpoint load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(Kind::kIo, "cannot open " + path);
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);

  char magic[8];
  if (!in.read(magic, 8)) throw FormatError(Kind::kTruncated, "checkpoint shorter than its magic");
  if (!std::equal(magic, magic + 8, kCheckpointMagic)) throw FormatError(Kind::kBadMagic, "not a checkpoint (bad magic)");
  std::uint8_t version = 0;
  if (!detail::get_le(in, version)) throw FormatError(Kind::kTruncated, "checkpoint truncated in header");
  if (version != kCheckpointVersion) {
    throw FormatError(Kind::kBadVersion, "unsupported checkpoint version " + std::to_string(version));
  }
  std::uint32_t meta_len = 0;
  if (!detail::get_le(in, meta_len)) throw FormatError(Kind::kTruncated, "checkpoint truncated in header");
  if (meta_len > file_size) throw FormatError(Kind::kTruncated, "checkpoint metadata runs past end of file");
  std::string meta_text(meta_len, '\0');
  if (!in.read(meta_text.data(), meta_len)) throw FormatError(Kind::kTruncated, "checkpoint truncated in metadata");
  const auto kv = parse_meta(meta_text);

  const std::uint64_t d = meta_u64(kv, "dict_size");
  const std::uint64_t h = meta_u64(kv, "hidden_dim");
  std::uint64_t payload = 0;
  if (!detail::get_le(in, payload)) throw FormatError(Kind::kTruncated, "checkpoint truncated before payload");
  if (d == 0 || h == 0 || payload != 4ULL * (2 * d * h + d + h)) {
    throw FormatError(Kind::kShapeMismatch, "payload length " + std::to_string(payload) +
                                                " does not match D=" + std::to_string(d) + ", h=" + std::to_string(h));
  }
  const auto offset = static_cast<std::uint64_t>(in.tellg());
  if (file_size - offset < payload) {
    throw FormatError(Kind::kTruncated, "checkpoint payload truncated: " + std::to_string(file_size - offset) +
                                            " of " + std::to_string(payload) + " bytes");
  }
  if (file_size - offset > payload) throw FormatError(Kind::kShapeMismatch, "trailing bytes after checkpoint payload");

  Checkpoint ck;
  SaeParams& p = ck.params;
  p.w_enc = linalg::Matrix(d, h);
  p.b_enc.resize(d);
  p.w_dec = linalg::Matrix(d, h);
  p.b_dec.resize(h);
  const bool ok = detail::get_f32s(in, p.w_enc.data()) && detail::get_f32s(in, p.b_enc) &&
                  detail::get_f32s(in, p.w_dec.data()) && detail::get_f32s(in, p.b_dec);
  if (!ok) throw FormatError(Kind::kTruncated, "checkpoint payload truncated");

  ck.meta.k = meta_u64(kv, "k");
  ck.meta.activation = meta_str(kv, "activation");
  ck.meta.schedule = meta_str(kv, "schedule");
  ck.meta.config_digest = meta_str(kv, "config_digest");
  ck.meta.step = meta_u64(kv, "step");
  ck.meta.seed = meta_u64(kv, "seed");
  return ck;
}

}  // namespace saekit::model
