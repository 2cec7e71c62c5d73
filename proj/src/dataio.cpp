#include "saekit/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "byteio.hpp"
#include "saekit/digest.hpp"
#include "saekit/errors.hpp"

namespace saekit::dataio {

namespace {
using Kind = FormatError::Kind;
constexpr std::uint64_t kHeaderBytes = 28;
}  // namespace

void write_activations(const linalg::Matrix& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(Kind::kIo, "cannot open " + path + " for writing");
  out.write(kActivationMagic, sizeof(kActivationMagic));
  detail::put_le<std::uint32_t>(out, kActivationVersion);
  detail::put_le<std::uint64_t>(out, rows.rows());
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rows.cols()));
  detail::put_le<std::uint32_t>(out, kDtypeF32);
  detail::put_f32s(out, rows.data());
  if (!out) throw FormatError(Kind::kIo, "write failed for " + path);
}

ActivationReader::ActivationReader(const std::string& path) : in_(path, std::ios::binary) {
  if (!in_) throw FormatError(Kind::kIo, "cannot open " + path);
  in_.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in_.tellg());
  in_.seekg(0);

  char magic[8];
  if (!in_.read(magic, 8)) throw FormatError(Kind::kTruncated, path + ": shorter than the activation header");
  if (!std::equal(magic, magic + 8, kActivationMagic)) {
    throw FormatError(Kind::kBadMagic, path + ": not an activation file (bad magic)");
  }
  std::uint32_t version = 0;
  if (!detail::get_le(in_, version) || !detail::get_le(in_, header_.num_rows) || !detail::get_le(in_, header_.dim) ||
      !detail::get_le(in_, header_.dtype)) {
    throw FormatError(Kind::kTruncated, path + ": truncated activation header");
  }
  if (version != kActivationVersion) {
    throw FormatError(Kind::kBadVersion, path + ": unsupported version " + std::to_string(version));
  }
  if (header_.dtype != kDtypeF32) {
    throw FormatError(Kind::kBadDtype, path + ": unsupported dtype code " + std::to_string(header_.dtype));
  }
  if (header_.dim == 0) throw FormatError(Kind::kShapeMismatch, path + ": zero row width");
  const std::uint64_t expected = kHeaderBytes + header_.num_rows * header_.dim * 4ULL;
  if (file_size != expected) {
    throw FormatError(Kind::kTruncated, path + ": header declares " + std::to_string(header_.num_rows) + "x" +
                                            std::to_string(header_.dim) + " rows (" + std::to_string(expected) +
                                            " bytes) but file has " + std::to_string(file_size));
  }
}

linalg::Matrix ActivationReader::read(std::size_t max_rows) {
  const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(max_rows, rows_remaining()));
  linalg::Matrix out(n, header_.dim);
  if (n > 0 && !detail::get_f32s(in_, out.data())) {
    throw FormatError(Kind::kTruncated, "activation payload ended early");
  }
  cursor_ += n;
  return out;
}

linalg::Matrix read_activations(const std::string& path) {
  ActivationReader reader(path);
  return reader.read(static_cast<std::size_t>(reader.header().num_rows));
}

void SyntheticSpec::validate() const {
  if (atoms < 1) throw DomainError("synthetic spec: need at least one atom");
  if (dim < 1) throw DomainError("synthetic spec: dim must be >= 1");
  if (active < 1 || active > atoms) throw DomainError("synthetic spec: active must lie in [1, atoms]");
  if (!(noise_std >= 0.0)) throw DomainError("synthetic spec: noise std must be >= 0");
  if (!(coef_std >= 0.0)) throw DomainError("synthetic spec: coefficient std must be >= 0");
}

namespace {

linalg::Matrix draw_atoms(const SyntheticSpec& spec, linalg::Rng& rng) {
  linalg::Matrix atoms(spec.atoms, spec.dim);
  for (std::size_t a = 0; a < spec.atoms; ++a) {
    auto row = atoms.row(a);
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (float& v : row) {
        v = static_cast<float>(rng.normal());
        n2 += static_cast<double>(v) * v;
      }
    } while (n2 == 0.0);
    const double inv = 1.0 / std::sqrt(n2);
    for (float& v : row) v = static_cast<float>(v * inv);
  }
  return atoms;
}

}  // namespace

linalg::Matrix synthetic_atoms(const SyntheticSpec& spec) {
  spec.validate();
  linalg::Rng rng(spec.seed);
  return draw_atoms(spec, rng);
}

linalg::Matrix generate_synthetic(const SyntheticSpec& spec, std::size_t n_rows) {
  spec.validate();
  if (n_rows < 1) throw DomainError("generate_synthetic: need at least one row");
  linalg::Rng rng(spec.seed);
  const linalg::Matrix atoms = draw_atoms(spec, rng);
  if (spec.sample_seed) rng = linalg::Rng(*spec.sample_seed);

  linalg::Matrix out(n_rows, spec.dim);
  std::vector<std::size_t> pool(spec.atoms);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<double> acc(spec.dim);
  for (std::size_t r = 0; r < n_rows; ++r) {
    std::fill(acc.begin(), acc.end(), 0.0);
    // Partial Fisher–Yates: the first `active` slots become a uniform draw
    // without replacement.
    for (std::size_t s = 0; s < spec.active; ++s) {
      const std::size_t pick = s + static_cast<std::size_t>(rng.below(spec.atoms - s));
      std::swap(pool[s], pool[pick]);
      const double coef = std::abs(rng.normal(spec.coef_mean, spec.coef_std));
      const auto atom = atoms.row(pool[s]);
      for (std::size_t c = 0; c < spec.dim; ++c) acc[c] += coef * atom[c];
    }
    auto row = out.row(r);
    for (std::size_t c = 0; c < spec.dim; ++c) {
      const double noise = spec.noise_std > 0.0 ? rng.normal(0.0, spec.noise_std) : 0.0;
      row[c] = static_cast<float>(acc[c] + noise);
    }
  }
  return out;
}

BatchIterator::BatchIterator(const linalg::Matrix& data, std::size_t batch_size, std::uint64_t seed,
                             std::size_t epochs, std::size_t first_row)
    : data_(data), batch_size_(batch_size), epochs_(epochs), rng_(seed) {
  if (batch_size < 1) throw DomainError("batch size must be >= 1");
  if (first_row > data.rows()) throw DomainError("first row past the end of the data");
  const std::size_t n = data.rows() - first_row;
  if (batch_size > n) {
    throw DomainError("batch size " + std::to_string(batch_size) + " exceeds " + std::to_string(n) + " rows");
  }
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), first_row);
  reshuffle();
}

void BatchIterator::reshuffle() {
  for (std::size_t i = order_.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng_.below(i));
    std::swap(order_[i - 1], order_[j]);
  }
  pos_ = 0;
}

std::optional<std::vector<std::size_t>> BatchIterator::next_indices() {
  if (pos_ + batch_size_ > order_.size()) {
    ++epoch_;
    if (epochs_ != 0 && epoch_ >= epochs_) return std::nullopt;
    reshuffle();
  }
  std::vector<std::size_t> idx(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                               order_.begin() + static_cast<std::ptrdiff_t>(pos_ + batch_size_));
  pos_ += batch_size_;
  return idx;
}

std::optional<linalg::Matrix> BatchIterator::next() {
  auto idx = next_indices();
  if (!idx) return std::nullopt;
  return linalg::gather_rows(data_, *idx);
}

std::string digest(const linalg::Matrix& data) {
  Fnv1a h;
  const std::uint64_t shape[2] = {data.rows(), data.cols()};
  h.update(std::as_bytes(std::span(shape)));
  h.update(data.data());
  return h.hex();
}

}  // namespace saekit::dataio
