// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "pnflow/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <variant>

#include "pnflow/errors.hpp"
#include "pnflow/io.hpp"

namespace pnflow {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'S', 'F', 'L', 'W'};

enum class BaseTag : std::uint8_t { kGaussian = 0, kVmf = 1, kDirichlet = 2 };

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(::crc32(0L, Z_NULL, 0), bytes.data(), static_cast<uInt>(bytes.size())));
}

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_u32s(const std::vector<std::uint32_t>& v) {
    put(static_cast<std::uint32_t>(v.size()));
    for (auto x : v) put(x);
  }
  void put_f64s(const std::vector<double>& v) {
    put(static_cast<std::uint32_t>(v.size()));
    for (double x : v) put(x);
  }
  std::vector<std::uint8_t>& bytes() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::vector<std::uint32_t> get_u32s() {
    const auto n = get<std::uint32_t>();
    need(std::size_t{n} * 4);
    std::vector<std::uint32_t> v(n);
    for (auto& x : v) x = get<std::uint32_t>();
    return v;
  }
  std::vector<double> get_f64s() {
    const auto n = get<std::uint32_t>();
    need(std::size_t{n} * 8);
    std::vector<double> v(n);
    for (auto& x : v) x = get<double>();
    return v;
  }
  std::size_t pos() const { return pos_; }
  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw FormatError("checkpoint: " + what + " at byte offset " + std::to_string(at));
  }

 private:
  void need(std::size_t n) const {
    if (n > bytes_.size() - pos_) fail("truncated data", pos_);
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const FlowModel& model) {
  Writer w;
  for (char c : kMagic) w.put(static_cast<std::uint8_t>(c));
  w.put(kCheckpointVersion);
  w.put(static_cast<std::uint32_t>(model.dim()));

  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, GaussianBase>) {
          w.put(static_cast<std::uint8_t>(BaseTag::kGaussian));
          w.put_f64s({b.scale()});
        } else if constexpr (std::is_same_v<T, VmfBase>) {
          w.put(static_cast<std::uint8_t>(BaseTag::kVmf));
          std::vector<double> v = {b.kappa()};
          for (double m : to_vector(b.mu())) v.push_back(m);
          w.put_f64s(v);
        } else {
          w.put(static_cast<std::uint8_t>(BaseTag::kDirichlet));
          w.put_f64s(to_vector(b.alpha()));
        }
      },
      model.base());

  const Architecture& arch = model.architecture();
  w.put(static_cast<std::uint32_t>(arch.levels));
  w.put(static_cast<std::uint32_t>(arch.steps));
  w.put_u32s(std::vector<std::uint32_t>(arch.hidden.begin(), arch.hidden.end()));
  w.put(arch.log_scale_bound);

  w.put(static_cast<std::uint32_t>(model.num_layers()));
  for (std::size_t i = 0; i < model.num_layers(); ++i) {
    const Layer& layer = model.layer(i);
    w.put(static_cast<std::uint8_t>(layer.kind()));
    w.put_u32s(layer.metadata());
    w.put_f64s(layer.hyperparameters());
    const auto shapes = layer.parameter_shapes();
    w.put(static_cast<std::uint32_t>(shapes.size()));
    for (const Shape& s : shapes) w.put_u32s(s);
  }

  const std::vector<double> payload = model.flat_parameters();
  w.put(static_cast<std::uint64_t>(payload.size()));
  for (double v : payload) w.put(v);
  w.put(crc32_of(w.bytes()));
  return std::move(w.bytes());
}

FlowModel deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic at byte offset 0");
  }
  if (bytes.size() < 12) throw FormatError("checkpoint: truncated header");
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + body, 4);
  if (crc32_of(bytes.first(body)) != stored_crc) {
    throw FormatError("checkpoint: CRC-32 mismatch (trailer at byte offset " + std::to_string(body) + ")");
  }

  Reader r(bytes.first(body));
  r.get<std::uint32_t>();  // magic
  const std::size_t version_at = r.pos();
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) r.fail("unsupported version " + std::to_string(version), version_at);
  const auto dim = static_cast<int>(r.get<std::uint32_t>());
  if (dim < 1) r.fail("dimension must be positive", 8);

  const std::size_t base_at = r.pos();
  const auto tag = r.get<std::uint8_t>();
  const auto bp = r.get_f64s();
  auto build_base = [&]() -> BaseDistribution {
    switch (static_cast<BaseTag>(tag)) {
      case BaseTag::kGaussian:
        if (bp.size() != 1) break;
        return GaussianBase(dim, bp[0]);
      case BaseTag::kVmf:
        if (bp.size() != static_cast<std::size_t>(dim) + 2) break;
        return VmfBase(dim, Eigen::Map<const Eigen::VectorXd>(bp.data() + 1, dim + 1), bp[0]);
      case BaseTag::kDirichlet:
        if (bp.size() != static_cast<std::size_t>(dim) + 1) break;
        return DirichletBase(dim, Eigen::Map<const Eigen::VectorXd>(bp.data(), dim + 1));
    }
    r.fail("invalid base specification", base_at);
  };
  BaseDistribution base = [&] {
    try {
      return build_base();
    } catch (const FormatError&) {
      throw;
    } catch (const Error& e) {
      r.fail(std::string("invalid base parameters (") + e.what() + ")", base_at);
    }
  }();

  Architecture arch;
  arch.levels = static_cast<int>(r.get<std::uint32_t>());
  arch.steps = static_cast<int>(r.get<std::uint32_t>());
  const auto hidden = r.get_u32s();
  arch.hidden.assign(hidden.begin(), hidden.end());
  arch.log_scale_bound = r.get<double>();

  struct Entry {
    LayerKind kind;
    std::vector<std::uint32_t> meta;
    std::vector<double> hyper;
    std::vector<Shape> shapes;
    std::size_t offset;
  };
  const auto count = r.get<std::uint32_t>();
  std::vector<Entry> entries;
  std::uint64_t declared = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    e.offset = r.pos();
    e.kind = static_cast<LayerKind>(r.get<std::uint8_t>());
    e.meta = r.get_u32s();
    e.hyper = r.get_f64s();
    const auto nshapes = r.get<std::uint32_t>();
    for (std::uint32_t s = 0; s < nshapes; ++s) {
      e.shapes.push_back(r.get_u32s());
      std::uint64_t size = 1;
      for (auto extent : e.shapes.back()) size *= extent;
      declared += size;
    }
    entries.push_back(std::move(e));
  }

  const std::size_t payload_at = r.pos();
  const auto payload_len = r.get<std::uint64_t>();
  if (payload_len != declared) {
    r.fail("payload holds " + std::to_string(payload_len) + " values, manifest shapes sum to " +
               std::to_string(declared),
           payload_at);
  }
  if (payload_len > (body - r.pos()) / 8) r.fail("truncated payload", r.pos());
  std::vector<double> payload(payload_len);
  for (auto& v : payload) v = r.get<double>();
  if (r.pos() != body) r.fail("trailing bytes before CRC", r.pos());

  FlowModel model(dim, std::move(base));
  model.set_architecture(arch);
  std::size_t off = 0;
  for (const Entry& e : entries) {
    std::size_t len = 0;
    for (const Shape& s : e.shapes) {
      std::size_t size = 1;
      for (auto extent : s) size *= extent;
      len += size;
    }
    std::unique_ptr<Layer> layer;
    try {
      layer = make_layer(e.kind, dim, e.meta, e.hyper, std::span<const double>(payload).subspan(off, len));
    } catch (const FormatError& err) {
      r.fail(err.what(), e.offset);
    } catch (const Error& err) {
      r.fail(std::string("invalid layer (") + err.what() + ")", e.offset);
    }
    if (layer->parameter_shapes() != e.shapes) r.fail("layer shapes disagree with its manifest", e.offset);
    model.add_layer(std::move(layer));
    off += len;
  }
  return model;
}

void save_checkpoint(const std::string& path, const FlowModel& model) {
  io::write_atomic(path, serialize_checkpoint(model));
}

FlowModel load_checkpoint(const std::string& path) { return deserialize_checkpoint(io::read_bytes(path)); }

}  // namespace pnflow
