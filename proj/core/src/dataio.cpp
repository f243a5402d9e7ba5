#include "ninr/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "ninr/error.hpp"

namespace ninr {

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  Dataset d;
  d.name = name;
  d.n_classes = n_classes;
  d.inputs = inputs.slice_rows(begin, end);
  d.targets = targets.slice_rows(begin, end);
  return d;
}

Dataset Dataset::gather(std::span<const std::size_t> indices) const {
  Dataset d;
  d.name = name;
  d.n_classes = n_classes;
  d.inputs = inputs.gather_rows(indices);
  d.targets = targets.gather_rows(indices);
  return d;
}

void Dataset::validate() const {
  if (inputs.empty()) return;
  if (targets.empty() || targets.rows() != inputs.rows()) {
    throw ShapeError("dataset '" + name + "': " + std::to_string(inputs.rows()) + " inputs but " +
                     std::to_string(targets.empty() ? 0 : targets.rows()) + " targets");
  }
  if (n_classes > 0 && targets.rank() == 1) {
    for (double v : targets.data()) {
      if (!(v >= 0.0 && v < static_cast<double>(n_classes)) || v != std::floor(v)) {
        throw ConfigError("dataset '" + name + "': label out of range [0, " +
                          std::to_string(n_classes) + ")");
      }
    }
  }
}

namespace {

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

Tensor load_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw FormatError("idx: truncated header");
  const std::uint32_t magic = read_be32(bytes.data());
  if (magic != 0x00000801u && magic != 0x00000803u) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", magic);
    throw FormatError(std::string("idx: unsupported magic ") + buf);
  }
  const std::size_t rank = magic & 0xffu;
  if (bytes.size() < 4 + 4 * rank) throw FormatError("idx: truncated dimensions");
  Shape shape(rank);
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    shape[i] = read_be32(bytes.data() + 4 + 4 * i);
    if (__builtin_mul_overflow(count, shape[i], &count)) throw FormatError("idx: dimension overflow");
  }
  const std::size_t header = 4 + 4 * rank;
  if (bytes.size() - header < count) throw FormatError("idx: truncated payload");
  if (bytes.size() - header > count) throw FormatError("idx: trailing bytes after payload");
  std::vector<double> data(count);
  const bool labels = rank == 1;
  for (std::size_t i = 0; i < count; ++i) {
    const double v = bytes[header + i];
    data[i] = labels ? v : v / 255.0;
  }
  return Tensor(std::move(shape), std::move(data));
}

std::vector<std::uint8_t> save_idx(const Tensor& t) {
  if (t.rank() != 1 && t.rank() != 3) throw ShapeError("idx: only rank-1 labels or rank-3 images");
  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 * t.rank() + t.size());
  write_be32(out, t.rank() == 1 ? 0x00000801u : 0x00000803u);
  for (std::size_t d : t.shape()) {
    if (d > 0xffffffffu) throw ShapeError("idx: dimension exceeds 32 bits");
    write_be32(out, static_cast<std::uint32_t>(d));
  }
  const bool labels = t.rank() == 1;
  for (double v : t.data()) {
    const double b = labels ? v : std::round(v * 255.0);
    if (!(b >= 0.0 && b <= 255.0)) throw FormatError("idx: value does not fit in a byte");
    out.push_back(static_cast<std::uint8_t>(b));
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels,
                         std::string name, std::size_t n_classes) {
  Tensor x = load_idx(read_file_bytes(images));
  Tensor y = load_idx(read_file_bytes(labels));
  if (x.rank() != 3) throw FormatError("idx: " + images.string() + " is not an image file");
  if (y.rank() != 1) throw FormatError("idx: " + labels.string() + " is not a label file");
  Dataset d;
  d.name = std::move(name);
  const Shape s = x.shape();
  d.inputs = std::move(x).reshaped({s[0], s[1], s[2], 1});
  d.targets = std::move(y);
  if (n_classes == 0) {
    double mx = -1.0;
    for (double v : d.targets.data()) mx = std::max(mx, v);
    n_classes = static_cast<std::size_t>(mx + 1.0);
  }
  d.n_classes = n_classes;
  d.validate();
  return d;
}

Dataset parse_cifar10(std::span<const std::uint8_t> bytes, std::string name) {
  constexpr std::size_t kRecord = 3073, kSide = 32, kPlane = kSide * kSide;
  if (bytes.size() % kRecord != 0) throw FormatError("cifar10: size is not a multiple of 3073");
  const std::size_t n = bytes.size() / kRecord;
  Dataset d;
  d.name = std::move(name);
  d.n_classes = 10;
  d.inputs = Tensor({n, kSide, kSide, 3});
  d.targets = Tensor({n});
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* rec = bytes.data() + i * kRecord;
    if (rec[0] > 9) throw FormatError("cifar10: label out of range");
    d.targets[i] = rec[0];
    auto row = d.inputs.row(i);
    for (std::size_t p = 0; p < kPlane; ++p) {
      for (std::size_t c = 0; c < 3; ++c) row[p * 3 + c] = rec[1 + c * kPlane + p] / 255.0;
    }
  }
  return d;
}

Dataset load_cifar10(std::span<const std::filesystem::path> batches, std::string name) {
  std::vector<std::uint8_t> all;
  for (const auto& p : batches) {
    auto b = read_file_bytes(p);
    all.insert(all.end(), b.begin(), b.end());
  }
  return parse_cifar10(all, std::move(name));
}

Tensor usps_to_mnist_frame(const Tensor& img) {
  if (img.empty()) throw ShapeError("usps_to_mnist_frame: empty image");
  if (!(img.rank() == 2 || (img.rank() == 3 && img.dim(2) == 1))) {
    throw ShapeError("usps_to_mnist_frame: expected a single-channel H x W image");
  }
  constexpr std::size_t kBox = 20, kCanvas = 28;
  const std::size_t h = img.dim(0), w = img.dim(1);
  const double scale = static_cast<double>(kBox) / static_cast<double>(std::max(h, w));
  const std::size_t nh = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(h * scale)), 1, kBox);
  const std::size_t nw = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(w * scale)), 1, kBox);
  const double sy = static_cast<double>(h) / static_cast<double>(nh);
  const double sx = static_cast<double>(w) / static_cast<double>(nw);
  const std::size_t oy = (kCanvas - nh) / 2, ox = (kCanvas - nw) / 2;
  const auto src = img.data();
  Tensor out({kCanvas, kCanvas});
  for (std::size_t r = 0; r < nh; ++r) {
    // Pixel centres map to pixel centres; samples outside the source clamp to the edge.
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
    const std::size_t y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t c = 0; c < nw; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
      const std::size_t x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double tx = fx - static_cast<double>(x0);
      const double a = src[y0 * w + x0], b = src[y0 * w + x1];
      const double cc = src[y1 * w + x0], d = src[y1 * w + x1];
      const double upper = tx == 0.0 ? a : a + tx * (b - a);
      const double lower = tx == 0.0 ? cc : cc + tx * (d - cc);
      out.at(oy + r, ox + c) = ty == 0.0 ? upper : upper + ty * (lower - upper);
    }
  }
  return out;
}

Dataset usps_dataset_to_mnist_frame(const Dataset& data, std::size_t h, std::size_t w) {
  if (data.inputs.row_size() != h * w) throw ShapeError("usps_dataset_to_mnist_frame: sample size mismatch");
  Dataset out;
  out.name = data.name;
  out.n_classes = data.n_classes;
  out.targets = data.targets;
  const std::size_t n = data.size();
  out.inputs = Tensor({n, 28, 28, 1});
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = data.inputs.row(i);
    Tensor img({h, w}, std::vector<double>(src.begin(), src.end()));
    const Tensor framed = usps_to_mnist_frame(img);
    std::copy(framed.data().begin(), framed.data().end(), out.inputs.row(i).begin());
  }
  return out;
}

Dataset synth_linear(std::size_t n, double M, double sigma_x, RngStream& rng) {
  if (!(sigma_x > 0.0)) throw ConfigError("synth_linear: sigma_x must be > 0");
  Dataset d;
  d.name = "synth-linear";
  d.inputs = Tensor({n, 1});
  d.targets = Tensor({n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    d.inputs[i] = sigma_x * rng.normal();
    d.targets[i] = M * d.inputs[i];
  }
  return d;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double fraction, RngStream& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split_dataset: fraction must lie in (0, 1)");
  const std::size_t n = data.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  shuffle_indices(idx.data(), n, rng);
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::span<const std::size_t> all(idx);
  return {data.gather(all.first(k)), data.gather(all.subspan(k))};
}

Dataset balanced_subset(const Dataset& data, std::size_t per_class) {
  if (data.n_classes == 0 || data.targets.rank() != 1) {
    throw ConfigError("balanced_subset: needs class labels");
  }
  std::vector<std::size_t> taken(data.n_classes, 0), idx;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto c = static_cast<std::size_t>(data.targets[i]);
    if (taken[c] < per_class) {
      ++taken[c];
      idx.push_back(i);
    }
  }
  return data.gather(idx);
}

}  // namespace ninr
