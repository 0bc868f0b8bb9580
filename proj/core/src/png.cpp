#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <string>

#include "sensorpen/ecg_pipeline.hpp"
#include "sensorpen/error.hpp"

namespace sensorpen::ecg {
namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kGrid{225, 225, 225};
constexpr Rgb kTrace{20, 40, 120};

constexpr int kLeft = 90;
constexpr int kRight = 20;
constexpr int kTop = 20;
constexpr int kBottom = 50;
constexpr int kGlyphScale = 2;

// 5x7 bitmaps, one byte per row, bit 4 is the leftmost column.
constexpr std::array<std::array<std::uint8_t, 7>, 11> kGlyphs{{
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
    {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00},  // -
}};

class Canvas {
 public:
  Canvas(int w, int h) : img_{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3, 255)} {}

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
    auto* p = &img_.rgb[(static_cast<std::size_t>(y) * img_.width + x) * 3];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  void hline(int x0, int x1, int y, Rgb c) {
    for (int x = x0; x <= x1; ++x) set(x, y, c);
  }
  void vline(int x, int y0, int y1, Rgb c) {
    for (int y = y0; y <= y1; ++y) set(x, y, c);
  }

  // Bresenham with a 2x2 pen.
  void line(int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
      set(x0, y0, c);
      set(x0 + 1, y0, c);
      set(x0, y0 + 1, c);
      set(x0 + 1, y0 + 1, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  int text_width(const std::string& s) const { return static_cast<int>(s.size()) * 6 * kGlyphScale - kGlyphScale; }

  void text(int x, int y, const std::string& s, Rgb c) {
    for (char ch : s) {
      const int g = ch == '-' ? 10 : ch - '0';
      if (g < 0 || g > 10) continue;
      for (int row = 0; row < 7; ++row) {
        for (int col = 0; col < 5; ++col) {
          if (!(kGlyphs[g][row] & (0x10 >> col))) continue;
          for (int dy = 0; dy < kGlyphScale; ++dy) {
            for (int dx = 0; dx < kGlyphScale; ++dx) {
              set(x + col * kGlyphScale + dx, y + row * kGlyphScale + dy, c);
            }
          }
        }
      }
      x += 6 * kGlyphScale;
    }
  }

  Image take() { return std::move(img_); }

 private:
  Image img_;
};

double nice_step(double range, int max_ticks) {
  const double raw = range / max_ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char* type, const std::vector<std::uint8_t>& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, out.data() + type_at, static_cast<uInt>(4 + data.size()));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

constexpr std::array<std::uint8_t, 8> kSignature{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

}  // namespace

Image render_raster(std::span<const int> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyQuery, "nothing to plot");
  Canvas canvas(kFigureWidth, kFigureHeight);
  const int x0 = kLeft, x1 = kFigureWidth - kRight;
  const int y0 = kTop, y1 = kFigureHeight - kBottom;

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi - lo < 1e-9) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double last = values.size() > 1 ? static_cast<double>(values.size() - 1) : 1.0;
  auto px = [&](double i) { return x0 + static_cast<int>(std::lround(i * (x1 - x0) / last)); };
  auto py = [&](double v) { return y1 - static_cast<int>(std::lround((v - lo) * (y1 - y0) / (hi - lo))); };

  // grid and tick labels
  const double xstep = nice_step(last, 20);
  for (double t = 0.0; t <= last + 1e-9; t += xstep) {
    const int x = px(t);
    canvas.vline(x, y0, y1, kGrid);
    canvas.vline(x, y1, y1 + 6, kBlack);
    const auto label = std::to_string(static_cast<long long>(std::llround(t)));
    canvas.text(x - canvas.text_width(label) / 2, y1 + 12, label, kBlack);
  }
  const double ystep = nice_step(hi - lo, 8);
  for (double t = std::ceil(lo / ystep) * ystep; t <= hi; t += ystep) {
    const int y = py(t);
    canvas.hline(x0, x1, y, kGrid);
    canvas.hline(x0 - 6, x0, y, kBlack);
    const auto label = std::to_string(static_cast<long long>(std::llround(t)));
    canvas.text(x0 - 10 - canvas.text_width(label), y - 7, label, kBlack);
  }
  canvas.hline(x0, x1, y1, kBlack);
  canvas.vline(x0, y0, y1, kBlack);

  int prev_x = px(0), prev_y = py(values[0]);
  canvas.line(prev_x, prev_y, prev_x, prev_y, kTrace);
  for (std::size_t i = 1; i < values.size(); ++i) {
    const int x = px(static_cast<double>(i)), y = py(values[i]);
    canvas.line(prev_x, prev_y, x, y, kTrace);
    prev_x = x;
    prev_y = y;
  }
  return canvas.take();
}

std::vector<std::uint8_t> render_figure(const EcgQuery& query) {
  return encode_png(render_raster(query.values));
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.rgb.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
    throw Error(ErrorCode::InvalidArgument, "image buffer does not match its dimensions");
  }
  const std::size_t stride = static_cast<std::size_t>(image.width) * 3;
  std::vector<std::uint8_t> raw;
  raw.reserve((stride + 1) * image.height);
  for (int y = 0; y < image.height; ++y) {
    raw.push_back(0);  // filter: none
    raw.insert(raw.end(), image.rgb.begin() + static_cast<std::ptrdiff_t>(y * stride),
               image.rgb.begin() + static_cast<std::ptrdiff_t>((y + 1) * stride));
  }
  uLongf packed_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> packed(packed_len);
  if (compress2(packed.data(), &packed_len, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
    throw Error(ErrorCode::Io, "zlib compression failed");
  }
  packed.resize(packed_len);

  std::vector<std::uint8_t> out(kSignature.begin(), kSignature.end());
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(image.width));
  put_u32(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // depth 8, RGB, deflate, adaptive, no interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  return out;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  auto bad = [](const std::string& why) { return Error(ErrorCode::InvalidArgument, "png: " + why); };
  if (bytes.size() < 8 || !std::equal(kSignature.begin(), kSignature.end(), bytes.begin())) {
    throw bad("missing signature");
  }
  Image img;
  std::vector<std::uint8_t> packed;
  std::size_t pos = 8;
  bool done = false;
  while (!done) {
    if (pos + 12 > bytes.size()) throw bad("truncated chunk");
    const std::uint32_t len = get_u32(bytes, pos);
    if (pos + 12 + len > bytes.size()) throw bad("truncated chunk data");
    const std::string type(reinterpret_cast<const char*>(&bytes[pos + 4]), 4);
    const auto data = bytes.subspan(pos + 8, len);
    if (crc32(0L, &bytes[pos + 4], len + 4) != get_u32(bytes, pos + 8 + len)) throw bad("crc mismatch");
    if (type == "IHDR") {
      if (len != 13) throw bad("bad IHDR");
      img.width = static_cast<int>(get_u32(data, 0));
      img.height = static_cast<int>(get_u32(data, 4));
      if (data[8] != 8 || data[9] != 2 || data[12] != 0) throw bad("only 8-bit RGB non-interlaced");
    } else if (type == "IDAT") {
      packed.insert(packed.end(), data.begin(), data.end());
    } else if (type == "IEND") {
      done = true;
    }
    pos += 12 + len;
  }
  if (img.width <= 0 || img.height <= 0) throw bad("missing IHDR");
  const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
  uLongf raw_len = static_cast<uLongf>((stride + 1) * img.height);
  std::vector<std::uint8_t> raw(raw_len);
  if (uncompress(raw.data(), &raw_len, packed.data(), static_cast<uLong>(packed.size())) != Z_OK ||
      raw_len != raw.size()) {
    throw bad("bad image data");
  }
  img.rgb.resize(stride * img.height);
  for (int y = 0; y < img.height; ++y) {
    const std::uint8_t filter = raw[y * (stride + 1)];
    const std::uint8_t* src = &raw[y * (stride + 1) + 1];
    std::uint8_t* dst = &img.rgb[y * stride];
    const std::uint8_t* up = y ? &img.rgb[(y - 1) * stride] : nullptr;
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= 3 ? dst[i - 3] : 0;
      const int b = up ? up[i] : 0;
      const int c = (up && i >= 3) ? up[i - 3] : 0;
      int pred = 0;
      switch (filter) {
        case 0: pred = 0; break;
        case 1: pred = a; break;
        case 2: pred = b; break;
        case 3: pred = (a + b) / 2; break;
        case 4: {
          const int p = a + b - c, pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
          pred = (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
          break;
        }
        default: throw bad("unknown filter type");
      }
      dst[i] = static_cast<std::uint8_t>(src[i] + pred);
    }
  }
  return img;
}

}  // namespace sensorpen::ecg
