#include "specgate/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace specgate {

const char* to_string(WavFormat f) {
  switch (f) {
    case WavFormat::Pcm16: return "pcm16";
    case WavFormat::Pcm24: return "pcm24";
    case WavFormat::Pcm32: return "pcm32";
    case WavFormat::Float32: return "float32";
  }
  return "?";
}

WavFormat wav_format_from_string(const std::string& name) {
  if (name == "pcm16") return WavFormat::Pcm16;
  if (name == "pcm24") return WavFormat::Pcm24;
  if (name == "pcm32") return WavFormat::Pcm32;
  if (name == "float32") return WavFormat::Float32;
  throw Error(ErrorKind::InvalidParams, "unknown wav format: " + name);
}

namespace {

constexpr std::uint16_t kTagPcm = 1;
constexpr std::uint16_t kTagFloat = 3;
constexpr std::uint16_t kTagExtensible = 0xFFFE;

int bits_of(WavFormat f) {
  switch (f) {
    case WavFormat::Pcm16: return 16;
    case WavFormat::Pcm24: return 24;
    default: return 32;
  }
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  bool has(std::size_t n) const { return pos_ + n <= b_.size(); }
  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }
  std::uint32_t u32() { return static_cast<std::uint32_t>(u16()) | (static_cast<std::uint32_t>(u16()) << 16); }
  std::uint16_t u16() {
    need(2);
    const std::uint16_t v = static_cast<std::uint16_t>(b_[pos_] | (b_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::string tag() {
    need(4);
    std::string s(reinterpret_cast<const char*>(&b_[pos_]), 4);
    pos_ += 4;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (!has(n)) throw Error(ErrorKind::ParseError, "truncated WAV header");
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  put_u16(out, static_cast<std::uint16_t>(v & 0xFFFF));
  put_u16(out, static_cast<std::uint16_t>(v >> 16));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

WavFile decode_wav(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.tag() != "RIFF") throw Error(ErrorKind::ParseError, "missing RIFF tag");
  r.u32();
  if (r.tag() != "WAVE") throw Error(ErrorKind::ParseError, "missing WAVE tag");

  bool have_fmt = false;
  std::uint16_t tag = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  std::size_t data_pos = 0, data_size = 0;
  bool have_data = false;

  while (r.has(8)) {
    const std::string id = r.tag();
    const std::uint32_t size = r.u32();
    const std::size_t body = r.pos();
    if (!r.has(size)) {
      if (id == "data") throw Error(ErrorKind::ParseError, "data chunk extends past end of file");
      break;
    }
    if (id == "fmt ") {
      if (size < 16) throw Error(ErrorKind::ParseError, "fmt chunk too short");
      tag = r.u16();
      channels = r.u16();
      rate = r.u32();
      r.u32();  // byte rate
      block_align = r.u16();
      bits = r.u16();
      if (tag == kTagExtensible) {
        if (size < 40) throw Error(ErrorKind::ParseError, "extensible fmt chunk too short");
        r.u16();  // cbSize
        r.u16();  // valid bits
        r.u32();  // channel mask
        tag = r.u16();  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (id == "data") {
      data_pos = body;
      data_size = size;
      have_data = true;
    }
    r.seek(body + size + (size & 1u));
  }

  if (!have_fmt) throw Error(ErrorKind::ParseError, "missing fmt chunk");
  if (!have_data) throw Error(ErrorKind::ParseError, "missing data chunk");
  if (channels == 0 || rate == 0) throw Error(ErrorKind::ParseError, "zero channels or sample rate");

  WavFile wav;
  if (tag == kTagPcm && bits == 16) wav.format = WavFormat::Pcm16;
  else if (tag == kTagPcm && bits == 24) wav.format = WavFormat::Pcm24;
  else if (tag == kTagPcm && bits == 32) wav.format = WavFormat::Pcm32;
  else if (tag == kTagFloat && bits == 32) wav.format = WavFormat::Float32;
  else throw Error(ErrorKind::Unsupported, "unsupported WAV encoding (tag " + std::to_string(tag) +
                                               ", " + std::to_string(bits) + " bits)");

  const std::size_t width = static_cast<std::size_t>(bits / 8);
  if (block_align != width * channels) throw Error(ErrorKind::ParseError, "inconsistent block align");
  const std::size_t frames = data_size / block_align;

  SampleMatrix s(channels, static_cast<Eigen::Index>(frames));
  const double scale = std::ldexp(1.0, -(bits - 1));
  const std::uint8_t* p = bytes.data() + data_pos;
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c, p += width) {
      double v;
      if (wav.format == WavFormat::Float32) {
        const std::uint32_t u = p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
        v = static_cast<double>(std::bit_cast<float>(u));
      } else {
        std::uint32_t u = 0;
        for (std::size_t k = 0; k < width; ++k) u |= static_cast<std::uint32_t>(p[k]) << (8 * k);
        // Sign-extend from `bits`.
        const std::int64_t sv = static_cast<std::int64_t>(static_cast<std::int32_t>(u << (32 - bits)) >> (32 - bits));
        v = static_cast<double>(sv) * scale;
      }
      s(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = v;
    }
  }
  wav.signal = Signal(std::move(s), static_cast<int>(rate));
  return wav;
}

std::vector<std::uint8_t> encode_wav(const Signal& signal, WavFormat format, std::size_t* clipped) {
  if (signal.empty()) throw Error(ErrorKind::ParseError, "refusing to write a zero-length WAV");
  if (signal.sample_rate <= 0) throw Error(ErrorKind::InvalidInput, "sample rate must be positive");
  if (!signal.samples.allFinite()) throw Error(ErrorKind::InvalidInput, "non-finite sample");
  if (signal.channels() > 0xFFFF) throw Error(ErrorKind::InvalidInput, "too many channels");

  const int bits = bits_of(format);
  const std::size_t width = static_cast<std::size_t>(bits / 8);
  const auto channels = static_cast<std::size_t>(signal.channels());
  const auto frames = static_cast<std::size_t>(signal.length());
  const std::size_t data_size = width * channels * frames;
  if (data_size > 0xFFFFFFFFull - 44) throw Error(ErrorKind::InvalidInput, "signal too large for RIFF");

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size + 1);
  put_tag(out, "RIFF");
  put_u32(out, static_cast<std::uint32_t>(36 + data_size + (data_size & 1u)));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format == WavFormat::Float32 ? kTagFloat : kTagPcm);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(signal.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(signal.sample_rate * width * channels));
  put_u16(out, static_cast<std::uint16_t>(width * channels));
  put_u16(out, static_cast<std::uint16_t>(bits));
  put_tag(out, "data");
  put_u32(out, static_cast<std::uint32_t>(data_size));

  std::size_t clips = 0;
  const double scale = std::ldexp(1.0, bits - 1);
  const double lo = -scale;
  const double hi = scale - 1.0;
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      double v = signal.samples(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i));
      if (v > 1.0 || v < -1.0) {
        ++clips;
        v = std::clamp(v, -1.0, 1.0);
      }
      std::uint32_t u;
      if (format == WavFormat::Float32) {
        u = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      } else {
        const double q = std::clamp(std::round(v * scale), lo, hi);
        u = static_cast<std::uint32_t>(static_cast<std::int32_t>(q));
      }
      for (std::size_t k = 0; k < width; ++k) out.push_back(static_cast<std::uint8_t>(u >> (8 * k)));
    }
  }
  if (data_size & 1u) out.push_back(0);
  if (clipped) *clipped = clips;
  return out;
}

WavFile read_wav_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::IoError, "read failed: " + path.string());
  return decode_wav(bytes);
}

Signal read_wav(const std::filesystem::path& path) { return read_wav_file(path).signal; }

std::size_t write_wav(const std::filesystem::path& path, const Signal& signal, WavFormat format) {
  std::size_t clipped = 0;
  const std::vector<std::uint8_t> bytes = encode_wav(signal, format, &clipped);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
  return clipped;
}

}  // namespace specgate
