#include "resotact/wav.hpp"

#include "resotact/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

namespace resotact {

namespace {

constexpr std::uint16_t kFormatPcm = 1;

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0] | (p[1] << 8) | (p[2] << 16) |
                                      (static_cast<std::uint32_t>(p[3]) << 24));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

} // namespace

AudioBuffer read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("read_wav: cannot open '" + path + "'");
    std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());

    auto need = [&](std::size_t offset, std::size_t count, const char* what) {
        if (offset + count > data.size())
            throw FormatError(std::string("read_wav: truncated file, expected ") + what +
                                  " at byte " + std::to_string(offset),
                              static_cast<long>(offset));
    };

    need(0, 12, "RIFF header");
    if (std::memcmp(data.data(), "RIFF", 4) != 0)
        throw FormatError("read_wav: missing RIFF tag at byte 0", 0);
    if (std::memcmp(data.data() + 8, "WAVE", 4) != 0)
        throw FormatError("read_wav: missing WAVE tag at byte 8", 8);

    std::uint16_t channels = 0, bits = 0, format = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;

    std::size_t pos = 12;
    while (pos + 8 <= data.size()) {
        need(pos, 8, "chunk header");
        const std::uint32_t size = read_u32(data.data() + pos + 4);
        const bool is_fmt = std::memcmp(data.data() + pos, "fmt ", 4) == 0;
        const bool is_data = std::memcmp(data.data() + pos, "data", 4) == 0;
        pos += 8;
        if (is_fmt) {
            need(pos, 16, "fmt chunk body");
            format = read_u16(data.data() + pos);
            channels = read_u16(data.data() + pos + 2);
            rate = read_u32(data.data() + pos + 4);
            bits = read_u16(data.data() + pos + 14);
            have_fmt = true;
        } else if (is_data) {
            if (!have_fmt)
                throw FormatError("read_wav: data chunk before fmt at byte " +
                                      std::to_string(pos - 8),
                                  static_cast<long>(pos - 8));
            if (format != kFormatPcm)
                throw FormatError("read_wav: only PCM supported");
            if (channels != 1)
                throw FormatError("read_wav: only mono supported");
            if (bits != 16)
                throw FormatError("read_wav: only 16-bit samples supported");
            need(pos, size, "data chunk body");

            AudioBuffer out;
            out.sample_rate = static_cast<int>(rate);
            const std::size_t count = size / 2;
            out.samples.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                const std::int16_t s =
                    static_cast<std::int16_t>(read_u16(data.data() + pos + 2 * i));
                out.samples[i] = static_cast<double>(s) / 32768.0;
            }
            return out;
        }
        pos += size + (size & 1); // chunks are word-aligned
    }
    throw FormatError("read_wav: no data chunk found (file ends at byte " +
                          std::to_string(data.size()) + ")",
                      static_cast<long>(data.size()));
}

void write_wav(const std::string& path, const AudioBuffer& audio) {
    const std::size_t n = audio.samples.size();
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(n * 2);

    std::vector<unsigned char> out;
    out.reserve(44 + data_bytes);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});
    out.insert(out.end(), {'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, kFormatPcm);
    put_u16(out, 1); // mono
    put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
    put_u16(out, 2);  // block align
    put_u16(out, 16); // bits per sample
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_bytes);
    for (double v : audio.samples) {
        const long q = std::lround(v * 32768.0);
        const std::int16_t s =
            static_cast<std::int16_t>(std::clamp<long>(q, -32768, 32767));
        put_u16(out, static_cast<std::uint16_t>(s));
    }

    const std::filesystem::path target(path);
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f)
            throw FormatError("write_wav: cannot open '" + tmp.string() + "'");
        f.write(reinterpret_cast<const char*>(out.data()),
                static_cast<std::streamsize>(out.size()));
        if (!f)
            throw FormatError("write_wav: short write to '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, target);
}

} // namespace resotact
