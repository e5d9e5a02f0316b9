#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace shellstop {

// ---------------------------------------------------------------------------
// Minimal zip container support: enough to list members from the central
// directory and to rewrite an archive with a member removed while copying
// every surviving local record byte for byte. Zip64 archives are rejected.
// ---------------------------------------------------------------------------

struct ZipError : std::runtime_error {
  enum class Kind { NotAnArchive, MemberNotFound, Unsupported, Io };
  Kind kind;
  ZipError(Kind k, const std::string& what) : std::runtime_error(what), kind(k) {}
};

inline constexpr std::string_view kJndiLookupMember =
    "org/apache/logging/log4j/core/lookup/JndiLookup.class";

namespace zipdetail {

inline constexpr std::uint32_t kLocalSig = 0x04034b50;    // PK\x03\x04
inline constexpr std::uint32_t kCentralSig = 0x02014b50;  // PK\x01\x02
inline constexpr std::uint32_t kEocdSig = 0x06054b50;     // PK\x05\x06
inline constexpr std::uint32_t kDescSig = 0x08074b50;     // PK\x07\x08

inline std::uint16_t rd16(std::string_view b, std::size_t at) {
  if (at + 2 > b.size()) throw ZipError(ZipError::Kind::NotAnArchive, "truncated archive");
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

inline std::uint32_t rd32(std::string_view b, std::size_t at) {
  if (at + 4 > b.size()) throw ZipError(ZipError::Kind::NotAnArchive, "truncated archive");
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

inline void wr16(std::string& b, std::size_t at, std::uint16_t v) {
  b[at] = static_cast<char>(v & 0xFF);
  b[at + 1] = static_cast<char>(v >> 8);
}

inline void wr32(std::string& b, std::size_t at, std::uint32_t v) {
  b[at] = static_cast<char>(v & 0xFF);
  b[at + 1] = static_cast<char>((v >> 8) & 0xFF);
  b[at + 2] = static_cast<char>((v >> 16) & 0xFF);
  b[at + 3] = static_cast<char>((v >> 24) & 0xFF);
}

struct Entry {
  std::string name;
  std::uint16_t flags = 0;
  std::uint32_t compressed_size = 0;
  std::uint32_t local_offset = 0;
  std::size_t central_offset = 0;  // where this entry's central record starts
  std::size_t central_size = 0;
  std::size_t local_span = 0;  // local header + payload (+ data descriptor)
};

struct Archive {
  std::string bytes;
  std::vector<Entry> entries;     // central directory order
  std::size_t eocd_offset = 0;    // EOCD record incl. comment runs to EOF
  std::size_t central_start = 0;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ZipError(ZipError::Kind::Io, "cannot open " + p.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw ZipError(ZipError::Kind::Io, "cannot read " + p.string());
  return bytes;
}

inline std::size_t find_eocd(std::string_view b) {
  if (b.size() < 22) throw ZipError(ZipError::Kind::NotAnArchive, "too small for an archive");
  const std::size_t scan_floor = b.size() > 22 + 65535 ? b.size() - 22 - 65535 : 0;
  for (std::size_t pos = b.size() - 22 + 1; pos-- > scan_floor;) {
    if (rd32(b, pos) != kEocdSig) continue;
    const std::uint16_t comment_len = rd16(b, pos + 20);
    if (pos + 22 + comment_len == b.size()) return pos;
  }
  throw ZipError(ZipError::Kind::NotAnArchive, "end-of-central-directory record not found");
}

inline std::size_t local_span(std::string_view b, const Entry& e) {
  const std::size_t off = e.local_offset;
  if (rd32(b, off) != kLocalSig)
    throw ZipError(ZipError::Kind::NotAnArchive, "bad local header for " + e.name);
  const std::uint16_t nlen = rd16(b, off + 26);
  const std::uint16_t elen = rd16(b, off + 28);
  std::size_t span = 30 + nlen + elen + e.compressed_size;
  if (e.flags & 0x8) {
    // Streamed entry: sizes live in a trailing data descriptor, with or
    // without its optional signature.
    std::size_t desc = off + span;
    if (desc + 4 <= b.size() && rd32(b, desc) == kDescSig)
      span += 16;
    else
      span += 12;
  }
  if (off + span > b.size())
    throw ZipError(ZipError::Kind::NotAnArchive, "member data overruns file: " + e.name);
  return span;
}

inline Archive load(const std::filesystem::path& p) {
  Archive a;
  a.bytes = slurp(p);
  const std::string_view b = a.bytes;
  a.eocd_offset = find_eocd(b);
  const std::uint16_t disk_entries = rd16(b, a.eocd_offset + 8);
  const std::uint16_t total_entries = rd16(b, a.eocd_offset + 10);
  const std::uint32_t cd_size = rd32(b, a.eocd_offset + 12);
  const std::uint32_t cd_offset = rd32(b, a.eocd_offset + 16);
  if (total_entries == 0xFFFF || cd_size == 0xFFFFFFFF || cd_offset == 0xFFFFFFFF)
    throw ZipError(ZipError::Kind::Unsupported, "zip64 archives are not supported");
  if (disk_entries != total_entries)
    throw ZipError(ZipError::Kind::Unsupported, "multi-disk archives are not supported");
  if (cd_offset + cd_size > a.eocd_offset)
    throw ZipError(ZipError::Kind::NotAnArchive, "central directory overruns archive");
  a.central_start = cd_offset;

  std::size_t pos = cd_offset;
  for (std::uint16_t i = 0; i < total_entries; ++i) {
    if (rd32(b, pos) != kCentralSig)
      throw ZipError(ZipError::Kind::NotAnArchive, "bad central directory entry");
    Entry e;
    e.flags = rd16(b, pos + 8);
    e.compressed_size = rd32(b, pos + 20);
    const std::uint16_t nlen = rd16(b, pos + 28);
    const std::uint16_t elen = rd16(b, pos + 30);
    const std::uint16_t clen = rd16(b, pos + 32);
    e.local_offset = rd32(b, pos + 42);
    if (pos + 46 + nlen > b.size())
      throw ZipError(ZipError::Kind::NotAnArchive, "truncated central directory");
    e.name = std::string(b.substr(pos + 46, nlen));
    e.central_offset = pos;
    e.central_size = 46 + std::size_t(nlen) + elen + clen;
    e.local_span = local_span(b, e);
    a.entries.push_back(std::move(e));
    pos += a.entries.back().central_size;
  }
  return a;
}

}  // namespace zipdetail

/// Member names from the central directory, in directory order.
inline std::vector<std::string> list_members(const std::filesystem::path& archive) {
  auto a = zipdetail::load(archive);
  std::vector<std::string> names;
  names.reserve(a.entries.size());
  for (const auto& e : a.entries) names.push_back(e.name);
  return names;
}

struct StripReport {
  std::vector<std::string> removed;
  std::vector<std::string> kept;
  bool member_was_absent = false;
};

/// Rewrites `archive` into `output` without `member`. Surviving local
/// records (header, payload, any data descriptor) are copied verbatim, so
/// compressed bytes stay identical; only central-directory offsets change.
inline StripReport strip_member(const std::filesystem::path& archive, std::string_view member,
                                const std::filesystem::path& output, bool ok_if_absent = false) {
  using namespace zipdetail;
  Archive a = load(archive);
  StripReport report;

  std::vector<const Entry*> kept;
  for (const auto& e : a.entries) {
    if (e.name == member)
      report.removed.push_back(e.name);
    else
      kept.push_back(&e);
  }
  if (report.removed.empty()) {
    if (!ok_if_absent)
      throw ZipError(ZipError::Kind::MemberNotFound,
                     std::string(member) + " not present in " + archive.string());
    report.member_was_absent = true;
  }

  // Local records keep their physical order; the central directory keeps its
  // logical order.
  std::vector<const Entry*> by_offset = kept;
  std::sort(by_offset.begin(), by_offset.end(),
            [](const Entry* x, const Entry* y) { return x->local_offset < y->local_offset; });

  std::string out;
  out.reserve(a.bytes.size());
  std::vector<std::pair<const Entry*, std::uint32_t>> new_offsets;
  for (const Entry* e : by_offset) {
    new_offsets.emplace_back(e, static_cast<std::uint32_t>(out.size()));
    out.append(a.bytes, e->local_offset, e->local_span);
  }
  const std::uint32_t cd_start = static_cast<std::uint32_t>(out.size());
  for (const Entry* e : kept) {
    const std::size_t rec_at = out.size();
    out.append(a.bytes, e->central_offset, e->central_size);
    for (const auto& [entry, off] : new_offsets) {
      if (entry == e) {
        wr32(out, rec_at + 42, off);
        break;
      }
    }
    report.kept.push_back(e->name);
  }
  const std::uint32_t cd_size = static_cast<std::uint32_t>(out.size()) - cd_start;
  const std::size_t eocd_at = out.size();
  out.append(a.bytes, a.eocd_offset, a.bytes.size() - a.eocd_offset);
  wr16(out, eocd_at + 8, static_cast<std::uint16_t>(kept.size()));
  wr16(out, eocd_at + 10, static_cast<std::uint16_t>(kept.size()));
  wr32(out, eocd_at + 12, cd_size);
  wr32(out, eocd_at + 16, cd_start);

  std::ofstream of(output, std::ios::binary | std::ios::trunc);
  if (!of) throw ZipError(ZipError::Kind::Io, "cannot open " + output.string() + " for writing");
  of.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!of) throw ZipError(ZipError::Kind::Io, "short write to " + output.string());
  return report;
}

}  // namespace shellstop
