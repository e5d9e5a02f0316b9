#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "shellstop/zip.hpp"
#include "support/zip_builder.hpp"

using namespace shellstop;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  const fs::path dir =
      fs::temp_directory_path() / ("shellstop-zip-" + std::to_string(::getpid()) + "-" +
                                   std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("list_members reads the central directory in order") {
  const auto dir = temp_dir();
  const auto jar = dir / "log4j-core-2.14.1.jar";
  zipfix::write_file(jar, zipfix::log4j_core_members());
  const auto names = list_members(jar);
  REQUIRE(names.size() == 3);
  CHECK(names[0] == "META-INF/MANIFEST.MF");
  CHECK(names[1] == "org/apache/logging/log4j/core/Logger.class");
  CHECK(names[2] == std::string(kJndiLookupMember));
}

TEST_CASE("list_members on an empty container") {
  const auto dir = temp_dir();
  const auto z = dir / "empty.zip";
  zipfix::write_file(z, {});
  CHECK(list_members(z).empty());
}

TEST_CASE("non-archives are rejected") {
  const auto dir = temp_dir();
  const auto txt = dir / "notes.txt";
  std::ofstream(txt) << "this is not an archive, just text long enough to scan\n";
  try {
    list_members(txt);
    FAIL("expected ZipError");
  } catch (const ZipError& e) {
    CHECK(e.kind == ZipError::Kind::NotAnArchive);
  }

  const auto trunc = dir / "trunc.jar";
  zipfix::write_file(trunc, zipfix::log4j_core_members());
  auto bytes = slurp(trunc);
  bytes.resize(bytes.size() / 2);
  std::ofstream(trunc, std::ios::binary | std::ios::trunc) << bytes;
  CHECK_THROWS_AS(list_members(trunc), ZipError);
}

TEST_CASE("strip_member removes exactly the lookup class") {
  const auto dir = temp_dir();
  const auto jar = dir / "log4j-core-2.14.1.jar";
  const auto out = dir / "log4j-core-2.14.1.stripped.jar";
  zipfix::write_file(jar, zipfix::log4j_core_members());

  const auto report = strip_member(jar, kJndiLookupMember, out);
  REQUIRE(report.removed == std::vector<std::string>{std::string(kJndiLookupMember)});
  CHECK(report.kept.size() == 2);

  const auto names = list_members(out);
  REQUIRE(names.size() == 2);
  for (const auto& n : names) CHECK(n != std::string(kJndiLookupMember));
}

TEST_CASE("surviving payload bytes are copied verbatim") {
  const auto dir = temp_dir();
  const auto jar = dir / "in.jar";
  const auto out = dir / "out.jar";
  const auto members = zipfix::log4j_core_members();
  zipfix::write_file(jar, members);
  strip_member(jar, kJndiLookupMember, out);

  // The two survivors are laid out first in both files; their local records
  // must be bit-identical.
  const std::string before = slurp(jar);
  const std::string after = slurp(out);
  const std::string survivor_payload = before.substr(0, before.find(members[2].name) - 30);
  CHECK(after.substr(0, survivor_payload.size()) == survivor_payload);
}

TEST_CASE("missing member is an error unless tolerated") {
  const auto dir = temp_dir();
  const auto jar = dir / "plain.jar";
  const auto out = dir / "plain.out.jar";
  zipfix::write_file(jar, {{"a.txt", "alpha", false, false}, {"b.txt", "beta", true, false}});

  try {
    strip_member(jar, kJndiLookupMember, out);
    FAIL("expected ZipError");
  } catch (const ZipError& e) {
    CHECK(e.kind == ZipError::Kind::MemberNotFound);
  }

  const auto report = strip_member(jar, kJndiLookupMember, out, /*ok_if_absent=*/true);
  CHECK(report.member_was_absent);
  CHECK(report.removed.empty());
  CHECK(list_members(out) == std::vector<std::string>{"a.txt", "b.txt"});
}

TEST_CASE("removing from a two-member archive leaves one verbatim member") {
  const auto dir = temp_dir();
  const auto jar = dir / "two.jar";
  const auto out = dir / "one.jar";
  zipfix::write_file(jar, {{"keep.txt", "keep these exact bytes", false, false},
                           {"org/apache/logging/log4j/core/lookup/JndiLookup.class",
                            "drop this", true, false}});
  const auto report = strip_member(jar, kJndiLookupMember, out);
  CHECK(report.removed.size() == 1);
  REQUIRE(list_members(out) == std::vector<std::string>{"keep.txt"});

  // The survivor's local record leads both archives; it must match bit for bit.
  const std::string before = slurp(jar);
  const std::string after = slurp(out);
  const std::size_t span = 30 + std::string("keep.txt").size() + std::string("keep these exact bytes").size();
  CHECK(after.substr(0, span) == before.substr(0, span));
  CHECK(after.find("keep these exact bytes") != std::string::npos);
}

TEST_CASE("streamed entries with data descriptors survive a strip") {
  const auto dir = temp_dir();
  const auto jar = dir / "streamed.jar";
  const auto out = dir / "streamed.out.jar";
  zipfix::write_file(jar, {
                              {"first.bin", std::string(200, 'x'), true, true},
                              {"drop.me", "payload", false, false},
                              {"last.bin", std::string(64, 'y'), false, true},
                          });
  const auto report = strip_member(jar, "drop.me", out);
  CHECK(report.removed.size() == 1);
  CHECK(list_members(out) == std::vector<std::string>{"first.bin", "last.bin"});
}

TEST_CASE("stripped output stays readable by an unrelated reader") {
  const auto dir = temp_dir();
  const auto jar = dir / "check.jar";
  const auto out = dir / "check.out.jar";
  zipfix::write_file(jar, zipfix::log4j_core_members());
  strip_member(jar, kJndiLookupMember, out);

  const std::string cmd = "python3 -m zipfile -t '" + out.string() + "' >/dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
}
