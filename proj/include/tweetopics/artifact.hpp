#pragma once

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tweetopics/error.hpp"
#include "tweetopics/text_io.hpp"

namespace tweetopics {

inline constexpr std::string_view artifact_magic = "#tweetopics-artifact";
inline constexpr int artifact_version = 1;

// First line of every artifact file:
//   #tweetopics-artifact v1 kind=<kind> config=<hash> content=<hash> upstream=<kind>:<hash>,...
// `content` hashes everything after the header line; downstream artifacts
// record it under `upstream` so stale combinations can be detected.
struct ArtifactHeader {
  int version = artifact_version;
  std::string kind;
  std::string config;
  std::string content;
  std::vector<std::pair<std::string, std::string>> upstream;

  std::optional<std::string> upstream_of(std::string_view k) const {
    for (const auto& [name, hash] : upstream)
      if (name == k) return hash;
    return std::nullopt;
  }
};

struct Artifact {
  std::filesystem::path path;
  ArtifactHeader header;
  std::string body;
  bool has_header = false;
};

inline std::string format_header(const ArtifactHeader& h) {
  std::string out(artifact_magic);
  out += " v" + std::to_string(h.version);
  out += " kind=" + h.kind;
  out += " config=" + (h.config.empty() ? std::string("-") : h.config);
  out += " content=" + h.content;
  out += " upstream=";
  if (h.upstream.empty()) {
    out += '-';
  } else {
    for (std::size_t i = 0; i < h.upstream.size(); ++i) {
      if (i) out += ',';
      out += h.upstream[i].first + ':' + h.upstream[i].second;
    }
  }
  return out;
}

inline ArtifactHeader parse_header(std::string_view line, const std::filesystem::path& path) {
  const auto fields = split_ws(line);
  if (fields.size() < 2 || fields[0] != artifact_magic)
    throw DataError(path.string() + ": missing artifact header");
  ArtifactHeader h;
  if (fields[1].size() < 2 || fields[1][0] != 'v')
    throw DataError(path.string() + ": bad artifact version field");
  h.version = parse_integer<int>(fields[1].substr(1));
  if (h.version != artifact_version)
    throw DataError(path.string() + ": unsupported artifact version " + std::to_string(h.version));
  for (std::size_t i = 2; i < fields.size(); ++i) {
    const auto eq = fields[i].find('=');
    if (eq == std::string_view::npos) throw DataError(path.string() + ": bad header field");
    const auto key = fields[i].substr(0, eq);
    const auto value = fields[i].substr(eq + 1);
    if (key == "kind") {
      h.kind = value;
    } else if (key == "config") {
      h.config = value == "-" ? std::string() : std::string(value);
    } else if (key == "content") {
      h.content = value;
    } else if (key == "upstream" && value != "-") {
      for (auto item : split(value, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) throw DataError(path.string() + ": bad upstream entry");
        h.upstream.emplace_back(item.substr(0, colon), item.substr(colon + 1));
      }
    }
  }
  return h;
}

inline ArtifactHeader write_artifact(const std::filesystem::path& path, std::string kind,
                                     std::string config_hash,
                                     std::vector<std::pair<std::string, std::string>> upstream,
                                     std::string_view body) {
  ArtifactHeader h;
  h.kind = std::move(kind);
  h.config = std::move(config_hash);
  h.content = content_hash(body);
  h.upstream = std::move(upstream);
  std::string contents = format_header(h);
  contents += '\n';
  contents += body;
  write_file(path, contents);
  return h;
}

// Reads an artifact. Files without a header are accepted as bare bodies
// (e.g. hand-made inputs), but then carry no lineage.
inline Artifact read_artifact(const std::filesystem::path& path, std::string_view expected_kind = {}) {
  Artifact a;
  a.path = path;
  std::string contents = read_file(path);
  if (std::string_view(contents).starts_with(artifact_magic)) {
    const auto nl = contents.find('\n');
    const std::string_view line =
        strip_cr(std::string_view(contents).substr(0, nl == std::string::npos ? contents.size() : nl));
    a.header = parse_header(line, path);
    a.has_header = true;
    a.body = nl == std::string::npos ? std::string() : contents.substr(nl + 1);
    if (!expected_kind.empty() && a.header.kind != expected_kind)
      throw DataError(path.string() + ": expected a '" + std::string(expected_kind) +
                      "' artifact, found '" + a.header.kind + "'");
    if (content_hash(a.body) != a.header.content)
      throw DataError(path.string() + ": content hash mismatch (file edited or truncated)");
  } else {
    a.body = std::move(contents);
    a.header.kind = std::string(expected_kind);
    a.header.content = content_hash(a.body);
  }
  return a;
}

// Throws DependencyError unless `child` was produced from exactly `parent`.
inline void require_lineage(const Artifact& child, const Artifact& parent) {
  if (!child.has_header)
    throw DependencyError("stale artifact: " + child.path.string() + " has no lineage header");
  const auto recorded = child.header.upstream_of(parent.header.kind);
  if (!recorded)
    throw DependencyError("stale artifact: " + child.path.string() + " does not record a '" +
                          parent.header.kind + "' upstream");
  if (*recorded != parent.header.content)
    throw DependencyError("stale artifact: " + parent.path.string() + " does not match the '" +
                          parent.header.kind + "' that " + child.path.string() + " was built from");
}

}  // namespace tweetopics
