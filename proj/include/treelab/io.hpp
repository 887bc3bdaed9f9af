#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "treelab/spaces.hpp"
#include "treelab/tree.hpp"

namespace treelab {

// Reports and artifacts use ordered_json so emitted field order is fixed and
// reruns are byte-identical.
using Json = nlohmann::ordered_json;

std::string format_double(double x);  // shortest round-trip decimal

// Keys serialize as JSON arrays; as object keys they use the compact dump of
// that array, e.g. "[1,2]".
std::string key_to_string(const Key& k);
Key key_from_string(const std::string& s);

Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json node_to_json(const TreeNode& s);
TreeNode node_from_json(const Json& j);

Json tree_to_json(const HyperbolicTree& t);
HyperbolicTree tree_from_json(const Json& j);

Json space_to_json(const SpaceModel& space);
SpaceModel space_from_json(const Json& j);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);
Json read_json_file(const std::filesystem::path& path);

// FNV-1a 64-bit content hash, hex-encoded; used for artifact checksums in
// manifests (reproducibility bookkeeping, not cryptography).
std::string fnv1a64_hex(const std::string& bytes);

}  // namespace treelab
