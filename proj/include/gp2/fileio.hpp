#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gp2 {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace gp2
